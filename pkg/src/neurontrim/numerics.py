"""Dense float64 linear algebra and seeded random sampling.

All arrays in the package are C-ordered float64 ndarrays; the helpers here
validate shapes and keep results finite.  Randomness comes from numpy's
PCG64 generator seeded through ``SeedSequence`` (Gaussian draws use the
generator's ziggurat method), which gives two guarantees the experiments
rely on:

* the same 64-bit seed reproduces the same stream bit-for-bit on every
  platform, and
* independent sub-streams can be derived from one root seed with
  ``derive_rng(seed, *key)``, so parallel trials never share state.
"""

from __future__ import annotations

import re
from typing import Callable

import numpy as np

from .errors import ArgumentError, DimensionError

Rng = np.random.Generator


def make_rng(seed: int) -> Rng:
    """Root PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def derive_rng(seed: int, *key: int) -> Rng:
    """Independent PCG64 stream identified by ``key`` under one root seed.

    Distinct keys yield statistically independent streams; the same
    (seed, key) pair always yields the same stream.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate ``values`` as a finite 2-D float64 matrix and return it."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if rows is not None and a.shape[0] != rows:
        raise DimensionError(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise DimensionError(f"expected {cols} cols, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise ArgumentError("matrix contains non-finite entries")
    return a


def as_vector(values, length: int | None = None) -> np.ndarray:
    """Validate ``values`` as a finite 1-D float64 vector and return it."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise DimensionError(f"expected length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ArgumentError("vector contains non-finite entries")
    return v


# ---------------------------------------------------------------------------
# sampling


def unit_sphere_columns(rng: Rng, m: int, n: int) -> np.ndarray:
    """m-by-n matrix whose columns are i.i.d. uniform on the unit sphere.

    Each column is a standard Gaussian draw divided by its Euclidean norm,
    so every column has norm 1 exactly (up to one rounding of the division).
    """
    if m < 1 or n < 1:
        raise DimensionError(f"dimensions must be positive, got {m}x{n}")
    g = rng.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=0)
    # a zero column has probability ~0 but would poison everything downstream
    while np.any(norms == 0.0):
        dead = norms == 0.0
        g[:, dead] = rng.standard_normal((m, int(dead.sum())))
        norms = np.linalg.norm(g, axis=0)
    return g / norms


_DIST_RE = re.compile(r"^\s*(uniform|gaussian)\s*\(\s*([^,\s]+)\s*,\s*([^,\s)]+)\s*\)\s*$")


def parse_distribution(spec) -> Callable[[Rng, int], np.ndarray]:
    """Turn a distribution spec into a sampler ``f(rng, size)``.

    Accepted specs: ``"uniform(a,b)"`` and ``"gaussian(mu,sigma)"``, or the
    equivalent tuples ``("uniform", a, b)`` / ``("gaussian", mu, sigma)``.
    """
    if isinstance(spec, str):
        m = _DIST_RE.match(spec)
        if not m:
            raise ArgumentError(f"unrecognised distribution spec {spec!r}")
        kind, p1, p2 = m.group(1), float(m.group(2)), float(m.group(3))
    else:
        try:
            kind, p1, p2 = spec[0], float(spec[1]), float(spec[2])
        except (TypeError, IndexError, ValueError) as exc:
            raise ArgumentError(f"unrecognised distribution spec {spec!r}") from exc
    if kind == "uniform":
        if p2 < p1:
            raise ArgumentError(f"uniform({p1},{p2}) has empty support")
        return lambda rng, size: rng.uniform(p1, p2, size=size)
    if kind == "gaussian":
        if p2 < 0:
            raise ArgumentError(f"gaussian sigma must be >= 0, got {p2}")
        return lambda rng, size: rng.normal(p1, p2, size=size)
    raise ArgumentError(f"unrecognised distribution kind {kind!r}")


def sparse_vector(rng: Rng, n: int, d: int, magnitude_dist) -> np.ndarray:
    """Length-n vector with exactly d nonzeros at uniform random positions.

    Nonzero magnitudes are drawn from ``magnitude_dist`` (see
    :func:`parse_distribution`); a draw that happens to be exactly zero is
    redrawn so the support size is exactly d.
    """
    if n < 0 or d < 0 or d > n:
        raise ArgumentError(f"need 0 <= d <= n, got d={d}, n={n}")
    sample = parse_distribution(magnitude_dist)
    x = np.zeros(n)
    if d == 0:
        return x
    support = rng.choice(n, size=d, replace=False)
    values = sample(rng, d)
    while np.any(values == 0.0):
        dead = values == 0.0
        values[dead] = sample(rng, int(dead.sum()))
    x[support] = values
    return x


# ---------------------------------------------------------------------------
# elementary matrix operations
#
# Internally the package uses numpy operators directly; these named wrappers
# add the shape diagnostics the public contracts promise.


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot add shapes {a.shape} and {b.shape}")
    return a + b


def scale(a: np.ndarray, c: float) -> np.ndarray:
    return as_matrix(a) * float(c)


def transpose(a: np.ndarray) -> np.ndarray:
    return as_matrix(a).T.copy()


def elementwise_map(a: np.ndarray, fn) -> np.ndarray:
    out = np.asarray(fn(as_matrix(a)), dtype=np.float64)
    if out.shape != a.shape:
        raise DimensionError(f"map changed shape {a.shape} -> {out.shape}")
    return out
