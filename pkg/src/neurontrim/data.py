"""Dataset construction: synthetic sparse regression, IDX image files, views.

The sparse-regression generator mirrors the classic compressive-sensing
benchmark: a feature matrix with unit-norm columns, a coefficient vector
with a handful of nonzeros, targets = features @ coefficients + noise.
Image data uses the big-endian IDX container (magic 0x803 for images,
0x801 for labels); a bitmap-font generator can synthesise a digit corpus
with the same layout when no real files are at hand.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError, DataFormatError, DimensionError
from .numerics import Rng, sparse_vector, unit_sphere_columns

TASKS = ("regression", "classification", "reconstruction")


@dataclass
class Dataset:
    """Paired inputs and targets (matrix targets or integer class labels)."""

    inputs: np.ndarray
    targets: np.ndarray | None = None
    classes: np.ndarray | None = None
    task: str = "regression"
    name: str = ""

    def __post_init__(self):
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        if self.task not in TASKS:
            raise ArgumentError(f"unknown task {self.task!r}")
        if self.task == "classification":
            if self.classes is None:
                raise ArgumentError("classification dataset needs class labels")
            self.classes = np.asarray(self.classes, dtype=np.int64)
            if self.classes.shape[0] != self.inputs.shape[0]:
                raise DimensionError(
                    f"{self.inputs.shape[0]} inputs but {self.classes.shape[0]} labels"
                )
        else:
            if self.targets is None:
                raise ArgumentError(f"{self.task} dataset needs targets")
            self.targets = np.ascontiguousarray(self.targets, dtype=np.float64)
            if self.targets.shape[0] != self.inputs.shape[0]:
                raise DimensionError(
                    f"{self.inputs.shape[0]} inputs but {self.targets.shape[0]} targets"
                )

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def metric_kind(self) -> str:
        return "accuracy" if self.task == "classification" else "nmse"


# ---------------------------------------------------------------------------
# synthetic sparse regression


@dataclass
class SparseRegressionSpec:
    n_features: int = 20
    n_nonzero: int = 2
    n_train: int = 500
    n_test: int = 500
    noise_sigma: float = 0.01
    magnitude_dist: str = "gaussian(0,5)"

    def __post_init__(self):
        if self.n_nonzero > self.n_features:
            raise ArgumentError(
                f"n_nonzero={self.n_nonzero} exceeds n_features={self.n_features}"
            )
        if self.n_train != self.n_test:
            raise ArgumentError("train and test sets must be the same size")
        if self.n_train < 1:
            raise ArgumentError("need at least one sample per split")
        if self.noise_sigma < 0:
            raise ArgumentError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def gen_sparse_regression(
    rng: Rng, spec: SparseRegressionSpec
) -> tuple[Dataset, Dataset, np.ndarray]:
    """Draw one sparse-regression trial; returns (train, test, true coefficients).

    Each row of the feature matrix is one example; columns are unit-norm
    over the full (train + test) sample so the noiseless identity
    ``targets == features @ x0`` holds exactly per split.
    """
    m = spec.n_train + spec.n_test
    phi = unit_sphere_columns(rng, m, spec.n_features)
    x0 = sparse_vector(rng, spec.n_features, spec.n_nonzero, spec.magnitude_dist)
    y = phi @ x0
    if spec.noise_sigma > 0:
        y = y + rng.normal(0.0, spec.noise_sigma, size=m)
    y = y[:, None]
    train = Dataset(phi[: spec.n_train], y[: spec.n_train], task="regression", name="sparse-train")
    test = Dataset(phi[spec.n_train :], y[spec.n_train :], task="regression", name="sparse-test")
    return train, test, x0


# ---------------------------------------------------------------------------
# IDX image container

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _read_exact(f, count: int, offset: int, what: str) -> bytes:
    buf = f.read(count)
    if len(buf) != count:
        raise DataFormatError(
            f"truncated {what}: wanted {count} bytes at offset {offset}, got {len(buf)}"
        )
    return buf


def load_idx_images(path) -> np.ndarray:
    """Read an IDX image file into a (count, rows, cols) uint8 array."""
    with open(path, "rb") as f:
        header = _read_exact(f, 16, 0, "image header")
        magic, count, rows, cols = struct.unpack(">IIII", header)
        if magic != IDX_IMAGES_MAGIC:
            raise DataFormatError(
                f"bad image magic 0x{magic:08x} at offset 0 (expected 0x{IDX_IMAGES_MAGIC:08x})"
            )
        raw = _read_exact(f, count * rows * cols, 16, "image data")
        if f.read(1):
            raise DataFormatError(f"trailing bytes after offset {16 + len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    """Read an IDX label file into a (count,) uint8 array."""
    with open(path, "rb") as f:
        header = _read_exact(f, 8, 0, "label header")
        magic, count = struct.unpack(">II", header)
        if magic != IDX_LABELS_MAGIC:
            raise DataFormatError(
                f"bad label magic 0x{magic:08x} at offset 0 (expected 0x{IDX_LABELS_MAGIC:08x})"
            )
        raw = _read_exact(f, count, 8, "label data")
        if f.read(1):
            raise DataFormatError(f"trailing bytes after offset {8 + len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8)


def save_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images)
    if images.ndim != 3:
        raise DimensionError(f"expected (count, rows, cols) images, got shape {images.shape}")
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape))
        f.write(np.ascontiguousarray(images, dtype=np.uint8).tobytes())


def save_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DimensionError(f"expected flat labels, got shape {labels.shape}")
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        f.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def load_mnist(images_path, labels_path) -> Dataset:
    """Load an IDX image/label pair as a classification dataset.

    Pixels are flattened row-major and scaled to [0, 1] so logistic output
    units can reconstruct them directly.
    """
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    flat = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(flat, classes=labels.astype(np.int64), task="classification",
                   name=str(images_path))


def dataset_to_idx_arrays(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Quantise a [0,1]-scaled image dataset back to IDX uint8 arrays."""
    side = int(round(np.sqrt(ds.input_dim)))
    if side * side != ds.input_dim:
        raise DimensionError(f"{ds.input_dim} features is not a square image")
    images = np.rint(ds.inputs * 255.0).astype(np.uint8).reshape(len(ds), side, side)
    labels = (ds.classes if ds.classes is not None else np.zeros(len(ds))).astype(np.uint8)
    return images, labels


def as_reconstruction(ds: Dataset) -> Dataset:
    """View a dataset as its own reconstruction target."""
    return Dataset(ds.inputs, targets=ds.inputs.copy(), task="reconstruction",
                   name=ds.name + ":recon" if ds.name else "recon")


# ---------------------------------------------------------------------------
# views and reductions


def subsample(ds: Dataset, rng: Rng, k: int) -> Dataset:
    """Keep k uniformly chosen rows, without replacement, in original order."""
    n = len(ds)
    if not (0 <= k <= n):
        raise ArgumentError(f"cannot subsample {k} of {n} rows")
    idx = np.sort(rng.choice(n, size=k, replace=False))
    return Dataset(
        ds.inputs[idx],
        targets=None if ds.targets is None else ds.targets[idx],
        classes=None if ds.classes is None else ds.classes[idx],
        task=ds.task,
        name=ds.name,
    )


def downscale(ds: Dataset, factor: int) -> Dataset:
    """Average-pool square images by ``factor`` along each side."""
    if factor < 1:
        raise ArgumentError(f"factor must be >= 1, got {factor}")
    side = int(round(np.sqrt(ds.input_dim)))
    if side * side != ds.input_dim:
        raise DimensionError(f"{ds.input_dim} features is not a square image")
    if side % factor != 0:
        raise ArgumentError(f"image side {side} not divisible by factor {factor}")
    out = side // factor
    pooled = (
        ds.inputs.reshape(len(ds), out, factor, out, factor).mean(axis=(2, 4))
    ).reshape(len(ds), out * out)
    new = replace(ds, inputs=pooled, targets=ds.targets)
    if ds.task == "reconstruction":
        new = Dataset(pooled, targets=pooled.copy(), task="reconstruction", name=ds.name)
    return new


def export_csv(ds: Dataset, path) -> None:
    """Write the dataset as CSV: header row, one example per line, targets last."""
    n_in = ds.input_dim
    header = [f"x{i}" for i in range(n_in)]
    if ds.task == "classification":
        header.append("class")
        cols = np.column_stack([ds.inputs, ds.classes.astype(np.float64)])
    else:
        header += [f"y{i}" for i in range(ds.targets.shape[1])]
        cols = np.column_stack([ds.inputs, ds.targets])
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in cols:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# synthetic digit images (MNIST stand-in when no real files are supplied)

_DIGIT_FONT = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}


def synthetic_digit_images(rng: Rng, count: int, side: int = 28, margin: int = 4,
                           max_offset: int = 2) -> Dataset:
    """Generate digit-like images: bitmap glyphs jittered inside a zero border.

    Statistically MNIST-shaped for the experiments here: glyphs sit near the
    centre (within ``max_offset`` pixels, like size-normalised digits), their
    pixels carry intensity noise, and the outer ``margin`` pixels are always
    exactly zero, so border input neurons are genuinely unused.
    """
    if count < 0:
        raise ArgumentError(f"count must be >= 0, got {count}")
    interior = side - 2 * margin
    scale = min(interior // 5, interior // 7)
    if scale < 1:
        raise ArgumentError(f"side {side} too small for margin {margin}")
    scale = min(scale, 2)  # keep glyphs MNIST-like on big canvases
    glyph_w, glyph_h = 5 * scale, 7 * scale
    glyphs = {
        d: np.repeat(np.repeat(np.array([[c == "1" for c in row] for row in rows], dtype=np.float64),
                               scale, axis=0), scale, axis=1)
        for d, rows in _DIGIT_FONT.items()
    }
    cy, cx = (side - glyph_h) // 2, (side - glyph_w) // 2
    y_lo = max(margin, cy - max_offset)
    y_hi = min(side - margin - glyph_h, cy + max_offset)
    x_lo = max(margin, cx - max_offset)
    x_hi = min(side - margin - glyph_w, cx + max_offset)
    images = np.zeros((count, side, side))
    labels = rng.integers(0, 10, size=count)
    for i in range(count):
        g = glyphs[int(labels[i])]
        dy = rng.integers(y_lo, y_hi + 1)
        dx = rng.integers(x_lo, x_hi + 1)
        intensity = rng.uniform(0.65, 1.0)
        jitter = rng.normal(0.0, 0.08, size=g.shape)
        patch = np.clip(g * (intensity + jitter), 0.0, 1.0) * (g > 0)
        images[i, dy : dy + glyph_h, dx : dx + glyph_w] = patch
    # quantise like the on-disk format so load(save(ds)) is the identity
    flat = np.rint(images * 255.0).reshape(count, side * side) / 255.0
    return Dataset(flat, classes=labels, task="classification", name="synthetic-digits")
