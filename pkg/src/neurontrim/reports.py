"""Report emission: summary tables, key=value files, PGM weight images.

Human-readable numbers are printed with 6 significant digits; the
machine-readable key=value files keep full precision (shortest
round-trip repr).  Nothing here embeds timestamps, so re-running an
experiment reproduces every report byte for byte.
"""

from __future__ import annotations

import numpy as np

from .compression import CompressionReport
from .network import Network


def stage_names(num_layers: int) -> list[str]:
    names = ["input"]
    names += [f"hidden{k}" for k in range(1, num_layers)]
    names.append("output")
    return names


def format_report(report: CompressionReport, name: str = "") -> str:
    """The two-block summary table: weight sparsity, then neuron survival."""
    lines = []
    lines.append(f"== compression report: {name} ==" if name else "== compression report ==")
    lines.append(
        f"metric ({report.metric_kind}): no prune {report.metric_before:.6g}"
        f"  pruned {report.metric_after:.6g}"
    )
    lines.append("")
    lines.append(f"{'layer':<10}{'nonzero/total':>18}{'nonzero %':>14}")
    for k, (nz, size) in enumerate(zip(report.layer_nonzeros, report.layer_sizes), start=1):
        lines.append(f"{'W' + str(k):<10}{f'{nz}/{size}':>18}{100.0 * nz / size:>13.6g}%")
    total_nz, total_size = sum(report.layer_nonzeros), sum(report.layer_sizes)
    lines.append(f"{'total':<10}{f'{total_nz}/{total_size}':>18}{report.total_percentage:>13.6g}%")
    lines.append("")
    names = stage_names(len(report.layer_nonzeros))
    lines.append(f"{'neurons':<10}{'surviving/total':>18}{'surviving %':>14}")
    for label, (kept, total) in zip(names, report.neuron_counts):
        lines.append(f"{label:<10}{f'{kept}/{total}':>18}{100.0 * kept / total:>13.6g}%")
    kept = sum(k for k, _ in report.neuron_counts)
    total = sum(t for _, t in report.neuron_counts)
    lines.append(f"{'total':<10}{f'{kept}/{total}':>18}{report.total_neuron_percentage:>13.6g}%")
    lines.append("")
    lines.append(f"compression rate: {report.compression_rate:.6g}")
    return "\n".join(lines) + "\n"


def machine_report(report: CompressionReport, name: str = "") -> str:
    """Full-precision key=value rendering of the same report."""
    pairs: list[tuple[str, object]] = [("name", name), ("metric_kind", report.metric_kind),
                                       ("metric_before", report.metric_before),
                                       ("metric_after", report.metric_after)]
    for k, (nz, size) in enumerate(zip(report.layer_nonzeros, report.layer_sizes), start=1):
        pairs += [(f"w{k}_nonzero", nz), (f"w{k}_size", size),
                  (f"w{k}_percent", 100.0 * nz / size)]
    pairs += [("total_nonzero", sum(report.layer_nonzeros)),
              ("total_size", sum(report.layer_sizes)),
              ("total_percent", report.total_percentage)]
    for label, (kept, total) in zip(stage_names(len(report.layer_nonzeros)), report.neuron_counts):
        pairs += [(f"neurons_{label}_surviving", kept), (f"neurons_{label}_total", total),
                  (f"neurons_{label}_percent", 100.0 * kept / total)]
    pairs += [("neurons_total_percent", report.total_neuron_percentage),
              ("compression_rate", report.compression_rate)]
    return "".join(f"{k}={float(v)!r}\n" if isinstance(v, float) else f"{k}={v}\n"
                   for k, v in pairs)


def parse_machine_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line:
            key, _, value = line.partition("=")
            out[key] = value
    return out


# ---------------------------------------------------------------------------
# PGM images


def write_pgm(path, pixels: np.ndarray) -> None:
    """Binary (P5) PGM, one byte per pixel, maxval 255."""
    a = np.ascontiguousarray(pixels, dtype=np.uint8)
    if a.ndim != 2:
        raise ValueError(f"PGM needs a 2-D array, got shape {a.shape}")
    with open(path, "wb") as f:
        f.write(f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii"))
        f.write(a.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        width, height = map(int, f.readline().split())
        maxval = int(f.readline())
        if maxval != 255:
            raise ValueError(f"{path}: unsupported maxval {maxval}")
        buf = f.read(width * height)
    return np.frombuffer(buf, dtype=np.uint8).reshape(height, width)


def write_sparsity_images(net: Network, out_dir, prefix: str = "") -> list[str]:
    """One indicator image (0 = zero weight, 255 = nonzero) per layer, plus a
    per-layer normalised |weight| grayscale."""
    written = []
    for k, layer in enumerate(net.layers, start=1):
        pattern = (layer.weights != 0.0).astype(np.uint8) * 255
        p1 = f"{out_dir}/{prefix}sparsity_W{k}.pgm"
        write_pgm(p1, pattern)
        mags = np.abs(layer.weights)
        peak = mags.max()
        gray = np.rint(mags * (255.0 / peak)).astype(np.uint8) if peak > 0 else \
            np.zeros_like(mags, dtype=np.uint8)
        p2 = f"{out_dir}/{prefix}weights_W{k}.pgm"
        write_pgm(p2, gray)
        written += [p1, p2]
    return written
