"""SVG charts for entropy distributions and accuracy-per-epoch curves.

Output is byte-stable for identical input: matplotlib's SVG id salt is fixed
and the date metadata is dropped.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from entropytile.manifests import ACCURACY_HEADER, DISTRIBUTION_HEADER, read_csv  # noqa: E402

_RC = {
    "svg.hashsalt": "entropytile",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "figure.figsize": (6.4, 4.0),
}


class SchemaError(ValueError):
    pass


def _save(fig, svg_path: str | os.PathLike) -> None:
    fig.savefig(svg_path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_distribution(csv_path: str | os.PathLike, svg_path: str | os.PathLike, title: str | None = None) -> None:
    header, rows, meta = read_csv(csv_path)
    if header != DISTRIBUTION_HEADER:
        raise SchemaError(f"{csv_path}: expected header {','.join(DISTRIBUTION_HEADER)}")
    if not rows:
        raise SchemaError(f"{csv_path}: no data rows")
    lows = [float(r["bin_low"]) for r in rows]
    highs = [float(r["bin_high"]) for r in rows]
    counts = [int(r["count"]) for r in rows]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.bar(lows, counts, width=[h - lo for lo, h in zip(lows, highs)], align="edge", color="#4c72b0")
        if "image_entropy" in meta:
            h_img = float(meta["image_entropy"])
            ax.axvline(h_img, color="#c44e52", linestyle="--", label=f"image entropy {h_img:.2f}")
            ax.legend(loc="upper left")
        ax.set_xlim(0, 8)
        ax.set_xlabel("tile entropy (bits)")
        ax.set_ylabel("tiles")
        ax.set_title(title or meta.get("label", "tile entropy distribution"))
        fig.tight_layout()
        _save(fig, svg_path)


def plot_accuracy(csv_path: str | os.PathLike, svg_path: str | os.PathLike, title: str | None = None) -> None:
    header, rows, meta = read_csv(csv_path)
    if header[:2] != ACCURACY_HEADER[:2]:
        raise SchemaError(f"{csv_path}: expected header starting with {','.join(ACCURACY_HEADER[:2])}")
    if not rows:
        raise SchemaError(f"{csv_path}: no data rows")
    epochs = [int(r["epoch"]) for r in rows]
    acc = [float(r["accuracy"]) for r in rows]
    peak = max(range(len(acc)), key=lambda i: (acc[i], -i))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(epochs, acc, marker="o", markersize=3, color="#4c72b0", label="test accuracy")
        if "validation_accuracy" in header and all(r["validation_accuracy"] != "" for r in rows):
            val = [float(r["validation_accuracy"]) for r in rows]
            ax.plot(epochs, val, color="#55a868", linestyle=":", label="validation accuracy")
        ax.annotate(
            f"peak {acc[peak]:.2f} @ epoch {epochs[peak]}",
            xy=(epochs[peak], acc[peak]),
            xytext=(0, -28),
            textcoords="offset points",
            ha="center",
            arrowprops={"arrowstyle": "->"},
        )
        ax.set_ylim(-0.02, 1.05)
        ax.set_xlabel("epoch")
        ax.set_ylabel("image-level accuracy")
        ax.set_title(title or meta.get("label", "accuracy per epoch"))
        ax.legend(loc="lower right")
        fig.tight_layout()
        _save(fig, svg_path)


def plot_csv(csv_path: str | os.PathLike, svg_path: str | os.PathLike | None = None) -> str:
    """Render a distribution or accuracy CSV, chosen by its header."""
    header, rows, _ = read_csv(csv_path)
    if not header or not rows:
        raise SchemaError(f"{csv_path}: empty CSV")
    if svg_path is None:
        svg_path = os.path.splitext(os.fspath(csv_path))[0] + ".svg"
    if header == DISTRIBUTION_HEADER:
        plot_distribution(csv_path, svg_path)
    elif header[:2] == ACCURACY_HEADER[:2]:
        plot_accuracy(csv_path, svg_path)
    else:
        raise SchemaError(f"{csv_path}: unrecognized header {','.join(header)}")
    return os.fspath(svg_path)
