"""Plain-text interchange formats: image manifest CSV, tile manifest JSONL, report CSVs."""
from __future__ import annotations

import csv
import json
import os
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from entropytile.sifter import EntropyDistribution
from entropytile.tiler import TileRecord

IMAGE_MANIFEST_HEADER = ["image_id", "path", "px_per_cm", "label"]
TILE_KEYS = ["image_id", "scale_id", "tile_index", "x", "y", "w", "h", "entropy", "retained"]
AGGREGATION_HEADER = ["image_id", "scale_id", "method", "score", "decision", "tile_count", "variance"]
DISTRIBUTION_HEADER = ["bin_low", "bin_high", "count"]
ACCURACY_HEADER = ["epoch", "accuracy", "validation_accuracy"]

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    image_id: str
    path: str
    px_per_cm: float
    label: int | None


def check_image_id(image_id: str) -> str:
    if not _ID_RE.match(image_id):
        raise ManifestError(f"image_id {image_id!r} must match {_ID_RE.pattern} (it is used as a file name)")
    return image_id


def _parse_label(value: str, where: str) -> int | None:
    value = value.strip()
    if value == "":
        return None
    if value not in ("0", "1"):
        raise ManifestError(f"{where}: label must be 0, 1 or blank, got {value!r}")
    return int(value)


def read_image_manifest(path: str | os.PathLike) -> list[ManifestRow]:
    """Rows of an ``image_id,path,px_per_cm,label`` CSV.

    Relative image paths resolve against the manifest's directory.
    """
    base = os.path.dirname(os.path.abspath(path))
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return rows
        if [f.strip() for f in reader.fieldnames] != IMAGE_MANIFEST_HEADER:
            raise ManifestError(
                f"{path}: expected header {','.join(IMAGE_MANIFEST_HEADER)}, got {','.join(reader.fieldnames)}"
            )
        for lineno, raw in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            if None in raw.values() or None in raw:
                raise ManifestError(f"{where}: wrong number of columns")
            image_id = check_image_id(raw["image_id"].strip())
            if image_id in seen:
                raise ManifestError(f"{where}: duplicate image_id {image_id}")
            seen.add(image_id)
            try:
                px = float(raw["px_per_cm"])
            except ValueError:
                raise ManifestError(f"{where}: px_per_cm {raw['px_per_cm']!r} is not a number") from None
            if not px > 0:
                raise ManifestError(f"{where}: px_per_cm must be positive")
            image_path = raw["path"].strip()
            if not os.path.isabs(image_path):
                image_path = os.path.join(base, image_path)
            rows.append(ManifestRow(image_id, image_path, px, _parse_label(raw["label"], where)))
    return rows


def write_image_manifest(path: str | os.PathLike, rows: Iterable[ManifestRow]) -> None:
    write_csv(path, IMAGE_MANIFEST_HEADER, [
        [r.image_id, r.path, repr(float(r.px_per_cm)), "" if r.label is None else r.label] for r in rows
    ])


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[dict[str, str]], dict[str, str]]:
    """Header, rows and ``# key=value`` comment metadata of a CSV file."""
    meta: dict[str, str] = {}
    lines = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                for part in line[1:].split():
                    if "=" in part:
                        k, v = part.split("=", 1)
                        meta[k] = v
            elif line.strip():
                lines.append(line)
    if not lines:
        return [], [], meta
    reader = csv.DictReader(lines)
    rows = list(reader)
    return list(reader.fieldnames or []), rows, meta


def write_tile_manifest(path: str | os.PathLike, records: Iterable[TileRecord]) -> None:
    ordered = sorted(records, key=lambda r: (r.image_id, r.scale_id, r.tile_index))
    with open(path, "w") as fh:
        for r in ordered:
            row = {k: getattr(r, k) for k in TILE_KEYS}
            fh.write(json.dumps(row, separators=(", ", ": ")) + "\n")


def read_tile_manifest(path: str | os.PathLike) -> list[TileRecord]:
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                records.append(TileRecord(**{k: row[k] for k in TILE_KEYS}))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ManifestError(f"{path}:{lineno}: malformed tile record ({exc})") from None
    return records


def write_distribution(path: str | os.PathLike, dist: EntropyDistribution, label: str = "") -> None:
    comments = [f"mean={dist.mean!r}"]
    if dist.image_entropy is not None:
        comments.append(f"image_entropy={dist.image_entropy!r}")
    if label:
        comments.append(f"label={label}")
    write_csv(path, DISTRIBUTION_HEADER, dist.rows(), comments=[" ".join(comments)])
