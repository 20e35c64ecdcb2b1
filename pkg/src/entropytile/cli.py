"""Batch command line: synth, ingest, tile-sift, train, predict, evaluate, plot.

All commands work inside one output directory (``--out-dir``)::

    <out>/config.txt          effective configuration
    <out>/ingest_log.csv      accepted/rejected images with reasons
    <out>/images.csv          normalized image store (image manifest schema)
    <out>/images/<id>.png     normalized 8-bit luminance images
    <out>/tiles.jsonl         tile manifest
    <out>/sift_summary.csv    per image and scale: candidates, retained, rate
    <out>/aggregation.csv     per image and scale scores and decisions
    <out>/eval/...            cross-validation report and plots
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from collections import defaultdict
from typing import Sequence

import numpy as np

from entropytile.aggregator import aggregate, ProbabilityVector
from entropytile.classifier import BaselineModel, ExternalModel, train_baseline
from entropytile.config import PipelineConfig
from entropytile.evaluator import build_banks, cross_validate, EvalReport
from entropytile.manifests import (
    ACCURACY_HEADER,
    AGGREGATION_HEADER,
    ManifestError,
    ManifestRow,
    read_image_manifest,
    read_tile_manifest,
    write_csv,
    write_distribution,
    write_image_manifest,
    write_tile_manifest,
)
from entropytile.pipeline import tile_and_sift
from entropytile.plots import plot_csv
from entropytile.raster import ResolutionPolicy, SourceImage, load_image, resample, save_png, screen_candidate
from entropytile.sifter import entropy_distribution, retention_rate
from entropytile.synthetic import generate_synthetic

log = logging.getLogger("entropytile")

STORE_INDEX = "images.csv"
TILE_MANIFEST = "tiles.jsonl"


class CommandError(Exception):
    pass


def _path(cfg: PipelineConfig, *parts: str) -> str:
    return os.path.join(cfg.out_dir, *parts)


# -- synth ------------------------------------------------------------------


def cmd_synth(cfg: PipelineConfig, images_per_class: int) -> str:
    """Write a labeled synthetic dataset plus its image manifest; returns the manifest path."""
    src = _path(cfg, "synthetic")
    os.makedirs(src, exist_ok=True)
    rows = []
    for img in generate_synthetic(images_per_class, seed=cfg.seed):
        save_png(img, os.path.join(src, f"{img.image_id}.png"))
        rows.append(ManifestRow(img.image_id, f"{img.image_id}.png", img.native_resolution, img.label))
    manifest = os.path.join(src, "manifest.csv")
    write_image_manifest(manifest, rows)
    log.info("wrote %d synthetic images to %s", len(rows), src)
    return manifest


# -- ingest -----------------------------------------------------------------


def cmd_ingest(cfg: PipelineConfig) -> list[ManifestRow]:
    """Screen, resample and store every manifest image; returns the accepted rows."""
    if not cfg.image_manifest:
        raise CommandError("no image manifest given (--manifest or image_manifest in the config)")
    rows = read_image_manifest(cfg.image_manifest)
    if not rows:
        log.warning("manifest %s lists no images; the store will be empty", cfg.image_manifest)
    policy = ResolutionPolicy(cfg.target_resolution, cfg.max_downscale_ratio)
    os.makedirs(_path(cfg, "images"), exist_ok=True)
    log_rows, accepted = [], []
    for row in rows:
        try:
            img = load_image(row.path, row.px_per_cm, row.label, image_id=row.image_id)
        except ValueError as exc:
            log_rows.append([row.image_id, row.path, row.px_per_cm, _label(row.label), "rejected", f"undecodable: {exc}", "", ""])
            log.warning("%s rejected: %s", row.image_id, exc)
            continue
        verdict = screen_candidate(img, policy)
        if not verdict.accepted:
            log_rows.append([row.image_id, row.path, row.px_per_cm, _label(row.label), "rejected", verdict.reason, "", ""])
            log.info("%s %s", row.image_id, verdict.reason)
            continue
        out = resample(img, cfg.target_resolution)
        rel = os.path.join("images", f"{row.image_id}.png")
        save_png(out, _path(cfg, rel))
        accepted.append(ManifestRow(row.image_id, rel, cfg.target_resolution, row.label))
        log_rows.append([row.image_id, row.path, row.px_per_cm, _label(row.label), "accepted", "accepted",
                         out.width_px, out.height_px])
    write_csv(_path(cfg, "ingest_log.csv"),
              ["image_id", "path", "px_per_cm", "label", "status", "reason", "width_px", "height_px"], log_rows)
    write_image_manifest(_path(cfg, STORE_INDEX), accepted)
    cfg.save(_path(cfg, "config.txt"))
    log.info("ingested %d of %d images", len(accepted), len(rows))
    return accepted


def _label(label: int | None):
    return "" if label is None else label


def load_store(cfg: PipelineConfig) -> list[SourceImage]:
    index = _path(cfg, STORE_INDEX)
    if not os.path.exists(index):
        raise CommandError(f"no image store at {index}; run 'ingest' first")
    return [load_image(r.path, r.px_per_cm, r.label, image_id=r.image_id) for r in read_image_manifest(index)]


# -- tile-sift --------------------------------------------------------------


def cmd_tile_sift(cfg: PipelineConfig, backend: str | None = None) -> list[dict]:
    """Tile, measure and sift every stored image; returns the summary rows."""
    images = load_store(cfg)
    records, summary = [], []
    for img in images:
        sifted = tile_and_sift(img, cfg, backend)
        for k, recs in sorted(sifted.candidates.items()):
            res = sifted.results[k]
            records.extend(recs)
            rate = retention_rate(res) if res.candidate_count else float("nan")
            w, h = (recs[0].w, recs[0].h) if recs else ("", "")
            summary.append({
                "image_id": img.image_id, "scale_id": k, "tile_w": w, "tile_h": h,
                "image_entropy": sifted.image_entropy, "candidates": res.candidate_count,
                "retained": res.retained_count, "retention_rate": rate,
            })
            note = " (threshold 0: uniform image, all tiles kept)" if sifted.image_entropy == 0 else ""
            log.info("%s scale %d: N=%d n=%d retention=%.3f%s", img.image_id, k, res.candidate_count,
                     res.retained_count, rate, note)
    write_tile_manifest(_path(cfg, TILE_MANIFEST), records)
    header = ["image_id", "scale_id", "tile_w", "tile_h", "image_entropy", "candidates", "retained", "retention_rate"]
    write_csv(_path(cfg, "sift_summary.csv"), header, [[row[h] for h in header] for row in summary])
    cfg.save(_path(cfg, "config.txt"))
    return summary


def load_tiles(cfg: PipelineConfig):
    path = _path(cfg, TILE_MANIFEST)
    if not os.path.exists(path):
        raise CommandError(f"no tile manifest at {path}; run 'tile-sift' first")
    by_image: dict[str, dict[int, list]] = defaultdict(lambda: defaultdict(list))
    for rec in read_tile_manifest(path):
        by_image[rec.image_id][rec.scale_id].append(rec)
    return by_image


# -- train ------------------------------------------------------------------


def cmd_train(cfg: PipelineConfig) -> dict[int, str]:
    """Train one baseline per scale on the retained tiles of all labeled images.

    Every epoch is checkpointed to ``checkpoints/scale<k>/epoch-NNN.json``;
    returns the final checkpoint path per scale.
    """
    images = [img for img in load_store(cfg) if img.label is not None]
    if not images:
        raise CommandError("no labeled images in the store")
    banks = build_banks(images, cfg)
    final = {}
    for k in range(1, len(cfg.tile_sizes) + 1):
        feats = [b.scale_features(k) for b in banks.values()]
        labels = [np.full(len(f), b.label, dtype=np.float64) for f, b in zip(feats, banks.values())]
        X, y = np.vstack(feats), np.concatenate(labels)
        run = train_baseline(X, y, cfg.epochs, cfg.learning_rate, seed=cfg.seed)
        out_dir = _path(cfg, "checkpoints", f"scale{k}")
        os.makedirs(out_dir, exist_ok=True)
        for ckpt in run.checkpoints or [run.model]:
            ckpt.save(os.path.join(out_dir, f"{ckpt.version_id}.json"))
        final[k] = os.path.join(out_dir, f"{run.model.version_id}.json")
        log.info("scale %d: %d tiles, final loss %.4f", k, len(y), run.losses[-1])
    return final


# -- predict ----------------------------------------------------------------


def _parse_models(specs: Sequence[str], n_scales: int) -> dict[int, BaselineModel]:
    models = {}
    for spec in specs:
        if "=" in spec:
            k, path = spec.split("=", 1)
            models[int(k)] = BaselineModel.load(path)
        else:
            model = BaselineModel.load(spec)
            for k in range(1, n_scales + 1):
                models.setdefault(k, model)
    return models


def cmd_predict(cfg: PipelineConfig, probabilities: str | None = None, model_specs: Sequence[str] = ()) -> list[list]:
    """Aggregate retained-tile probabilities into per-image scores.

    Probabilities come from an external CSV or from baseline checkpoints
    (``path`` for every scale or ``k=path`` per scale).
    """
    if bool(probabilities) == bool(model_specs):
        raise CommandError("give exactly one of --probabilities or --model")
    tiles = load_tiles(cfg)
    external = ExternalModel.from_csv(probabilities) if probabilities else None
    models = {} if external else _parse_models(model_specs, len(cfg.tile_sizes))
    images = {} if external else {img.image_id: img for img in load_store(cfg)}
    weights = dict(enumerate(cfg.weights, start=1)) if cfg.weights else None

    rows = []
    for image_id in sorted(tiles):
        pvs = []
        for k in sorted(tiles[image_id]):
            kept = [r for r in tiles[image_id][k] if r.retained]
            if not kept:
                log.warning("%s scale %d: no retained tiles, scale skipped", image_id, k)
                continue
            if external is not None:
                probs = external.predict_tiles(None, kept)
            else:
                if k not in models:
                    raise CommandError(f"no model for scale {k}")
                probs = models[k].predict_tiles(images[image_id], kept)
            pvs.append(ProbabilityVector(image_id, k, probs))
        if not pvs:
            log.warning("%s: no retained tiles at any scale, image skipped", image_id)
            continue
        w = None
        if weights is not None:
            present = {pv.scale_id: weights[pv.scale_id] for pv in pvs}
            total = sum(present.values())
            w = {k: v / total for k, v in present.items()} if total > 0 else None
        res = aggregate(pvs, cfg.method, w, cfg.boundary)
        for pv in pvs:
            k = pv.scale_id
            row = [image_id, k, cfg.method, res.scale_scores[k], int(res.scale_scores[k] >= cfg.boundary),
                   res.tile_counts[k], res.scale_variances[k]]
            if weights is not None:
                row += [res.final_score, ";".join(f"{s}:{v!r}" for s, v in sorted(res.weights.items()))]
            rows.append(row)
    header = AGGREGATION_HEADER + (["final_score", "weights"] if weights is not None else [])
    write_csv(_path(cfg, "aggregation.csv"), header, rows)
    return rows


# -- evaluate ---------------------------------------------------------------


def cmd_evaluate(cfg: PipelineConfig, probabilities: str | None = None, backend: str | None = None) -> EvalReport:
    images = load_store(cfg)
    unlabeled = [img.image_id for img in images if img.label is None]
    if unlabeled:
        raise CommandError(f"evaluation needs labels; unlabeled: {', '.join(unlabeled)}")
    per_class: dict[int, int] = defaultdict(int)
    for img in images:
        per_class[img.label] += 1
    for label in (0, 1):
        if per_class[label] < cfg.n_folds:
            raise CommandError(f"class {label} has {per_class[label]} images, fewer than n_folds={cfg.n_folds}")
    external = ExternalModel.from_csv(probabilities) if probabilities else None
    banks = build_banks(images, cfg, backend)
    report = cross_validate(images, cfg, external=external, banks=banks)

    out = _path(cfg, "eval")
    os.makedirs(out, exist_ok=True)
    rows = report.csv_rows()
    header = list(rows[0])
    write_csv(os.path.join(out, "report.csv"), header, [[r[h] for h in header] for r in rows])
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(report.summary())
    scores = [[img_id, f.fold, r.final_score, banks[img_id].label]
              for f in report.folds for img_id, r in zip(f.test_ids, f.results)]
    write_csv(os.path.join(out, "scores.csv"), ["image_id", "fold", "final_score", "label"], scores)

    for f in report.folds:
        for k, curve in sorted(f.test_curve.items()):
            path = os.path.join(out, f"accuracy_fold{f.fold}_scale{k}.csv")
            val = f.validation_curve.get(k, [])
            write_csv(path, ACCURACY_HEADER,
                      [[e + 1, a, val[e] if e < len(val) else ""] for e, a in enumerate(curve)],
                      comments=[f"label=fold{f.fold}_scale{k}"])
            plot_csv(path)

    for k, size in enumerate(cfg.tile_sizes, start=1):
        for label in (0, 1):
            members = [b for b in banks.values() if b.label == label]
            tiles = [r for b in members for r in b.sifted.candidates.get(k, [])]
            if not tiles:
                continue
            marker = float(np.mean([b.sifted.image_entropy for b in members]))
            dist = entropy_distribution(tiles, cfg.bin_width, marker)
            path = os.path.join(out, f"entropy_dist_class{label}_scale{k}.csv")
            write_distribution(path, dist, label=f"class{label}_tile{size}")
            plot_csv(path)
    log.info("cross-validation range %.2f-%.2f", *report.accuracy_range)
    return report


# -- argument parsing -------------------------------------------------------


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="key = value configuration file")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out-dir", default=S)
    p.add_argument("--relax", type=float, default=S, help="entropy criterion factor (1.0 strict, 0.99 relaxed)")
    p.add_argument("--overlap", type=float, default=S, help="tile overlap fraction in [0, 1)")
    p.add_argument("--tile-sizes", default=S, help="comma-separated tile sides, e.g. 100,150")
    p.add_argument("--rectangular", action="store_true", default=S, help="aspect-matched rectangular tiles")
    p.add_argument("--method", choices=["average", "majority"], default=S)
    p.add_argument("--weights", default=S, help="comma-separated per-scale weights summing to 1")
    p.add_argument("--target-resolution", type=float, default=S, help="px/cm")
    p.add_argument("--selection", choices=["entropy", "random", "all"], default=S)
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--learning-rate", type=float, default=S)
    p.add_argument("--n-folds", type=int, default=S)
    p.add_argument("-v", "--verbose", action="store_true", default=S)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="entropytile", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a labeled synthetic dataset")
    p.add_argument("--per-class", type=int, default=40)

    p = sub.add_parser("ingest", parents=[common], help="screen and normalize images")
    p.add_argument("--manifest", default=argparse.SUPPRESS, help="image manifest CSV (image_id,path,px_per_cm,label)")

    sub.add_parser("tile-sift", parents=[common], help="tile, measure entropy, sift")
    sub.add_parser("train", parents=[common], help="train baseline tile classifiers")

    p = sub.add_parser("predict", parents=[common], help="aggregate tile probabilities per image")
    p.add_argument("--probabilities", help="external probability CSV (image_id,scale_id,tile_index,prob)")
    p.add_argument("--model", action="append", default=[], help="baseline checkpoint JSON, optionally k=path")

    p = sub.add_parser("evaluate", parents=[common], help="image-level cross-validation")
    p.add_argument("--probabilities", help="external probability CSV instead of training")

    p = sub.add_parser("plot", parents=[common], help="render a result CSV as SVG")
    p.add_argument("csv")
    p.add_argument("-o", "--output")
    return parser


_FLAG_KEYS = {
    "seed": "seed", "out_dir": "out_dir", "relax": "relax", "overlap": "overlap", "method": "method",
    "target_resolution": "target_resolution", "selection": "selection", "epochs": "epochs",
    "learning_rate": "learning_rate", "n_folds": "n_folds", "manifest": "image_manifest",
}


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """Defaults, then ``--config``, then individual flags."""
    opts = vars(args)
    if "config" in opts:
        cfg = PipelineConfig.load(opts["config"])
    elif os.path.exists(os.path.join(opts.get("out_dir", "out"), "config.txt")) and args.command != "ingest":
        cfg = PipelineConfig.load(os.path.join(opts.get("out_dir", "out"), "config.txt"))
    else:
        cfg = PipelineConfig()
    changes = {key: opts[flag] for flag, key in _FLAG_KEYS.items() if flag in opts}
    if "tile_sizes" in opts:
        changes["tile_sizes"] = [int(v) for v in opts["tile_sizes"].split(",") if v.strip()]
    if "weights" in opts:
        changes["weights"] = [float(v) for v in opts["weights"].split(",") if v.strip()] or None
    if "rectangular" in opts:
        changes["rectangular"] = True
    if "tile_sizes" in changes and "weights" not in changes and cfg.weights is not None \
            and len(cfg.weights) != len(changes["tile_sizes"]):
        changes["weights"] = None
    return cfg.replace(**changes)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        if args.command == "plot":
            print(plot_csv(args.csv, args.output))
            return 0
        cfg = config_from_args(args)
        os.makedirs(cfg.out_dir, exist_ok=True)
        if args.command == "synth":
            print(cmd_synth(cfg, args.per_class))
        elif args.command == "ingest":
            cmd_ingest(cfg)
        elif args.command == "tile-sift":
            cmd_tile_sift(cfg)
        elif args.command == "train":
            for k, path in sorted(cmd_train(cfg).items()):
                print(f"scale {k}: {path}")
        elif args.command == "predict":
            cmd_predict(cfg, args.probabilities, args.model)
        elif args.command == "evaluate":
            report = cmd_evaluate(cfg, args.probabilities)
            sys.stdout.write(report.summary())
    except (CommandError, ManifestError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
