"""Command line driver: synth / detect / eval / bench.

Config precedence: explicit flags > --config JSON file > defaults.
Exit codes: 0 success, 1 data error, 2 environment error.
"""

import argparse
import json
import logging
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from speclight import io as sio
from speclight import kernels
from speclight.detect_multi import AggregationConfig
from speclight.detect_single import SingleViewConfig
from speclight.metric import EvalReport, ThresholdRange, view_accuracy
from speclight.pipeline import run_detection_on_scene
from speclight.synth import build_scene, render_direct

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_ENV = 2

_DEFAULTS = {
    "phi": 0.5,
    "trim": 0.1,
    "majority": 0.5,
    "threshold_lo": 156,
    "threshold_hi": 255,
    "sv_high": 220,
    "sv_low": 180,
    "sv_method": "two-threshold",
    "sv_percentile": 0.98,
    "workers": None,
    "seed": 1,
    "cameras": 4,
    "repeats": 3,
    "size": 128,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="speclight",
        description="Face-based multi-view specular highlight detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--phi", type=float, help="cross-view sharpness constant")
        p.add_argument("--trim", type=float, help="trimmed-mean tail fraction")
        p.add_argument("--majority", type=float, help="mask majority for face classification")
        p.add_argument("--threshold-lo", type=int, help="sweep range low (8-bit)")
        p.add_argument("--threshold-hi", type=int, help="sweep range high (8-bit)")
        p.add_argument("--sv-high", type=int, help="single-view seed threshold (8-bit)")
        p.add_argument("--sv-low", type=int, help="single-view growth threshold (8-bit)")
        p.add_argument("--sv-method", choices=["two-threshold", "percentile"])
        p.add_argument("--sv-percentile", type=float)
        p.add_argument("--workers", type=int,
                       help="worker processes (default: SPECLIGHT_WORKERS or 1)")

    p_synth = sub.add_parser("synth", help="generate a synthetic LIGHTS-layout scene")
    p_synth.add_argument("--out", type=Path, required=True)
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--cameras", type=int)
    p_synth.add_argument("--size", type=int, help="render width/height in pixels")
    common(p_synth)

    p_detect = sub.add_parser("detect", help="run multi-view detection on a scene")
    p_detect.add_argument("--scene", type=Path, required=True)
    p_detect.add_argument("--out", type=Path, required=True)
    common(p_detect)

    p_eval = sub.add_parser("eval", help="evaluate predicted masks against groundtruth")
    p_eval.add_argument("--scene", type=Path, required=True)
    p_eval.add_argument("--masks", type=Path, required=True,
                        help="directory with Mask_<viewid>.png predictions")
    p_eval.add_argument("--out", type=Path, help="CSV path (default: <masks>/accuracy.csv)")
    p_eval.add_argument("--strict-gt", action="store_true",
                        help="binarize groundtruth with > instead of >=")
    common(p_eval)

    p_bench = sub.add_parser("bench", help="time the detection pipeline")
    p_bench.add_argument("--scene", type=Path, required=True)
    p_bench.add_argument("--repeats", type=int)
    p_bench.add_argument("--out", type=Path, help="write the timing JSON here too")
    common(p_bench)

    return parser


def _resolve(args):
    """Merge CLI flags over config-file values over defaults."""
    cfg = dict(_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["workers"] is None:
        cfg["workers"] = int(os.environ.get("SPECLIGHT_WORKERS", "1"))
    if cfg["workers"] < 1:
        raise ValueError("workers must be >= 1")
    return cfg


def _agg_config(cfg) -> AggregationConfig:
    return AggregationConfig(
        phi=cfg["phi"], trim_fraction=cfg["trim"], mask_majority=cfg["majority"]
    )


def _sv_config(cfg) -> SingleViewConfig:
    return SingleViewConfig(
        method=cfg["sv_method"], high=cfg["sv_high"], low=cfg["sv_low"],
        percentile=cfg["sv_percentile"],
    )


def cmd_synth(args) -> int:
    cfg = _resolve(args)
    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_ENV
    scene = build_scene(cfg["seed"], cfg["cameras"], cfg["size"], cfg["size"])
    bundles = [render_direct(scene, i) for i in range(len(scene.cameras))]
    sio.write_scene_layout(scene, bundles, out)
    print(f"wrote {len(scene.cameras)}-view scene (seed {cfg['seed']}) to {out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _resolve(args)
    try:
        manifest, result = run_detection_on_scene(
            args.scene, _sv_config(cfg), _agg_config(cfg), workers=cfg["workers"]
        )
    except (sio.SceneLoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        for view in result.views:
            sio.save_png(result.masks[view.view_id], args.out / f"Mask_{view.view_id}.png")
            sio.save_png(view.single_mask, args.out / f"SingleView_{view.view_id}.png")
        with open(args.out / "provenance.json", "w") as fh:
            json.dump(result.provenance(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write to {args.out}: {exc}", file=sys.stderr)
        return EXIT_ENV
    n_excluded = sum(len(v.exclusions) for v in result.verdicts.values())
    print(f"detected {len(result.views)} views; {n_excluded} pairwise exclusions; "
          f"masks in {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _resolve(args)
    rng = ThresholdRange(cfg["threshold_lo"], cfg["threshold_hi"])
    try:
        manifest = sio.load_scene(args.scene)
    except sio.SceneLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    gt_views = [v for v in manifest.views if v.specular_path is not None]
    missing = [
        v.view_id for v in gt_views
        if not (args.masks / f"Mask_{v.view_id}.png").is_file()
    ]
    if missing:
        print(f"error: missing predicted masks for views: {', '.join(missing)}",
              file=sys.stderr)
        return EXIT_DATA
    if not gt_views:
        print("error: no views with specular groundtruth", file=sys.stderr)
        return EXIT_DATA

    ids = []
    accs = []
    for v in gt_views:
        gt = sio.load_gray_png(v.specular_path)
        pred = sio.load_mask_png(args.masks / f"Mask_{v.view_id}.png")
        ids.append(v.view_id)
        accs.append(view_accuracy(gt, pred, rng, strict=args.strict_gt))
    report = EvalReport(ids, accs)

    csv_path = args.out if args.out else args.masks / "accuracy.csv"
    csv_path.write_text(report.to_csv())
    print(report.summary())
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _resolve(args)
    try:
        samples = []
        n_views = None
        for _ in range(cfg["repeats"]):
            start = time.perf_counter()
            manifest, result = run_detection_on_scene(
                args.scene, _sv_config(cfg), _agg_config(cfg), workers=cfg["workers"]
            )
            samples.append(time.perf_counter() - start)
            n_views = len(result.views)
    except (sio.SceneLoadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    med = statistics.median(samples)
    payload = {
        "backend": kernels.BACKEND,
        "repeats": cfg["repeats"],
        "samples_sec": samples,
        "median_sec": med,
        "views": n_views,
        "per_view_mean_sec": med / n_views,
        "workers": cfg["workers"],
    }
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        args.out.write_text(text + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        handler = {
            "synth": cmd_synth,
            "detect": cmd_detect,
            "eval": cmd_eval,
            "bench": cmd_bench,
        }[args.command]
        return handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
