"""Command line interface: synth, score, filter, eval, stub-detect, sweep.

Exit codes: 0 success, 1 usage error, 2 data error, 3 detector-hook failure.
A JSON config file (--config) can supply any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .apeval import evaluate, load_detections, save_ap_result, save_detections
from .blur import load_scores, save_scores
from .dataset import count_table, filter_by_score, load_manifest, save_manifest
from .errors import DataError, DetectorHookError
from .jsonio import build_meta, read_json, write_json
from .stub import stub_detect
from .sweep import DEFAULT_BT_GRID, SweepConfig, emit_tables, run_score, run_sweep
from .synth import SynthConfig, generate_corpus
from .tables import render_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_HOOK = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_grid(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError as exc:
        raise ValueError(f"bad bt grid {text!r}: {exc}") from exc


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying any of the flags")
    common.add_argument("--manifest", help="dataset manifest JSON")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--seed", type=int, help="base random seed (default 0)")
    common.add_argument("--workers", type=int, help="worker threads (default 1)")
    common.add_argument("--bt-grid", help="comma-separated thresholds, e.g. 0,5,10,15,20")
    common.add_argument("--image-root", help="directory image paths are relative to")

    parser = _Parser(prog="blurcull", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-val", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--corrupt-fraction", type=float)
    p.add_argument("--sigma-extreme", type=float)
    p.add_argument("--sigma-grid", help="comma-separated blur sigmas for clean images")
    p.add_argument("--noise-sigma", type=float)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("score", parents=[common], help="blur-score every manifest image")
    p.add_argument("--out", help="scores CSV path")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("filter", parents=[common], help="filter one threshold")
    p.add_argument("--scores", help="scores CSV from the score subcommand")
    p.add_argument("--bt", type=float, help="blur threshold")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("eval", parents=[common], help="evaluate a detection file")
    p.add_argument("--split", choices=("training", "validation", "testing"))
    p.add_argument("--detections", help="detection JSON path")
    p.add_argument("--out", help="AP result JSON path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stub-detect", parents=[common], help="run the stub detector")
    p.add_argument("--split", choices=("training", "validation", "testing"))
    p.add_argument("--out", help="detection JSON path")
    p.set_defaults(func=_cmd_stub_detect)

    p = sub.add_parser("sweep", parents=[common], help="run the full threshold sweep")
    p.add_argument("--scores", help="scores CSV from the score subcommand")
    p.add_argument("--detector-cmd", help="external detector command template")
    p.add_argument("--stub-detector", choices=("none", "colorblob"))
    p.add_argument("--eval-test-all", action="store_true", default=None)
    p.add_argument("--filter-split", help="comma-separated splits to filter (default training)")
    p.set_defaults(func=_cmd_sweep)
    return parser


class _Options:
    """Flag values over config-file values over defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = args
        self._file = {}
        if getattr(args, "config", None):
            doc = read_json(args.config)
            if not isinstance(doc, dict):
                raise ValueError(f"config file {args.config} must hold a JSON object")
            self._file = doc

    def get(self, name: str, default=None):
        v = getattr(self._args, name, None)
        if v is not None:
            return v
        if name in self._file:
            return self._file[name]
        return default

    def require(self, name: str):
        v = self.get(name)
        if v is None:
            raise ValueError(f"--{name.replace('_', '-')} is required")
        return v


def _image_root(opts: _Options, manifest_path) -> Path:
    root = opts.get("image_root")
    return Path(root) if root is not None else Path(manifest_path).parent


def _cmd_synth(opts: _Options) -> int:
    kwargs = {}
    for name in (
        "n_train", "n_val", "n_test", "width", "height", "seed",
        "corrupt_fraction", "sigma_extreme", "noise_sigma",
    ):
        v = opts.get(name)
        if v is not None:
            kwargs[name] = v
    grid = opts.get("sigma_grid")
    if grid is not None:
        kwargs["sigma_grid"] = _parse_grid(grid)
    config = SynthConfig(out_dir=str(opts.require("out_dir")), **kwargs)
    manifest = generate_corpus(config)
    print(f"wrote {len(manifest.images)} images to {config.out_dir}")
    return EXIT_OK


def _cmd_score(opts: _Options) -> int:
    manifest_path = opts.require("manifest")
    manifest = load_manifest(manifest_path)
    scores, errors = run_score(
        manifest,
        image_root=_image_root(opts, manifest_path),
        workers=int(opts.get("workers", 1)),
    )
    save_scores(opts.require("out"), scores)
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    print(f"scored {len(scores)}/{len(manifest.images)} images")
    return EXIT_DATA if errors else EXIT_OK


def _cmd_filter(opts: _Options) -> int:
    manifest = load_manifest(opts.require("manifest"))
    scores = load_scores(opts.require("scores"))
    bt = float(opts.require("bt"))
    out_dir = Path(opts.require("out_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    filtered, report = filter_by_score(manifest, scores, bt)
    meta = build_meta({"bt": bt})
    save_manifest(filtered, out_dir / "manifest.json", meta=meta)
    write_json(out_dir / "filter_report.json", {**report.to_dict(), "meta": meta})
    print(render_text(count_table([report])), end="")
    return EXIT_OK


def _cmd_eval(opts: _Options) -> int:
    manifest = load_manifest(opts.require("manifest"))
    split = str(opts.require("split"))
    detections = load_detections(opts.require("detections"))
    result = evaluate(manifest, split, detections)
    out = opts.get("out")
    if out:
        save_ap_result(out, result, meta=build_meta({"split": split}))
    print(f"Overall AP  {result.overall_ap:.2f}")
    for cat in manifest.categories:
        if cat in result.per_category_ap:
            print(f"AP of {cat}  {result.per_category_ap[cat]:.2f}")
    return EXIT_OK


def _cmd_stub_detect(opts: _Options) -> int:
    manifest_path = opts.require("manifest")
    manifest = load_manifest(manifest_path)
    split = str(opts.require("split"))
    dets = stub_detect(
        manifest,
        split,
        seed=int(opts.get("seed", 0)),
        image_root=_image_root(opts, manifest_path),
    )
    save_detections(opts.require("out"), dets, meta=build_meta({"split": split}))
    print(f"wrote {len(dets)} detections")
    return EXIT_OK


def _cmd_sweep(opts: _Options) -> int:
    grid = opts.get("bt_grid")
    filter_split = opts.get("filter_split", "training")
    if isinstance(filter_split, (list, tuple)):
        splits = tuple(str(s) for s in filter_split)
    else:
        splits = tuple(str(filter_split).split(","))
    config = SweepConfig(
        manifest_path=str(opts.require("manifest")),
        scores_path=str(opts.require("scores")),
        out_dir=str(opts.require("out_dir")),
        bt_grid=_parse_grid(grid) if grid is not None else DEFAULT_BT_GRID,
        detector_cmd=opts.get("detector_cmd"),
        stub_detector=str(opts.get("stub_detector", "none")),
        seed=int(opts.get("seed", 0)),
        workers=int(opts.get("workers", 1)),
        eval_test_all=bool(opts.get("eval_test_all", False)),
        filter_splits=splits,
        image_root=opts.get("image_root"),
    )
    report = run_sweep(config)
    for table in emit_tables(report).values():
        print(table.title)
        print(render_text(table))
    print(f"selected BT = {report.selected_bt:g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _Options(args)
        return args.func(opts)
    except DetectorHookError as exc:
        print(f"detector hook failure: {exc}", file=sys.stderr)
        return EXIT_HOOK
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
