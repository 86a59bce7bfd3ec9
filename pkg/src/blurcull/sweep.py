"""Blur-threshold sweep: filter per threshold, detect, evaluate, select, report.

Each grid value gets its own cell: the training split is filtered at that
threshold, a detector (external command or the built-in stub) produces
validation detections for the filtered manifest, and the validation AP is
computed against ground truth that is identical across cells. The winning
threshold maximizes validation overall AP, ties resolved toward the
smallest threshold, and only that cell is evaluated on the testing split.
"""

from __future__ import annotations

import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .apeval import ApResult, Detection, evaluate, load_detections, save_ap_result, save_detections
from .blur import BlurScore, blur_score, load_scores
from .dataset import (
    SPLITS,
    DatasetManifest,
    FilterReport,
    count_table,
    filter_by_score,
    load_manifest,
    save_manifest,
)
from .errors import DataError, DetectorHookError
from .images import decode_image
from .jsonio import build_meta, sha256_hex, write_json
from .stub import stub_detect
from .tables import Table, render_csv, render_text

__all__ = [
    "BtCell",
    "SweepConfig",
    "SweepReport",
    "emit_tables",
    "run_score",
    "run_sweep",
]

DEFAULT_BT_GRID = (0.0, 5.0, 10.0, 15.0, 20.0)


@dataclass(frozen=True)
class SweepConfig:
    manifest_path: str
    scores_path: str
    out_dir: str
    bt_grid: tuple[float, ...] = DEFAULT_BT_GRID
    detector_cmd: str | None = None
    stub_detector: str = "none"  # none | colorblob
    seed: int = 0
    workers: int = 1
    eval_test_all: bool = False
    filter_splits: tuple[str, ...] = ("training",)
    image_root: str | None = None

    def __post_init__(self) -> None:
        grid = tuple(float(b) for b in self.bt_grid)
        if not grid:
            raise ValueError("bt_grid must be non-empty")
        if any(b < 0 for b in grid):
            raise ValueError("bt_grid values must be >= 0")
        if any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
            raise ValueError("bt_grid must be strictly increasing")
        object.__setattr__(self, "bt_grid", grid)
        if self.stub_detector not in ("none", "colorblob"):
            raise ValueError(f"unknown stub detector {self.stub_detector!r}")
        if self.stub_detector == "none" and not self.detector_cmd:
            raise ValueError("need either --detector-cmd or --stub-detector colorblob")
        if self.stub_detector != "none" and self.detector_cmd:
            raise ValueError("choose one of detector_cmd and stub_detector, not both")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not self.filter_splits or any(s not in SPLITS for s in self.filter_splits):
            raise ValueError(
                f"filter_splits must name splits from {SPLITS}, got {self.filter_splits}"
            )


@dataclass
class BtCell:
    bt: float
    filter_report: FilterReport
    validation_ap: ApResult | None
    valid: bool
    error: str | None = None


@dataclass
class SweepReport:
    bt_grid: tuple[float, ...]
    categories: tuple[str, ...]
    cells: tuple[BtCell, ...]
    selected_bt: float
    test_ap: ApResult | None
    test_ap_all: dict[float, ApResult] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "bt_grid": [float(b) for b in self.bt_grid],
            "categories": list(self.categories),
            "cells": [
                {
                    "bt": float(c.bt),
                    "valid": c.valid,
                    "error": c.error,
                    "filter": c.filter_report.to_dict(),
                    "validation_ap": (
                        c.validation_ap.to_dict() if c.validation_ap else None
                    ),
                }
                for c in self.cells
            ],
            "selected_bt": float(self.selected_bt),
            "test_ap": self.test_ap.to_dict() if self.test_ap else None,
            "test_ap_all": {
                f"{bt:g}": ap.to_dict() for bt, ap in sorted(self.test_ap_all.items())
            },
            "meta": self.meta,
        }


def run_score(
    manifest: DatasetManifest, image_root=None, workers: int = 1
) -> tuple[list[BlurScore], list[str]]:
    """Score every manifest image, in manifest order.

    Unreadable images are skipped and reported as error strings so one bad
    file cannot sink the run; callers decide the exit status.
    """

    def one(rec):
        p = Path(rec.path)
        if image_root is not None and not p.is_absolute():
            p = Path(image_root) / p
        try:
            return BlurScore(rec.image_id, blur_score(decode_image(p))), None
        except DataError as exc:
            return None, f"{rec.image_id}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, manifest.images))
    else:
        results = [one(rec) for rec in manifest.images]
    scores = [s for s, _ in results if s is not None]
    errors = [e for _, e in results if e is not None]
    return scores, errors


def _run_detector_cmd(
    template: str, manifest_path: Path, split: str, out_path: Path,
    bt: float, seed: int, image_root,
) -> tuple[Detection, ...]:
    try:
        tokens = [
            tok.format(
                manifest=str(manifest_path),
                split=split,
                out=str(out_path),
                bt=f"{bt:g}",
                seed=str(seed),
                image_root=str(image_root) if image_root is not None else "",
            )
            for tok in shlex.split(template)
        ]
    except (KeyError, IndexError) as exc:
        raise ValueError(f"bad detector command template: {exc}") from exc
    proc = subprocess.run(tokens, capture_output=True, text=True)
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout or "").strip()[-500:]
        raise DetectorHookError(
            f"detector exited {proc.returncode} for split {split} at BT={bt:g}: {tail}"
        )
    try:
        return load_detections(out_path)
    except DataError as exc:
        raise DetectorHookError(f"malformed detector output: {exc}") from exc


def _detect(
    config: SweepConfig,
    filtered: DatasetManifest,
    split: str,
    bt: float,
    cell_dir: Path,
    meta: dict,
    image_root,
) -> tuple[Detection, ...]:
    out_path = cell_dir / f"detections_{split}.json"
    if config.stub_detector == "colorblob":
        dets = stub_detect(filtered, split, seed=config.seed, image_root=image_root)
        save_detections(out_path, dets, meta=meta)
        return dets
    return _run_detector_cmd(
        config.detector_cmd, cell_dir / "manifest.json", split, out_path,
        bt=bt, seed=config.seed, image_root=image_root,
    )


def run_sweep(config: SweepConfig) -> SweepReport:
    """Run the whole sweep and write the report plus all three tables."""
    manifest = load_manifest(config.manifest_path)
    scores = load_scores(config.scores_path)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    image_root = (
        config.image_root
        if config.image_root is not None
        else Path(config.manifest_path).parent
    )
    meta = build_meta(
        {
            "bt_grid": list(config.bt_grid),
            "detector_cmd": config.detector_cmd,
            "stub_detector": config.stub_detector,
            "seed": config.seed,
            "eval_test_all": config.eval_test_all,
            "filter_splits": list(config.filter_splits),
            "manifest_sha256": sha256_hex(Path(config.manifest_path).read_bytes()),
            "scores_sha256": sha256_hex(Path(config.scores_path).read_bytes()),
        }
    )

    filtered_at: dict[float, DatasetManifest] = {}

    def cell(bt: float) -> BtCell:
        cell_dir = out / f"bt_{bt:g}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        filtered, report = filter_by_score(manifest, scores, bt, config.filter_splits)
        filtered_at[bt] = filtered
        save_manifest(filtered, cell_dir / "manifest.json", meta=meta)
        write_json(cell_dir / "filter_report.json", {**report.to_dict(), "meta": meta})
        try:
            dets = _detect(config, filtered, "validation", bt, cell_dir, meta, image_root)
            try:
                ap = evaluate(filtered, "validation", dets)
            except DataError as exc:
                raise DetectorHookError(f"unusable detections: {exc}") from exc
            save_ap_result(cell_dir / "validation_ap.json", ap, meta=meta)
            return BtCell(bt, report, ap, True)
        except DetectorHookError as exc:
            return BtCell(bt, report, None, False, str(exc))

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            cells = tuple(pool.map(cell, config.bt_grid))
    else:
        cells = tuple(cell(bt) for bt in config.bt_grid)

    valid = [c for c in cells if c.valid]
    if not valid:
        first = cells[0].error or "no valid cells"
        raise DetectorHookError(f"every BT cell failed; first error: {first}")
    best_ap = max(c.validation_ap.overall_ap for c in valid)
    selected_bt = min(c.bt for c in valid if c.validation_ap.overall_ap == best_ap)

    def test_cell(bt: float) -> ApResult:
        cell_dir = out / f"bt_{bt:g}"
        dets = _detect(config, filtered_at[bt], "testing", bt, cell_dir, meta, image_root)
        try:
            ap = evaluate(filtered_at[bt], "testing", dets)
        except DataError as exc:
            raise DetectorHookError(f"unusable detections: {exc}") from exc
        save_ap_result(cell_dir / "test_ap.json", ap, meta=meta)
        return ap

    test_ap = test_cell(selected_bt)
    test_ap_all: dict[float, ApResult] = {selected_bt: test_ap}
    if config.eval_test_all:
        for c in valid:
            if c.bt != selected_bt:
                test_ap_all[c.bt] = test_cell(c.bt)

    report = SweepReport(
        bt_grid=config.bt_grid,
        categories=manifest.categories,
        cells=cells,
        selected_bt=selected_bt,
        test_ap=test_ap,
        test_ap_all=test_ap_all if config.eval_test_all else {},
        meta=meta,
    )
    write_json(out / "sweep_report.json", report.to_dict())
    tables_dir = out / "tables"
    tables_dir.mkdir(exist_ok=True)
    for name, table in emit_tables(report).items():
        (tables_dir / f"{name}.txt").write_text(render_text(table), encoding="utf-8")
        (tables_dir / f"{name}.csv").write_text(render_csv(table), encoding="utf-8")
    return report


def _ap_rows(categories: Sequence[str]) -> tuple[str, ...]:
    return ("Overall AP",) + tuple(f"AP of {c}" for c in categories)


def validation_ap_table(report: SweepReport) -> Table:
    cols = tuple(f"BT={c.bt:g}" for c in report.cells)
    rows = _ap_rows(report.categories)
    cells: list[tuple] = [
        tuple(
            c.validation_ap.overall_ap if c.valid else None for c in report.cells
        )
    ]
    for cat in report.categories:
        cells.append(
            tuple(
                c.validation_ap.per_category_ap.get(cat) if c.valid else None
                for c in report.cells
            )
        )
    return Table("validation AP per blur threshold", rows, cols, tuple(cells))


def test_ap_table(report: SweepReport) -> Table:
    if report.test_ap is None:
        return Table("test AP at the selected blur threshold", (), (), ())
    rows = _ap_rows(report.categories)
    cells = [(report.test_ap.overall_ap,)]
    for cat in report.categories:
        cells.append((report.test_ap.per_category_ap.get(cat),))
    return Table(
        "test AP at the selected blur threshold",
        rows,
        (f"BT={report.selected_bt:g}",),
        tuple(cells),
    )


def emit_tables(report: SweepReport) -> dict[str, Table]:
    """The three report tables: counts, validation AP, test AP."""
    return {
        "counts": count_table([c.filter_report for c in report.cells]),
        "validation_ap": validation_ap_table(report),
        "test_ap": test_ap_table(report),
    }
