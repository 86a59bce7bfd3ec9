"""From-scratch COCO-style average precision for box detections.

Matching is greedy by detection score: each detection takes the
highest-IoU still-unmatched ground-truth box of its image and category,
and counts as a true positive when that IoU clears the threshold.
Precision-recall curves use the monotone precision envelope sampled at
101 recall points, averaged over the 10 IoU thresholds 0.50 to 0.95 and
then over categories, on a 0-100 scale. Categories with no ground truth
in the evaluated split are excluded from the mean rather than scored 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import Box, DatasetManifest, SPLITS
from .errors import DataError
from .jsonio import read_json, write_json

__all__ = [
    "IOU_THRESHOLDS",
    "RECALL_POINTS",
    "ApResult",
    "Detection",
    "average_precision",
    "evaluate",
    "iou",
    "load_detections",
    "match_detections",
    "save_detections",
]

IOU_THRESHOLDS: tuple[float, ...] = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))

# exact i/100 values; a linspace can drift an ulp and flip boundary samples
RECALL_POINTS = np.arange(101) / 100.0


@dataclass(frozen=True)
class Detection:
    """One scored predicted box, resolvable against a manifest image."""

    image_id: str
    box: Box
    category: str
    score: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValueError(f"detection score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class ApResult:
    """AP on the 0-100 scale: overall, per category, per (category, IoU)."""

    overall_ap: float
    per_category_ap: Mapping[str, float]
    per_iou_ap: Mapping[str, Mapping[float, float]]

    def to_dict(self) -> dict:
        return {
            "overall_ap": round(float(self.overall_ap), 9),
            "per_category_ap": {
                c: round(float(v), 9) for c, v in self.per_category_ap.items()
            },
            "per_iou_ap": {
                c: {f"{t:.2f}": round(float(v), 9) for t, v in cell.items()}
                for c, cell in self.per_iou_ap.items()
            },
        }


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix0 = max(a.x, b.x)
    iy0 = max(a.y, b.y)
    ix1 = min(a.x + a.w, b.x + b.w)
    iy1 = min(a.y + a.h, b.y + b.h)
    iw = ix1 - ix0
    ih = iy1 - iy0
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def _score_order(dets: Sequence[Detection]) -> list[int]:
    # stable sort: score ties keep input order
    return sorted(range(len(dets)), key=lambda i: -dets[i].score)


def _match_flags(
    gt_boxes: Sequence[Box], dets: Sequence[Detection], iou_thresh: float
) -> list[bool]:
    """TP flags aligned to the input order of dets."""
    taken = [False] * len(gt_boxes)
    flags = [False] * len(dets)
    for i in _score_order(dets):
        best_iou = -1.0
        best_j = -1
        for j, g in enumerate(gt_boxes):
            if taken[j]:
                continue
            v = iou(dets[i].box, g)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0 and best_iou >= iou_thresh:
            taken[best_j] = True
            flags[i] = True
    return flags


def match_detections(
    gt_boxes: Sequence[Box], dets: Sequence[Detection], iou_thresh: float
) -> list[tuple[Detection, bool]]:
    """Greedy matching of one image+category cell, in descending-score order."""
    flags = _match_flags(gt_boxes, dets, iou_thresh)
    return [(dets[i], flags[i]) for i in _score_order(dets)]


def average_precision(tp_flags: Sequence[bool], n_gt: int) -> float | None:
    """One category/threshold cell: 101-point interpolated AP on 0-100.

    tp_flags must already be in global descending-score order. Returns
    None when n_gt == 0; that cell is excluded from any averaging.
    """
    if n_gt < 0:
        raise ValueError(f"n_gt must be >= 0, got {n_gt}")
    if n_gt == 0:
        return None
    flags = np.asarray(tp_flags, dtype=bool)
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    precision = tp / np.arange(1, flags.size + 1)
    recall = tp / float(n_gt)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(
        idx < flags.size, envelope[np.minimum(idx, flags.size - 1)], 0.0
    )
    return float(sampled.mean() * 100.0)


def evaluate(
    manifest: DatasetManifest,
    split: str,
    detections: Sequence[Detection],
    iou_thresholds: Sequence[float] = IOU_THRESHOLDS,
) -> ApResult:
    """Score detections for one split against the manifest ground truth."""
    if split not in SPLITS:
        raise ValueError(f"unknown split {split!r}")
    by_id = manifest.images_by_id()
    split_ids = {rec.image_id for rec in manifest.images if rec.split == split}
    for d in detections:
        if d.image_id not in by_id:
            raise DataError(f"detection references unknown image {d.image_id!r}")
        if d.image_id not in split_ids:
            raise DataError(
                f"detection image {d.image_id!r} is not in split {split!r}"
            )
        if d.category not in manifest.categories:
            raise DataError(
                f"detection category {d.category!r} not in manifest categories"
            )

    gt_by_cat_img: dict[str, dict[str, list[Box]]] = {
        c: {} for c in manifest.categories
    }
    n_gt: dict[str, int] = {c: 0 for c in manifest.categories}
    for ann in manifest.annotations:
        if ann.image_id in split_ids:
            gt_by_cat_img[ann.category].setdefault(ann.image_id, []).append(ann.box)
            n_gt[ann.category] += 1

    per_iou_ap: dict[str, dict[float, float]] = {}
    for cat in manifest.categories:
        if n_gt[cat] == 0:
            continue
        positions = [i for i, d in enumerate(detections) if d.category == cat]
        global_order = sorted(positions, key=lambda i: -detections[i].score)
        by_image: dict[str, list[int]] = {}
        for i in positions:
            by_image.setdefault(detections[i].image_id, []).append(i)
        cell: dict[float, float] = {}
        for t in iou_thresholds:
            flag_at: dict[int, bool] = {}
            for image_id, idxs in by_image.items():
                local = [detections[i] for i in idxs]
                flags = _match_flags(gt_by_cat_img[cat].get(image_id, []), local, t)
                for i, f in zip(idxs, flags):
                    flag_at[i] = f
            # n_gt[cat] > 0 here, so the cell is never excluded
            cell[float(t)] = average_precision(
                [flag_at[i] for i in global_order], n_gt[cat]
            )
        per_iou_ap[cat] = cell

    per_category_ap = {
        cat: sum(cell.values()) / len(cell) for cat, cell in per_iou_ap.items()
    }
    if per_category_ap:
        overall = sum(per_category_ap.values()) / len(per_category_ap)
    else:
        overall = 0.0
    return ApResult(overall, per_category_ap, per_iou_ap)


def load_detections(path) -> tuple[Detection, ...]:
    """Read a detection file: a bare JSON list or {"detections": [...]}."""
    doc = read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("detections")
    if not isinstance(doc, list):
        raise DataError(f"detections {path}: expected a list of detections")
    out: list[Detection] = []
    for i, rec in enumerate(doc):
        try:
            x, y, w, h = rec["bbox"]
            out.append(
                Detection(
                    image_id=str(rec["image_id"]),
                    box=Box(float(x), float(y), float(w), float(h)),
                    category=str(rec["category"]),
                    score=float(rec["score"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"detections {path}: [{i}]: {exc}") from exc
    return tuple(out)


def save_detections(path, detections: Sequence[Detection], meta: dict | None = None) -> None:
    doc = {
        "detections": [
            {
                "image_id": d.image_id,
                "bbox": d.box.as_list(),
                "category": d.category,
                "score": d.score,
            }
            for d in detections
        ]
    }
    if meta is not None:
        doc["meta"] = meta
    write_json(path, doc)


def save_ap_result(path, result: ApResult, meta: dict | None = None) -> None:
    doc = result.to_dict()
    if meta is not None:
        doc["meta"] = meta
    write_json(path, doc)
