"""Dataset manifest schema, validation, blur-threshold filtering, and counts.

A manifest is one JSON document: images (with split assignment), box
annotations, and the category list. Filtering drops images whose blur
score falls below a threshold, together with their annotations; splits
other than the filtered ones are passed through untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .blur import is_rejected
from .errors import DataError
from .jsonio import read_json, write_json
from .rng import UniformStream
from .tables import Table

SPLITS = ("training", "validation", "testing")
DEFAULT_CATEGORIES = ("food", "beverage")

__all__ = [
    "DEFAULT_CATEGORIES",
    "SPLITS",
    "Annotation",
    "Box",
    "DatasetManifest",
    "FilterReport",
    "ImageRecord",
    "assign_splits",
    "count_table",
    "filter_by_score",
    "filter_training",
    "load_manifest",
    "save_manifest",
    "seeded_shuffle",
    "split_stats",
    "validate_manifest",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: top-left corner plus positive width and height."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        vals = (self.x, self.y, self.w, self.h)
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals):
            raise ValueError(f"box fields must be finite numbers: {vals}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box corner must be non-negative: {vals}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive: {vals}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_list(self) -> list[float]:
        return [float(self.x), float(self.y), float(self.w), float(self.h)]


@dataclass(frozen=True)
class Annotation:
    image_id: str
    box: Box
    category: str


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    path: str
    width: int
    height: int
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    images: tuple[ImageRecord, ...]
    annotations: tuple[Annotation, ...]
    categories: tuple[str, ...] = DEFAULT_CATEGORIES

    def images_by_id(self) -> dict[str, ImageRecord]:
        return {rec.image_id: rec for rec in self.images}

    def split_images(self, split: str) -> tuple[ImageRecord, ...]:
        return tuple(rec for rec in self.images if rec.split == split)

    def annotations_by_image(self) -> dict[str, list[Annotation]]:
        out: dict[str, list[Annotation]] = {}
        for ann in self.annotations:
            out.setdefault(ann.image_id, []).append(ann)
        return out


def validate_manifest(manifest: DatasetManifest) -> None:
    """Check every manifest invariant; DataError messages carry record indexes."""
    cats = manifest.categories
    if not cats or len(set(cats)) != len(cats):
        raise DataError("categories must be non-empty and unique")
    by_id: dict[str, ImageRecord] = {}
    for i, rec in enumerate(manifest.images):
        if not rec.image_id:
            raise DataError(f"images[{i}]: empty image id")
        if rec.image_id in by_id:
            raise DataError(f"images[{i}]: duplicate image id {rec.image_id!r}")
        if rec.split not in SPLITS:
            raise DataError(f"images[{i}]: unknown split {rec.split!r}")
        if rec.width < 1 or rec.height < 1:
            raise DataError(
                f"images[{i}]: non-positive dimensions {rec.width}x{rec.height}"
            )
        by_id[rec.image_id] = rec
    for i, ann in enumerate(manifest.annotations):
        rec = by_id.get(ann.image_id)
        if rec is None:
            raise DataError(
                f"annotations[{i}]: dangling annotation, no image {ann.image_id!r}"
            )
        if ann.category not in cats:
            raise DataError(f"annotations[{i}]: unknown category {ann.category!r}")
        b = ann.box
        if b.x + b.w > rec.width or b.y + b.h > rec.height:
            raise DataError(
                f"annotations[{i}]: box {b.as_list()} outside "
                f"{rec.width}x{rec.height} image {ann.image_id!r}"
            )


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a manifest JSON file."""
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise DataError(f"manifest {path}: top level must be an object")
    images: list[ImageRecord] = []
    for i, rec in enumerate(doc.get("images", [])):
        try:
            images.append(
                ImageRecord(
                    image_id=str(rec["id"]),
                    path=str(rec["path"]),
                    width=int(rec["width"]),
                    height=int(rec["height"]),
                    split=str(rec["split"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"manifest {path}: images[{i}]: {exc}") from exc
    annotations: list[Annotation] = []
    for i, rec in enumerate(doc.get("annotations", [])):
        try:
            x, y, w, h = rec["bbox"]
            annotations.append(
                Annotation(
                    image_id=str(rec["image_id"]),
                    box=Box(float(x), float(y), float(w), float(h)),
                    category=str(rec["category"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"manifest {path}: annotations[{i}]: {exc}") from exc
    categories = tuple(str(c) for c in doc.get("categories", DEFAULT_CATEGORIES))
    manifest = DatasetManifest(tuple(images), tuple(annotations), categories)
    validate_manifest(manifest)
    return manifest


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    return {
        "categories": list(manifest.categories),
        "images": [
            {
                "id": rec.image_id,
                "path": rec.path,
                "width": rec.width,
                "height": rec.height,
                "split": rec.split,
            }
            for rec in manifest.images
        ],
        "annotations": [
            {
                "image_id": ann.image_id,
                "bbox": ann.box.as_list(),
                "category": ann.category,
            }
            for ann in manifest.annotations
        ],
    }


def save_manifest(manifest: DatasetManifest, path, meta: dict | None = None) -> None:
    """Write the canonical (key-sorted, stable float) manifest JSON."""
    doc = manifest_to_dict(manifest)
    if meta is not None:
        doc["meta"] = meta
    write_json(path, doc)


@dataclass(frozen=True)
class FilterReport:
    """Per-threshold outcome: what survived the blur filter."""

    bt: float
    kept_images: int
    kept_annotations: Mapping[str, int]
    rejected_image_ids: tuple[str, ...] = ()

    @property
    def kept_food(self) -> int:
        return int(self.kept_annotations.get("food", 0))

    @property
    def kept_beverage(self) -> int:
        return int(self.kept_annotations.get("beverage", 0))

    def to_dict(self) -> dict:
        return {
            "bt": float(self.bt),
            "kept_images": self.kept_images,
            "kept_food": self.kept_food,
            "kept_beverage": self.kept_beverage,
            "kept_annotations": dict(self.kept_annotations),
            "rejected_image_ids": list(self.rejected_image_ids),
        }


def _score_map(scores) -> Mapping[str, float]:
    if isinstance(scores, Mapping):
        return scores
    return {s.image_id: s.variance_of_laplacian for s in scores}


def filter_by_score(
    manifest: DatasetManifest,
    scores,
    bt: float,
    splits: Sequence[str] = ("training",),
) -> tuple[DatasetManifest, FilterReport]:
    """Drop images in the chosen splits scoring strictly below bt.

    Annotations leave with their images; all other splits are passed
    through bit-identically. Raises DataError when a filtered-split image
    has no score.
    """
    smap = _score_map(scores)
    rejected: list[str] = []
    for rec in manifest.images:
        if rec.split not in splits:
            continue
        if rec.image_id not in smap:
            raise DataError(
                f"missing blur score for {rec.split} image {rec.image_id!r}"
            )
        if is_rejected(smap[rec.image_id], bt):
            rejected.append(rec.image_id)
    gone = set(rejected)
    images = tuple(rec for rec in manifest.images if rec.image_id not in gone)
    annotations = tuple(a for a in manifest.annotations if a.image_id not in gone)
    filtered = DatasetManifest(images, annotations, manifest.categories)
    kept_ids = {rec.image_id for rec in images if rec.split in splits}
    counts = {c: 0 for c in manifest.categories}
    for ann in annotations:
        if ann.image_id in kept_ids:
            counts[ann.category] += 1
    report = FilterReport(
        bt=float(bt),
        kept_images=len(kept_ids),
        kept_annotations=counts,
        rejected_image_ids=tuple(rejected),
    )
    return filtered, report


def filter_training(manifest: DatasetManifest, scores, bt: float):
    """The standard protocol: filter the training split only."""
    return filter_by_score(manifest, scores, bt, splits=("training",))


def count_table(reports: Sequence[FilterReport]) -> Table:
    """Counts per threshold: one #images row plus one row per category."""
    bts = [r.bt for r in reports]
    if any(b2 <= b1 for b1, b2 in zip(bts, bts[1:])):
        raise ValueError("reports must be sorted by strictly ascending bt")
    if not reports:
        return Table("training counts per blur threshold", (), (), ())
    categories = list(reports[0].kept_annotations)
    rows = ["#images"] + [f"#{c}" for c in categories]
    cols = [f"BT={r.bt:g}" for r in reports]
    cells = [[r.kept_images for r in reports]]
    for c in categories:
        cells.append([int(r.kept_annotations.get(c, 0)) for r in reports])
    return Table(
        "training counts per blur threshold",
        tuple(rows),
        tuple(cols),
        tuple(tuple(row) for row in cells),
    )


def split_stats(manifest: DatasetManifest) -> dict[str, dict[str, int]]:
    """Image and per-category annotation counts for each split."""
    split_of = {rec.image_id: rec.split for rec in manifest.images}
    out = {
        s: {"images": 0, **{c: 0 for c in manifest.categories}} for s in SPLITS
    }
    for rec in manifest.images:
        out[rec.split]["images"] += 1
    for ann in manifest.annotations:
        out[split_of[ann.image_id]][ann.category] += 1
    return out


def seeded_shuffle(items: Iterable, seed: int) -> list:
    """Fisher-Yates over the portable uniform stream; order depends only on seed."""
    out = list(items)
    if len(out) < 2:
        return out
    u = UniformStream(seed).uniform(len(out) - 1)
    for i in range(len(out) - 1, 0, -1):
        j = int(u[len(out) - 1 - i] * (i + 1))
        if j > i:  # uniforms live in (0, 1], so u == 1.0 must clamp
            j = i
        out[i], out[j] = out[j], out[i]
    return out


def assign_splits(
    image_ids: Sequence[str], n_train: int, n_val: int, n_test: int, seed: int
) -> dict[str, str]:
    """Seeded random split assignment for synthetic corpora."""
    if n_train + n_val + n_test != len(image_ids):
        raise ValueError(
            f"split sizes {n_train}+{n_val}+{n_test} != {len(image_ids)} images"
        )
    shuffled = seeded_shuffle(image_ids, seed)
    out: dict[str, str] = {}
    for i, image_id in enumerate(shuffled):
        if i < n_train:
            out[image_id] = "training"
        elif i < n_train + n_val:
            out[image_id] = "validation"
        else:
            out[image_id] = "testing"
    return out
