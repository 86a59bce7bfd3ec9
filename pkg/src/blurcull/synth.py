"""Seeded synthetic corpus generator.

Scenes are textured backgrounds with non-overlapping constant-intensity
rectangles, one intensity band per category. A chosen fraction of the
training split is degraded with heavy blur and gets its labels
category-swapped, planting exactly the kind of noise a blur threshold
should cull. Everything derives from one corpus seed, so regeneration is
bit-identical; the sidecar records the generator name and parameters.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .blur import BoxBlur, DegradationSpec, GaussianBlur, degrade
from .dataset import (
    DEFAULT_CATEGORIES,
    Annotation,
    Box,
    DatasetManifest,
    ImageRecord,
    assign_splits,
    save_manifest,
    seeded_shuffle,
    validate_manifest,
)
from .images import encode_pgm
from .jsonio import build_meta, write_json
from .rng import GENERATOR_NAME, UniformStream, derive_seed

__all__ = ["SynthConfig", "generate_corpus"]

_SWAP = {"food": "beverage", "beverage": "food"}


@dataclass(frozen=True)
class SynthConfig:
    out_dir: str
    n_train: int = 60
    n_val: int = 24
    n_test: int = 24
    width: int = 96
    height: int = 96
    seed: int = 0
    min_blobs: int = 1
    max_blobs: int = 3
    corrupt_fraction: float = 0.10
    corrupt_labels: str = "keep"  # keep: labels stay while blur drifts the content
    sigma_extreme: float = 8.0
    sigma_grid: tuple[float, ...] = (0.0, 0.6, 1.2)
    noise_sigma: float = 0.5
    background_level: float = 40.0
    texture_amp: float = 25.0
    food_band: tuple[float, float] = (170.0, 230.0)
    beverage_band: tuple[float, float] = (95.0, 150.0)

    def __post_init__(self) -> None:
        if min(self.n_train, self.n_val, self.n_test) < 0:
            raise ValueError("split sizes must be >= 0")
        if self.n_train + self.n_val + self.n_test < 1:
            raise ValueError("corpus must contain at least one image")
        if self.width < 16 or self.height < 16:
            raise ValueError("scenes smaller than 16x16 cannot hold blobs")
        if not 1 <= self.min_blobs <= self.max_blobs:
            raise ValueError("need 1 <= min_blobs <= max_blobs")
        if not 0.0 <= self.corrupt_fraction <= 1.0:
            raise ValueError("corrupt_fraction must be in [0, 1]")
        if not self.sigma_grid:
            raise ValueError("sigma_grid must be non-empty")
        if any(s < 0 for s in self.sigma_grid):
            raise ValueError("sigma_grid values must be >= 0")
        if self.corrupt_labels not in ("swap", "keep"):
            raise ValueError(f"corrupt_labels must be swap or keep, got {self.corrupt_labels!r}")


def _rand_int(stream: UniformStream, lo: int, hi: int) -> int:
    """Uniform integer in [lo, hi] from one stream draw."""
    u = float(stream.uniform(1)[0])
    v = lo + int(u * (hi - lo + 1))
    return min(v, hi)  # u can be exactly 1.0


def _render_scene(
    config: SynthConfig, image_id: str
) -> tuple[np.ndarray, list[tuple[Box, str]]]:
    stream = UniformStream(derive_seed(config.seed, image_id, "scene"))
    h, w = config.height, config.width
    texture = (stream.uniform(h * w).reshape(h, w) * 2.0 - 1.0) * config.texture_amp
    img = config.background_level + texture
    bands = {"food": config.food_band, "beverage": config.beverage_band}
    blobs: list[tuple[Box, str]] = []
    n_blobs = _rand_int(stream, config.min_blobs, config.max_blobs)
    for _ in range(n_blobs):
        for _attempt in range(40):
            bw = _rand_int(stream, 10, min(26, w - 6))
            bh = _rand_int(stream, 10, min(26, h - 6))
            x = _rand_int(stream, 2, w - bw - 2)
            y = _rand_int(stream, 2, h - bh - 2)
            clear = all(
                x >= b.x + b.w + 3 or b.x >= x + bw + 3 or y >= b.y + b.h + 3 or b.y >= y + bh + 3
                for b, _cat in blobs
            )
            if not clear:
                continue
            category = "food" if float(stream.uniform(1)[0]) <= 0.5 else "beverage"
            lo, hi = bands[category]
            intensity = lo + float(stream.uniform(1)[0]) * (hi - lo)
            img[y : y + bh, x : x + bw] = intensity
            blobs.append((Box(float(x), float(y), float(bw), float(bh)), category))
            break
    return img, blobs


def generate_corpus(config: SynthConfig) -> DatasetManifest:
    """Render, degrade, and write the corpus; returns its manifest."""
    out = Path(config.out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    n = config.n_train + config.n_val + config.n_test
    ids = [f"img_{i:04d}" for i in range(n)]
    split_of = assign_splits(
        ids, config.n_train, config.n_val, config.n_test,
        derive_seed(config.seed, "split"),
    )
    train_ids = [i for i in ids if split_of[i] == "training"]
    n_corrupt = int(round(config.corrupt_fraction * len(train_ids)))
    corrupted = set(
        seeded_shuffle(train_ids, derive_seed(config.seed, "corrupt"))[:n_corrupt]
    )

    records: list[ImageRecord] = []
    annotations: list[Annotation] = []
    ordinal = {"training": 0, "validation": 0, "testing": 0}
    for image_id in ids:
        split = split_of[image_id]
        scene, blobs = _render_scene(config, image_id)
        if image_id in corrupted:
            sigma = config.sigma_extreme
        else:
            sigma = config.sigma_grid[ordinal[split] % len(config.sigma_grid)]
        ordinal[split] += 1
        spec = DegradationSpec(
            kernel=GaussianBlur(sigma) if sigma > 0 else BoxBlur(1),
            noise_sigma=config.noise_sigma,
            seed=derive_seed(config.seed, image_id, "noise"),
        )
        encode_pgm(degrade(scene, spec), out / "images" / f"{image_id}.pgm")
        records.append(
            ImageRecord(
                image_id=image_id,
                path=f"images/{image_id}.pgm",
                width=config.width,
                height=config.height,
                split=split,
            )
        )
        for box, category in blobs:
            if image_id in corrupted and config.corrupt_labels == "swap":
                category = _SWAP[category]
            annotations.append(Annotation(image_id, box, category))

    manifest = DatasetManifest(
        tuple(records), tuple(annotations), DEFAULT_CATEGORIES
    )
    validate_manifest(manifest)
    cfg = asdict(config)
    del cfg["out_dir"]  # the corpus identity must not depend on where it lands
    meta = build_meta(cfg)
    save_manifest(manifest, out / "manifest.json", meta=meta)
    write_json(
        out / "corpus_meta.json",
        {
            "generator_name": GENERATOR_NAME,
            "seed": config.seed,
            "kernel_family": "gaussian",
            "params": cfg,
            "noise_sigma": config.noise_sigma,
            "meta": meta,
        },
    )
    return manifest
