"""Deterministic stand-in detector for synthetic corpora.

It "trains" by recording the mean intensity inside every training-split
ground-truth box, then thresholds the target image into foreground
connected components and labels each one after its nearest training
feature. Sharp planted rectangles are recovered near-perfectly; blur
erodes masks and shifts features, so recall and confidence degrade with
degradation severity, and mislabeled training boxes poison the
nearest-neighbor table. That gives a blur-threshold sweep something real
to optimize without any learning stack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .apeval import Detection
from .dataset import Box, DatasetManifest
from .images import decode_image

__all__ = ["StubConfig", "stub_detect"]


@dataclass(frozen=True)
class StubConfig:
    foreground_cut: float = 80.0  # synthetic backgrounds stay below, blobs above
    min_area: int = 12
    score_scale: float = 32.0


def _resolve(path: str, image_root) -> Path:
    p = Path(path)
    if image_root is not None and not p.is_absolute():
        return Path(image_root) / p
    return p


def _box_mean(img: np.ndarray, box: Box) -> float:
    r0 = max(int(math.floor(box.y)), 0)
    r1 = min(int(math.ceil(box.y + box.h)), img.shape[0])
    c0 = max(int(math.floor(box.x)), 0)
    c1 = min(int(math.ceil(box.x + box.w)), img.shape[1])
    if r1 <= r0 or c1 <= c0:
        return float(img.mean())
    return float(img[r0:r1, c0:c1].mean())


def _components(mask: np.ndarray, min_area: int) -> list[list[tuple[int, int]]]:
    """4-connected components of a boolean mask, in row-major discovery order."""
    rows = mask.tolist()
    h = len(rows)
    w = len(rows[0]) if h else 0
    seen = [[False] * w for _ in range(h)]
    comps: list[list[tuple[int, int]]] = []
    for r in range(h):
        row = rows[r]
        for c in range(w):
            if not row[c] or seen[r][c]:
                continue
            stack = [(r, c)]
            seen[r][c] = True
            pixels: list[tuple[int, int]] = []
            while stack:
                rr, cc = stack.pop()
                pixels.append((rr, cc))
                for nr, nc in ((rr - 1, cc), (rr + 1, cc), (rr, cc - 1), (rr, cc + 1)):
                    if 0 <= nr < h and 0 <= nc < w and rows[nr][nc] and not seen[nr][nc]:
                        seen[nr][nc] = True
                        stack.append((nr, nc))
            if len(pixels) >= min_area:
                comps.append(pixels)
    return comps


def stub_detect(
    manifest: DatasetManifest,
    split: str,
    seed: int = 0,
    image_root=None,
    config: StubConfig = StubConfig(),
) -> tuple[Detection, ...]:
    """Detect planted blobs on one split, calibrated on the training split.

    Fully deterministic; seed is accepted for hook parity but unused.
    With an empty training split every component falls back to the first
    manifest category at score 0.5.
    """
    del seed
    anns_by_image = manifest.annotations_by_image()
    features: list[tuple[float, str]] = []
    for rec in manifest.images:
        if rec.split != "training":
            continue
        anns = anns_by_image.get(rec.image_id)
        if not anns:
            continue
        img = decode_image(_resolve(rec.path, image_root))
        for ann in anns:
            features.append((_box_mean(img, ann.box), ann.category))

    detections: list[Detection] = []
    for rec in manifest.images:
        if rec.split != split:
            continue
        img = decode_image(_resolve(rec.path, image_root))
        mask = img > config.foreground_cut
        for pixels in _components(mask, config.min_area):
            idx = np.array(pixels)
            r0, c0 = idx.min(axis=0)
            r1, c1 = idx.max(axis=0)
            value = float(img[idx[:, 0], idx[:, 1]].mean())
            if features:
                best = 0
                best_d = abs(value - features[0][0])
                for j in range(1, len(features)):
                    d = abs(value - features[j][0])
                    if d < best_d:
                        best, best_d = j, d
                category = features[best][1]
                score = math.exp(-best_d / config.score_scale)
            else:
                category = manifest.categories[0]
                score = 0.5
            box = Box(float(c0), float(r0), float(c1 - c0 + 1), float(r1 - r0 + 1))
            detections.append(Detection(rec.image_id, box, category, score))
    return tuple(detections)
