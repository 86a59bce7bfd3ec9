"""Blur synthesis and the Laplacian-variance blur score.

A degraded image is the clean image convolved with a low-pass kernel plus
white Gaussian noise, never clamped. The blur score is the population
variance of the image's Laplacian response; an image is rejected when its
score falls strictly below the blur threshold (BT).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from . import rng
from .errors import DataError
from .images import BorderMode, Kernel, KernelClass, convolve, laplacian_kernel, variance

__all__ = [
    "BlurScore",
    "BoxBlur",
    "DegradationSpec",
    "GaussianBlur",
    "MotionBlur",
    "blur_score",
    "degrade",
    "is_rejected",
    "load_scores",
    "make_kernel",
    "save_scores",
]


@dataclass(frozen=True)
class GaussianBlur:
    """Isotropic Gaussian kernel, truncated at radius ceil(3*sigma)."""

    sigma: float


@dataclass(frozen=True)
class BoxBlur:
    """Uniform k x k averaging kernel; size 1 is the identity."""

    size: int


@dataclass(frozen=True)
class MotionBlur:
    """Uniform weights along a rasterized line segment through the center."""

    length: int
    angle_deg: float = 0.0


BlurKernelSpec = Union[GaussianBlur, BoxBlur, MotionBlur]


@dataclass(frozen=True)
class DegradationSpec:
    kernel: BlurKernelSpec
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0.0):
            raise ValueError(f"noise_sigma must be finite and >= 0, got {self.noise_sigma}")


def _round_half_away(v: float) -> int:
    return int(math.floor(v + 0.5)) if v >= 0 else -int(math.floor(-v + 0.5))


def make_kernel(spec: BlurKernelSpec) -> Kernel:
    """Build the low-pass kernel for a blur family spec."""
    if isinstance(spec, GaussianBlur):
        sigma = float(spec.sigma)
        if not (math.isfinite(sigma) and sigma > 0.0):
            raise ValueError(f"gaussian sigma must be positive, got {spec.sigma}")
        r = math.ceil(3.0 * sigma)
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
        w = np.exp(-(xx**2 + yy**2) / (2.0 * sigma * sigma))
        return Kernel(w / w.sum(), KernelClass.LOWPASS)
    if isinstance(spec, BoxBlur):
        k = int(spec.size)
        if k < 1:
            raise ValueError(f"box size must be >= 1, got {spec.size}")
        if k % 2 == 0:
            raise ValueError(f"box size must be odd, got {spec.size}")
        return Kernel(np.full((k, k), 1.0 / (k * k)), KernelClass.LOWPASS)
    if isinstance(spec, MotionBlur):
        length = int(spec.length)
        if length < 1:
            raise ValueError(f"motion length must be >= 1, got {spec.length}")
        if length == 1:
            return Kernel(np.ones((1, 1)), KernelClass.LOWPASS)
        r = math.ceil((length - 1) / 2)
        w = np.zeros((2 * r + 1, 2 * r + 1))
        dx = math.cos(math.radians(spec.angle_deg))
        dy = math.sin(math.radians(spec.angle_deg))
        for i in range(length):
            t = i - (length - 1) / 2.0
            w[r + _round_half_away(t * dy), r + _round_half_away(t * dx)] += 1.0
        return Kernel(w / w.sum(), KernelClass.LOWPASS)
    raise TypeError(f"unknown blur kernel spec: {spec!r}")


def degrade(img, spec: DegradationSpec) -> np.ndarray:
    """Blur and add seeded white Gaussian noise; unclamped, bit-reproducible."""
    out = convolve(img, make_kernel(spec.kernel), BorderMode.REPLICATE)
    if spec.noise_sigma > 0.0:
        noise = rng.gaussian(spec.seed, out.size, spec.noise_sigma)
        out = out + noise.reshape(out.shape)
    return out


@dataclass(frozen=True)
class BlurScore:
    image_id: str
    variance_of_laplacian: float

    def __post_init__(self) -> None:
        v = self.variance_of_laplacian
        if not (math.isfinite(v) and v >= 0.0):
            raise ValueError(f"blur score must be finite and >= 0, got {v}")


def blur_score(img, mode: BorderMode = BorderMode.REPLICATE) -> float:
    """Variance of the Laplacian response; low values indicate blur."""
    return variance(convolve(img, laplacian_kernel(), mode))


def is_rejected(score, bt: float) -> bool:
    """True when the score falls strictly below the threshold (BT=0 keeps all)."""
    if not (math.isfinite(bt) and bt >= 0.0):
        raise ValueError(f"blur threshold must be finite and >= 0, got {bt}")
    v = score.variance_of_laplacian if isinstance(score, BlurScore) else float(score)
    return v < bt


def save_scores(path, scores: Iterable[BlurScore]) -> None:
    """Write the scores CSV: image_id,variance_of_laplacian at 9 decimals."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["image_id", "variance_of_laplacian"])
        for s in scores:
            writer.writerow([s.image_id, f"{s.variance_of_laplacian:.9f}"])


def load_scores(path) -> dict[str, float]:
    """Read a scores CSV back into an image_id -> score mapping."""
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise DataError(f"unreadable scores file {path}: {exc}") from exc
    if rows and rows[0] == ["image_id", "variance_of_laplacian"]:
        rows = rows[1:]
    out: dict[str, float] = {}
    for i, row in enumerate(rows):
        if len(row) != 2:
            raise DataError(f"scores row {i}: expected 2 fields, got {len(row)}")
        image_id, text = row
        try:
            value = float(text)
        except ValueError as exc:
            raise DataError(f"scores row {i}: bad score {text!r}") from exc
        if not (math.isfinite(value) and value >= 0.0):
            raise DataError(f"scores row {i}: score must be finite and >= 0")
        if image_id in out:
            raise DataError(f"scores row {i}: duplicate image id {image_id!r}")
        out[image_id] = value
    return out
