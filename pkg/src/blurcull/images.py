"""Grayscale images and exact 2-D convolution.

Images are plain 2-D float64 arrays, row-major, nominal range [0, 255].
Nothing here clamps values; encoding back to an 8-bit format is the only
place clamping happens.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "LUMA_WEIGHTS",
    "BorderMode",
    "Kernel",
    "KernelClass",
    "convolve",
    "decode_image",
    "encode_pgm",
    "laplacian_kernel",
    "variance",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R BT.601


class BorderMode(enum.Enum):
    """How convolution reads pixels past the image border."""

    PERIODIC = "periodic"
    REPLICATE = "replicate"


class KernelClass(enum.Enum):
    LOWPASS = "lowpass"  # non-negative weights summing to 1
    UNCONSTRAINED = "unconstrained"


@dataclass(frozen=True)
class Kernel:
    """Odd, square convolution filter tagged with its normalization class."""

    weights: np.ndarray
    kind: KernelClass = KernelClass.UNCONSTRAINED

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"kernel must be square, got shape {w.shape}")
        if w.shape[0] % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {w.shape[0]}")
        if not np.isfinite(w).all():
            raise ValueError("kernel weights must be finite")
        if self.kind is KernelClass.LOWPASS:
            if (w < 0.0).any():
                raise ValueError("low-pass kernel weights must be non-negative")
            if abs(float(w.sum()) - 1.0) > 1e-12:
                raise ValueError("low-pass kernel weights must sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def radius(self) -> int:
        return self.weights.shape[0] // 2


def decode_image(path) -> np.ndarray:
    """Decode a PGM (P2/P5) or PNG (8-bit gray or RGB) file to float64 gray.

    Color inputs are reduced with the fixed luma weights 0.299/0.587/0.114.
    Raises DataError for unreadable files, unsupported formats, and
    zero-dimension images.
    """
    p = Path(path)
    try:
        blob = p.read_bytes()
    except OSError as exc:
        raise DataError(f"unreadable image file {p}: {exc}") from exc
    if blob[:2] in (b"P2", b"P5"):
        return _decode_pgm(blob, p)
    if blob[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(p)
    raise DataError(f"unsupported image format: {p}")


def _pgm_header(blob: bytes, path: Path) -> tuple[list[int], int]:
    """Parse width/height/maxval after the magic, honoring '#' comments."""
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(blob):
            c = blob[pos]
            if c in b" \t\r\n":
                pos += 1
            elif c == ord("#"):
                while pos < len(blob) and blob[pos] not in b"\r\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(blob) and blob[pos] not in b" \t\r\n#":
            pos += 1
        if start == pos:
            raise DataError(f"unreadable image file {path}: truncated PGM header")
        try:
            fields.append(int(blob[start:pos]))
        except ValueError as exc:
            raise DataError(f"unreadable image file {path}: bad PGM header") from exc
    return fields, pos


def _decode_pgm(blob: bytes, path: Path) -> np.ndarray:
    magic = blob[:2]
    (width, height, maxval), pos = _pgm_header(blob, path)
    if width <= 0 or height <= 0:
        raise DataError(f"zero-dimension image: {path}")
    if not 0 < maxval < 256:
        raise DataError(f"unsupported PGM maxval {maxval} in {path} (8-bit only)")
    n = width * height
    if magic == b"P5":
        data = blob[pos + 1 : pos + 1 + n]
        if len(data) < n:
            raise DataError(f"unreadable image file {path}: truncated PGM data")
        values = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
    else:
        tokens = blob[pos:].split()
        if len(tokens) < n:
            raise DataError(f"unreadable image file {path}: truncated PGM data")
        try:
            values = np.array([int(t) for t in tokens[:n]], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"unreadable image file {path}: bad PGM sample") from exc
        if (values < 0).any():
            raise DataError(f"unreadable image file {path}: negative PGM sample")
    if (values > maxval).any():
        raise DataError(f"unreadable image file {path}: sample exceeds maxval")
    return values.reshape(height, width)


def _decode_png(path: Path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64)
            elif mode == "RGB":
                rgb = np.asarray(im, dtype=np.float64)
                r, g, b = LUMA_WEIGHTS
                arr = rgb[..., 0] * r + rgb[..., 1] * g + rgb[..., 2] * b
            else:
                raise DataError(
                    f"unsupported PNG mode {mode!r} in {path} (need 8-bit gray or RGB)"
                )
    except UnidentifiedImageError as exc:
        raise DataError(f"unreadable image file {path}: {exc}") from exc
    except OSError as exc:
        raise DataError(f"unreadable image file {path}: {exc}") from exc
    if arr.ndim != 2 or arr.size == 0:
        raise DataError(f"zero-dimension image: {path}")
    return arr


def encode_pgm(img, path) -> None:
    """Write float64 grayscale as binary PGM (P5), clamping to [0, 255]."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"cannot encode image of shape {a.shape}")
    q = np.clip(np.rint(a), 0.0, 255.0).astype(np.uint8)
    h, w = q.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(q.tobytes())


def _require_image(img) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    return a


def convolve(img, kernel: Kernel, mode: BorderMode = BorderMode.REPLICATE) -> np.ndarray:
    """True convolution (kernel flipped); output has the input's size.

    All arithmetic is float64 and the result is never clamped. PERIODIC
    borders wrap around, REPLICATE repeats the edge pixel. Under PERIODIC
    the kernel must fit inside the image.
    """
    a = _require_image(img)
    h, w = a.shape
    k, r = kernel.size, kernel.radius
    if mode is BorderMode.PERIODIC and k > min(h, w):
        raise ValueError(
            f"kernel_too_large: {k}x{k} kernel does not fit a "
            f"{w}x{h} image under periodic borders"
        )
    if r == 0:
        return a * kernel.weights[0, 0]
    pad = np.pad(a, r, mode="wrap" if mode is BorderMode.PERIODIC else "edge")
    out = np.zeros_like(a)
    wts = kernel.weights
    for u in range(k):  # fixed tap order keeps the summation reproducible
        for v in range(k):
            wt = wts[u, v]
            if wt == 0.0:
                continue
            out += wt * pad[2 * r - u : 2 * r - u + h, 2 * r - v : 2 * r - v + w]
    return out


def laplacian_kernel() -> Kernel:
    """4-neighbor Laplacian, the high-pass filter behind the blur score."""
    return Kernel(
        np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]),
        KernelClass.UNCONSTRAINED,
    )


def variance(img) -> float:
    """Population variance (divide by N) of all pixel values."""
    a = _require_image(img)
    m = float(a.mean())
    return float(((a - m) ** 2).mean())
