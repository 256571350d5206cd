"""Grayscale image carrier, Gaussian noise injection, PSNR, and PGM (P5) I/O.

Images are plain 2D float64 numpy arrays in row-major order with a nominal
intensity range of [0, 255].  Processing never clips; values are clipped and
rounded to 8-bit only when written to disk.
"""

from __future__ import annotations

import math

import numpy as np

PEAK = 255.0


class ImageFormatError(ValueError):
    """Raised when an image file cannot be parsed as 8-bit binary PGM."""


def as_image(data) -> np.ndarray:
    """Validate and return *data* as a 2D float64 image array."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be non-empty, got shape {arr.shape}")
    return arr


def add_gaussian_noise(img: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Return *img* plus i.i.d. N(0, sigma^2) noise, deterministic per *seed*.

    Values are intentionally not clipped to [0, 255]; clipping happens only
    on save so that PSNR arithmetic over the processing chain stays linear.
    """
    img = as_image(img)
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    return img + rng.normal(0.0, sigma, size=img.shape)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with the peak fixed at 255.

    Returns math.inf when the images are identical (zero MSE).
    """
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def _read_pgm_tokens(raw: bytes, count: int):
    """Yield *count* whitespace-separated header tokens, skipping # comments.

    Returns (tokens, offset-just-past-the-single-whitespace-after-last-token).
    """
    tokens = []
    i = 0
    n = len(raw)
    while len(tokens) < count:
        while i < n and raw[i : i + 1].isspace():
            i += 1
        if i < n and raw[i : i + 1] == b"#":
            while i < n and raw[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < n and not raw[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ImageFormatError("truncated PGM header")
        tokens.append(raw[start:i])
    if i >= n:
        raise ImageFormatError("truncated PGM header")
    return tokens, i + 1  # exactly one whitespace byte after maxval


def load_pgm(path) -> np.ndarray:
    """Load an 8-bit binary PGM (P5) file as a float64 image."""
    with open(path, "rb") as f:
        raw = f.read()
    if not raw.startswith(b"P5"):
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file")
    tokens, offset = _read_pgm_tokens(raw, 4)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ImageFormatError(f"{path}: malformed PGM header") from exc
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval} (need 8-bit)")
    data = raw[offset : offset + width * height]
    if len(data) < width * height:
        raise ImageFormatError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width).astype(np.float64)


def save_pgm(img: np.ndarray, path) -> None:
    """Write *img* as binary PGM (P5), clipping and rounding to [0, 255]."""
    img = as_image(img)
    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    height, width = pixels.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (width, height))
        f.write(pixels.tobytes())
