"""Deterministic synthetic grayscale test images.

Stand-ins for the classic 512x512 photographs used in denoising papers (which
cannot be bundled here): each preset mixes smooth shading, hard-edged shapes,
and band-limited texture so that patch classification and ordering see the
same regimes natural images exercise.  Generation is deterministic per
(name, size): repeated calls are bit-identical.

TRAIN_NAMES are used for filter learning, TEST_NAMES for evaluation; they
share no preset.
"""

from __future__ import annotations

import zlib

import numpy as np

TRAIN_NAMES = ("dunes", "plaid", "speckle")
TEST_NAMES = ("rings", "blocks", "waves")
ALL_NAMES = TRAIN_NAMES + TEST_NAMES


def _bandpass_noise(rng, shape, lo, hi, amplitude):
    """White noise band-limited to spatial frequencies in [lo, hi] cycles/px."""
    field = rng.standard_normal(shape)
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    radius = np.hypot(fy, fx)
    mask = (radius >= lo) & (radius <= hi)
    shaped = np.real(np.fft.ifft2(np.fft.fft2(field) * mask))
    peak = np.abs(shaped).max()
    return shaped / peak * amplitude if peak > 0 else shaped


def _coords(size):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    return yy / size, xx / size  # normalized to [0, 1)


def synthetic_image(name: str, size: int = 512) -> np.ndarray:
    """Render the named preset at the given square size (float64, [0, 255])."""
    if name not in ALL_NAMES:
        raise ValueError(f"unknown synthetic image {name!r}; choose from {ALL_NAMES}")
    if size < 16:
        raise ValueError(f"size must be >= 16, got {size}")
    rng = np.random.default_rng(zlib.crc32(name.encode()) ^ (size * 2654435761 % 2**32))
    y, x = _coords(size)
    img = np.full((size, size), 128.0)

    if name == "rings":
        r = np.hypot(y - 0.45, x - 0.52)
        img = 120 + 55 * np.cos(r * 46.0) * np.exp(-r * 1.8) + 25 * (x - 0.5)
        img[(y - 0.8) ** 2 + (x - 0.18) ** 2 < 0.012] = 215.0
        img[int(0.06 * size) : int(0.22 * size), int(0.62 * size) : int(0.93 * size)] = 70.0
        tex = _bandpass_noise(rng, (size, size), 0.06, 0.22, 78.0)
        band = (y > 0.62) & (x > 0.45)
        img = np.where(band, 135 + tex, img)
    elif name == "blocks":
        img = 100 + 70 * x + 30 * np.sin(6.1 * y)
        levels = [52, 88, 150, 201, 235]
        for i, lv in enumerate(levels):
            r0 = int((0.08 + 0.17 * i) * size)
            img[r0 : r0 + size // 9, int(0.07 * size) : int(0.46 * size)] = lv
        stripes = 42 * np.sign(np.sin(x * 118.0 + 2.4 * y))
        zone = (x > 0.56) & (y > 0.30) & (y < 0.92)
        img = np.where(zone, 128 + stripes + 14 * np.sin(y * 40), img)
    elif name == "waves":
        img = 125 + 48 * np.sin(9.3 * (x + 0.7 * y)) + 22 * np.cos(4.1 * (y - 0.3 * x))
        disc = (y - 0.3) ** 2 + (x - 0.26) ** 2 < 0.025
        img[disc] = 205.0
        tex = _bandpass_noise(rng, (size, size), 0.09, 0.30, 70.0)
        corner = (y + x) > 1.25
        img = np.where(corner, 120 + tex, img)
    elif name == "dunes":
        img = 118 + 52 * np.sin(5.2 * x + 2.6 * np.sin(3.1 * y)) + 28 * (y - 0.5)
        ridge = np.abs(np.sin(11.0 * (y - 0.4 * x)))
        img += 18 * ridge
        img[(y - 0.22) ** 2 + (x - 0.74) ** 2 < 0.016] = 62.0
        tex = _bandpass_noise(rng, (size, size), 0.05, 0.18, 55.0)
        img = np.where(y > 0.72, 130 + tex, img)
    elif name == "plaid":
        plaid = 34 * np.sign(np.sin(x * 92.0)) + 34 * np.sign(np.sin(y * 61.0))
        zone = (x < 0.52) & (y < 0.66)
        img = np.where(zone, 128 + plaid * 0.8, 110 + 62 * np.cos(5.7 * y) + 30 * x)
        img[int(0.75 * size) : int(0.94 * size), int(0.60 * size) : int(0.82 * size)] = 226.0
    else:  # speckle
        img = 135 + 40 * np.cos(3.4 * x + 5.9 * y) - 26 * (x - 0.5)
        centers = rng.uniform(0.05, 0.95, size=(26, 2))
        radii = rng.uniform(0.012, 0.038, size=26)
        shades = rng.uniform(40, 230, size=26)
        for (cy, cx), rad, shade in zip(centers, radii, shades):
            img[(y - cy) ** 2 + (x - cx) ** 2 < rad * rad] = shade
        tex = _bandpass_noise(rng, (size, size), 0.10, 0.34, 82.0)
        img = np.where((x > 0.55) & (y > 0.12) & (y < 0.55), 128 + tex, img)

    return np.clip(np.rint(img), 0.0, 255.0)
