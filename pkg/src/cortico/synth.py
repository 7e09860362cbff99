"""Synthetic grayscale test images and occlusion masks.

Everything returns float64 arrays; images live in [0, 1], masks are boolean
with True marking corrupted pixels. Axis 0 is x, axis 1 is y, matching the
lift convention: a grating built with `angle=a` peaks in the orientation
channel closest to a.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage


def grating(n: int, frequency: float, angle: float = 0.0, phase: float = 0.0,
            amplitude: float = 0.5, offset: float = 0.5) -> np.ndarray:
    """Sinusoidal grating with wave vector f * (-sin(angle), cos(angle))."""
    x, y = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float),
                       indexing="ij")
    u = -math.sin(angle) * x + math.cos(angle) * y
    return offset + amplitude * np.cos(frequency * u + phase)


def stripes(n: int = 64, period: float = 8.0, angle: float = 0.0,
            phase: float = 0.0) -> np.ndarray:
    """Stripe pattern of the given spatial period in pixels."""
    return grating(n, 2.0 * math.pi / period, angle=angle, phase=phase)


def bar_mask(n: int, width: int = 8, center: int = None,
             axis: int = 0) -> np.ndarray:
    """Occluding bar spanning the image: True inside the bar."""
    if center is None:
        center = n // 2
    lo = center - width // 2
    hi = lo + width
    mask = np.zeros((n, n), dtype=bool)
    if axis == 0:
        mask[lo:hi, :] = True
    else:
        mask[:, lo:hi] = True
    return mask


def crossing_bars_mask(n: int, width: int = 6, spacing: int = 24) -> np.ndarray:
    """Grid of crossing horizontal and vertical bars."""
    mask = np.zeros((n, n), dtype=bool)
    for c in range(spacing // 2, n, spacing):
        lo = max(c - width // 2, 0)
        mask[lo:lo + width, :] = True
        mask[:, lo:lo + width] = True
    return mask


def arcs_mask(n: int, radii=None, width: int = 5,
              center=(0.0, 0.0)) -> np.ndarray:
    """Occluding circular arc bands around `center` (default: a corner)."""
    if radii is None:
        radii = np.arange(n // 6, 1.5 * n, n // 4)
    x, y = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float),
                       indexing="ij")
    r = np.hypot(x - center[0], y - center[1])
    mask = np.zeros((n, n), dtype=bool)
    for rad in radii:
        mask |= np.abs(r - rad) < width / 2.0
    return mask


def chirp_arcs(n: int = 128, f0: float = 0.15, growth: float = 0.004) -> np.ndarray:
    """Concentric rings around the (0, 0) corner whose local radial frequency
    grows linearly with the radius."""
    x, y = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float),
                       indexing="ij")
    r = np.hypot(x, y)
    # phase = integral of (f0 + growth * r) dr
    return 0.5 + 0.5 * np.sin(f0 * r + 0.5 * growth * r ** 2)


def _normalize(img: np.ndarray, lo: float = 0.05, hi: float = 0.95) -> np.ndarray:
    mn, mx = img.min(), img.max()
    if mx == mn:
        return np.full_like(img, 0.5 * (lo + hi))
    return lo + (hi - lo) * (img - mn) / (mx - mn)


def wood_texture(n: int = 64, seed: int = 0, base_frequency: float = 0.9) -> np.ndarray:
    """Quasi-parallel grain: a grating warped by a smooth random field."""
    rng = np.random.default_rng(seed)
    warp = ndimage.gaussian_filter(rng.standard_normal((n, n)), 6.0)
    warp *= 4.0 / max(np.abs(warp).max(), 1e-12)
    x, y = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float),
                       indexing="ij")
    img = np.sin(base_frequency * (y + warp) + 0.3 * x * base_frequency * 0.1)
    img += 0.15 * ndimage.gaussian_filter(rng.standard_normal((n, n)), 1.5)
    return _normalize(img)


def weave_texture(n: int = 64, seed: int = 1, f1: float = 0.7,
                  f2: float = 1.3) -> np.ndarray:
    """Two crossing oriented gratings plus mild band-limited noise."""
    rng = np.random.default_rng(seed)
    a = grating(n, f1, angle=0.35, offset=0.0, amplitude=0.45)
    b = grating(n, f2, angle=0.35 + math.pi / 2, offset=0.0, amplitude=0.35)
    noise = 0.2 * ndimage.gaussian_filter(rng.standard_normal((n, n)), 1.2)
    return _normalize(a + b + noise)


def natural_crop(n: int = 64, seed: int = 2) -> np.ndarray:
    """Smooth random blob field standing in for a natural-image crop."""
    rng = np.random.default_rng(seed)
    img = ndimage.gaussian_filter(rng.standard_normal((n, n)), 1.6)
    img += 0.5 * ndimage.gaussian_filter(rng.standard_normal((n, n)), 4.0)
    return _normalize(img)
