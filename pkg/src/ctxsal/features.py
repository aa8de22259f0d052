"""Low-level saliency cues: local brightness contrast and warm-hue preference."""
from __future__ import annotations

import numpy as np

from .core import check_hsv_image, local_mean, normalize

DEFAULT_BLOCK_SIZE = 16
DEFAULT_HUE_EXPONENT = 4.0


def local_energy(v: np.ndarray, block_size: int = DEFAULT_BLOCK_SIZE) -> np.ndarray:
    """Population variance of ``v`` over a ``block_size`` window at every pixel.

    Windows are anchored like :func:`ctxsal.core.mean_filter` and borders are
    edge-replicated. Values are shifted by a reference pixel first so that
    constant regions come out as exact zeros.
    """
    if block_size < 2:
        raise ValueError(f"block_size must be >= 2, got {block_size}")
    v = np.asarray(v, dtype=np.float64)
    shifted = v - v.flat[0]
    mean = local_mean(shifted, block_size)
    mean_sq = local_mean(shifted * shifted, block_size)
    return np.maximum(mean_sq - mean * mean, 0.0)


def contrast_saliency(hsv, block_size: int = DEFAULT_BLOCK_SIZE, *, normalized: bool = True) -> np.ndarray:
    """Contrast map: windowed energy of the V channel around each pixel."""
    hsv = check_hsv_image(hsv)
    energy = local_energy(hsv[..., 2], block_size)
    return normalize(energy) if normalized else energy


def hue_preference(h, p: float = DEFAULT_HUE_EXPONENT) -> np.ndarray:
    """Cosine filter over the hue circle, peaking at red and vanishing at cyan,
    sharpened by raising to the power ``p``."""
    if not p > 0:
        raise ValueError(f"p must be > 0, got {p}")
    h = np.asarray(h, dtype=np.float64)
    base = 0.5 * (np.cos(2.0 * np.pi * h) + 1.0)
    return base**p


def color_saliency(hsv, p: float = DEFAULT_HUE_EXPONENT, *, normalized: bool = True) -> np.ndarray:
    """Color map from the hue channel. Achromatic pixels (s == 0) score 0."""
    hsv = check_hsv_image(hsv)
    out = hue_preference(hsv[..., 0], p)
    out[hsv[..., 1] == 0.0] = 0.0
    return normalize(out) if normalized else out
