"""Raster types, validation helpers and elementary map operations.

Images, label maps and saliency maps are plain numpy arrays:

* RGB image   -- ``(H, W, 3)`` ``uint8``
* HSV image   -- ``(H, W, 3)`` ``float64``, every channel in ``[0, 1]``, hue
  stored as a fraction of the full circle
* label map   -- ``(H, W)`` integer array, values in ``0..20`` or :data:`VOID`
* saliency map -- ``(H, W)`` ``float64``

The ``check_*`` helpers play the role of ``sklearn.utils.check_array`` for
these shapes: they validate and return a contiguous array of the canonical
dtype, never modifying the caller's data.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import DimensionMismatch, NonFiniteValue

# Index 0 is background; 1..20 follow the VOC class order.
VOC_CLASSES = (
    "background",
    "aeroplane",
    "bicycle",
    "bird",
    "boat",
    "bottle",
    "bus",
    "car",
    "cat",
    "chair",
    "cow",
    "diningtable",
    "dog",
    "horse",
    "motorbike",
    "person",
    "pottedplant",
    "sheep",
    "sofa",
    "train",
    "tvmonitor",
)
OBJECT_CLASSES = VOC_CLASSES[1:]
N_CLASSES = len(VOC_CLASSES)
VOID = 255


def check_rgb_image(img) -> np.ndarray:
    """Validate an 8-bit RGB image. An alpha channel, if present, is dropped."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] not in (3, 4):
        raise ValueError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255:
            raise ValueError(f"expected 8-bit intensities, got dtype {arr.dtype}")
        arr = arr.astype(np.uint8)
    return np.ascontiguousarray(arr[:, :, :3])


def check_hsv_image(hsv) -> np.ndarray:
    arr = np.asarray(hsv, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) HSV image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("HSV image contains NaN or infinite values")
    if arr.min() < 0.0 or arr.max() > 1.0 or np.any(arr[..., 0] >= 1.0):
        raise ValueError("HSV channels must lie in [0, 1] with hue in [0, 1)")
    return arr


def check_label_map(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty (H, W) label map, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"label map must be integer-valued, got dtype {arr.dtype}")
    bad = (arr != VOID) & ((arr < 0) | (arr >= N_CLASSES))
    if np.any(bad):
        raise ValueError(f"label map holds out-of-range labels: {np.unique(arr[bad])[:5]}")
    return arr.astype(np.int64, copy=False)


def check_saliency_map(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected an (H, W) saliency map, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("saliency map contains NaN or infinite values")
    return arr


def check_same_shape(*arrays, names=None):
    shapes = [np.shape(a)[:2] for a in arrays]
    if len(set(shapes)) > 1:
        what = ", ".join(names) if names else "inputs"
        raise DimensionMismatch(f"{what} have different dimensions: {shapes}")


def rgb_to_hsv(img) -> np.ndarray:
    """Hexcone RGB -> HSV conversion.

    Hue is returned as a fraction of the full circle in ``[0, 1)``; pixels
    with zero saturation get hue 0.
    """
    rgb = check_rgb_image(img).astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c_min = rgb.min(axis=-1)
    delta = v - c_min

    s = np.zeros_like(v)
    np.divide(delta, v, out=s, where=v > 0)

    chromatic = delta > 0
    safe = np.where(chromatic, delta, 1.0)
    h = np.where(
        v == r,
        ((g - b) / safe) % 6.0,
        np.where(v == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    )
    h = np.where(chromatic, h / 6.0, 0.0)
    h[h >= 1.0] = 0.0
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsv`, returning rounded ``uint8`` intensities."""
    arr = check_hsv_image(hsv)
    h, s, v = arr[..., 0], arr[..., 1], arr[..., 2]
    h6 = h * 6.0
    sector = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    r = np.choose(sector, choices_r)
    g = np.choose(sector, choices_g)
    b = np.choose(sector, choices_b)
    rgb = np.stack([r, g, b], axis=-1) * 255.0
    return np.floor(rgb + 0.5).clip(0, 255).astype(np.uint8)


def normalize(values) -> np.ndarray:
    """Affine rescale to ``[0, 1]``; a constant map becomes all zeros."""
    arr = check_saliency_map(values)
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    out = (arr - lo) / (hi - lo)
    # guard against 1 ulp overshoot from the division
    return np.clip(out, 0.0, 1.0)


def window_extent(k: int) -> tuple[int, int]:
    """Pixels covered before and after the anchor by a ``k``-wide window."""
    if k < 1:
        raise ValueError(f"window size must be >= 1, got {k}")
    return (k + 1) // 2 - 1, k // 2


def local_mean(values: np.ndarray, k: int) -> np.ndarray:
    """Mean over the ``k x k`` window around each pixel, edge-replicated."""
    before, after = window_extent(k)
    arr = np.asarray(values, dtype=np.float64)
    if k == 1:
        return arr.copy()
    padded = np.pad(arr, ((before, after), (before, after)), mode="edge")
    rows = sliding_window_view(padded, k, axis=0).mean(axis=-1)
    return sliding_window_view(rows, k, axis=1).mean(axis=-1)


def mean_filter(values, k: int) -> np.ndarray:
    """Box (mean) filter of size ``k x k`` with edge replication at borders.

    For even ``k`` the window spans ``k/2 - 1`` pixels before the anchor and
    ``k/2`` after it.
    """
    arr = check_saliency_map(values)
    out = local_mean(arr, k)
    # a mean cannot leave the input range; clip rounding excursions
    return np.clip(out, arr.min(), arr.max())
