"""Synthetic VOC-layout corpora for tests.

Label maps hold one to three elliptical or rectangular objects whose classes
are drawn with the per-class image frequencies of the VOC train split, each
outlined by a one-pixel VOID ring like real VOC annotations. Images paint
objects in a class-specific hue over a textured gray background.
"""
from pathlib import Path

import numpy as np
from PIL import Image

from ctxsal.core import N_CLASSES, VOID
from ctxsal.dataset import encode_label_png

TRAIN_IMAGES_PER_CLASS = np.array(
    [88, 65, 105, 78, 87, 78, 128, 131, 148, 64, 82, 121, 68, 81, 442, 82, 63, 93, 83, 84],
    dtype=np.float64,
)


def _dilate(mask):
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def random_label_map(rng, height=32, width=40, max_objects=3):
    labels = np.zeros((height, width), dtype=np.int64)
    p = TRAIN_IMAGES_PER_CLASS / TRAIN_IMAGES_PER_CLASS.sum()
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(rng.integers(1, max_objects + 1)):
        cls = int(rng.choice(20, p=p)) + 1
        cy, cx = rng.uniform(0.15, 0.85) * height, rng.uniform(0.15, 0.85) * width
        ry, rx = rng.uniform(0.1, 0.45) * height, rng.uniform(0.1, 0.45) * width
        if rng.random() < 0.5:
            mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        else:
            mask = (np.abs(yy - cy) <= ry) & (np.abs(xx - cx) <= rx)
        if not mask.any():
            continue
        ring = _dilate(mask) & ~mask
        labels[mask] = cls
        labels[ring] = VOID
    return labels


def render_image(rng, labels):
    h, w = labels.shape
    base = rng.integers(100, 140, size=(h, w, 1))
    img = np.repeat(base, 3, axis=2).astype(np.float64)
    for cls in range(1, N_CLASSES):
        mask = labels == cls
        if mask.any():
            hue_rgb = np.array([(37 * cls) % 256, (91 * cls) % 256, (173 * cls) % 256])
            img[mask] = hue_rgb + rng.integers(-10, 11, size=(mask.sum(), 3))
    return np.clip(img, 0, 255).astype(np.uint8)


def write_entry(root, image_id, image, labels):
    root = Path(root)
    Image.fromarray(image).save(root / "JPEGImages" / f"{image_id}.jpg", quality=90)
    encode_label_png(labels, root / "SegmentationClass" / f"{image_id}.png")


def make_voc_tree(root, sizes, seed=0, height=32, width=40):
    """Write a VOC-layout tree with ``sizes = {"train": n, "val": m}``.

    A ``trainval`` list (train followed by val) is added when both exist.
    Returns ``{split: [ids]}``.
    """
    root = Path(root)
    for sub in ("JPEGImages", "SegmentationClass", "ImageSets/Segmentation"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    ids = {}
    counter = 0
    for split, n in sizes.items():
        ids[split] = []
        for _ in range(n):
            counter += 1
            image_id = f"2011_{counter:06d}"
            labels = random_label_map(rng, height, width)
            write_entry(root, image_id, render_image(rng, labels), labels)
            ids[split].append(image_id)
    if "train" in ids and "val" in ids:
        ids["trainval"] = ids["train"] + ids["val"]
    for split, names in ids.items():
        (root / "ImageSets" / "Segmentation" / f"{split}.txt").write_text(
            "".join(f"{n}\n" for n in names))
    return ids
