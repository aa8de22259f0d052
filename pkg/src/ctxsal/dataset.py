"""PASCAL VOC segmentation corpus ingestion and context ground truth.

Expected layout under ``root``::

    JPEGImages/<id>.jpg
    SegmentationClass/<id>.png        palette-indexed, 255 = VOID
    ImageSets/Segmentation/<split>.txt
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .config import read_key_values
from .context import N_CONTEXTS, Context, extract_area_features
from .core import N_CLASSES, OBJECT_CLASSES, VOID, check_label_map, check_rgb_image
from .exceptions import (
    EmptyLabelMap,
    MalformedConfigFile,
    MissingImage,
    MissingLabel,
    MissingSplitFile,
    NotPaletteIndexed,
    UnsupportedLabelIndex,
)

logger = logging.getLogger(__name__)

# Image counts of the segmentation splits of the 2011 release.
REFERENCE_SPLIT_SIZES = {"train": 1464, "val": 1449, "trainval": 2913}
# Per-context training image counts reported for the original context labels.
REFERENCE_CONTEXT_COUNTS = {
    Context.PET: 243,
    Context.OTHER_ANIMALS: 284,
    Context.VEHICLE: 549,
    Context.INDOOR: 236,
    Context.OTHERS: 152,
}

_P, _A, _V, _I, _O = (Context.PET, Context.OTHER_ANIMALS, Context.VEHICLE,
                      Context.INDOOR, Context.OTHERS)
DEFAULT_CONTEXT_MAPPING = {
    "aeroplane": _V, "bicycle": _V, "bird": _A, "boat": _V, "bottle": _I,
    "bus": _V, "car": _V, "cat": _P, "chair": _I, "cow": _A,
    "diningtable": _I, "dog": _P, "horse": _A, "motorbike": _V, "person": _O,
    "pottedplant": _I, "sheep": _A, "sofa": _I, "train": _V, "tvmonitor": _I,
}


def check_context_mapping(mapping) -> dict[str, Context]:
    missing = [c for c in OBJECT_CLASSES if c not in mapping]
    extra = [c for c in mapping if c not in OBJECT_CLASSES]
    if missing or extra:
        raise MalformedConfigFile(
            f"context mapping must cover exactly the 20 object classes "
            f"(missing: {missing}, unknown: {extra})"
        )
    return {c: Context(mapping[c]) for c in OBJECT_CLASSES}


def load_context_mapping(path=None) -> dict[str, Context]:
    """Read a ``class_name = context_name`` file; ``None`` gives the default."""
    if path is None:
        return dict(DEFAULT_CONTEXT_MAPPING)
    raw = read_key_values(path)
    try:
        parsed = {k: Context.parse(v) for k, v in raw.items()}
    except ValueError as exc:
        raise MalformedConfigFile(f"{os.fspath(path)}: {exc}") from None
    try:
        return check_context_mapping(parsed)
    except MalformedConfigFile as exc:
        raise MalformedConfigFile(f"{os.fspath(path)}: {exc}") from None


def save_context_mapping(mapping, path) -> None:
    mapping = check_context_mapping(mapping)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name in OBJECT_CLASSES:
            fh.write(f"{name} = {mapping[name].label}\n")


def derive_context_label(labels, mapping=None) -> Context:
    """Context of the object class covering the most pixels.

    Ties go to the lower class index; maps without object pixels are Others.
    """
    mapping = DEFAULT_CONTEXT_MAPPING if mapping is None else mapping
    labels = check_label_map(labels)
    valid = labels[labels != VOID]
    if valid.size == 0:
        raise EmptyLabelMap("label map contains only VOID pixels")
    counts = np.bincount(valid, minlength=N_CLASSES)[1:]
    if counts.max() == 0:
        return Context.OTHERS
    return mapping[OBJECT_CLASSES[int(np.argmax(counts))]]


# -- files ----------------------------------------------------------------


def decode_label_png(path) -> np.ndarray:
    """Read a palette-indexed label PNG into a label map."""
    with Image.open(path) as im:
        if im.mode != "P":
            raise NotPaletteIndexed(f"{os.fspath(path)}: expected a palette PNG, got mode {im.mode}")
        labels = np.array(im, dtype=np.uint8).astype(np.int64)
    bad = (labels >= N_CLASSES) & (labels != VOID)
    if np.any(bad):
        raise UnsupportedLabelIndex(
            f"{os.fspath(path)}: unsupported palette indices {sorted(np.unique(labels[bad]).tolist())}"
        )
    return labels


def voc_palette() -> list[int]:
    """The standard VOC colour map as a flat 768-entry PIL palette."""
    palette = []
    for i in range(256):
        r = g = b = 0
        c = i
        for j in range(8):
            r |= ((c >> 0) & 1) << (7 - j)
            g |= ((c >> 1) & 1) << (7 - j)
            b |= ((c >> 2) & 1) << (7 - j)
            c >>= 3
        palette += [r, g, b]
    return palette


def encode_label_png(labels, path) -> None:
    labels = check_label_map(labels)
    im = Image.frombytes("P", (labels.shape[1], labels.shape[0]), labels.astype(np.uint8).tobytes())
    im.putpalette(voc_palette())
    im.save(path)


def load_rgb_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return check_rgb_image(np.array(im.convert("RGB")))


# -- corpus ---------------------------------------------------------------


@dataclass(frozen=True)
class VocEntry:
    id: str
    image_path: Path
    label_path: Path


@dataclass
class VocCorpus:
    root: Path
    split: str
    entries: list[VocEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    @property
    def reference_size(self) -> int | None:
        return REFERENCE_SPLIT_SIZES.get(self.split)

    def count_report(self) -> str:
        ref = self.reference_size
        if ref is None:
            return f"{self.split}: {len(self)} entries (no reference count)"
        status = "matches" if ref == len(self) else "DIFFERS from"
        return f"{self.split}: {len(self)} entries, {status} reference {ref}"


def load_corpus(root, split: str) -> VocCorpus:
    """Resolve a split list to image/label paths without reading pixel data."""
    root = Path(root)
    split_file = root / "ImageSets" / "Segmentation" / f"{split}.txt"
    if not split_file.is_file():
        raise MissingSplitFile(f"split list not found: {split_file}")
    ids = [line.strip() for line in split_file.read_text().splitlines() if line.strip()]
    entries = []
    for image_id in ids:
        image_path = root / "JPEGImages" / f"{image_id}.jpg"
        label_path = root / "SegmentationClass" / f"{image_id}.png"
        if not image_path.is_file():
            raise MissingImage(f"{image_id}: image not found at {image_path}")
        if not label_path.is_file():
            raise MissingLabel(f"{image_id}: label not found at {label_path}")
        entries.append(VocEntry(image_id, image_path, label_path))
    corpus = VocCorpus(root, split, entries)
    ref = corpus.reference_size
    if ref is not None and ref != len(corpus):
        logger.warning("split %r has %d entries, reference count is %d", split, len(corpus), ref)
    return corpus


@dataclass
class ContextDataset:
    """Area features ``X`` (n, 20), context codes ``y`` (n,) and their ids."""

    X: np.ndarray
    y: np.ndarray
    ids: list[str]
    split: str = "train"

    def __len__(self):
        return len(self.ids)

    def context_counts(self) -> dict[Context, int]:
        counts = np.bincount(self.y, minlength=N_CONTEXTS)
        return {ctx: int(counts[ctx]) for ctx in Context}

    def count_report(self) -> str:
        lines = [f"{'context':<14}{'count':>7}{'reference':>11}"]
        for ctx, n in self.context_counts().items():
            lines.append(f"{ctx.label:<14}{n:>7}{REFERENCE_CONTEXT_COUNTS[ctx]:>11}")
        return "\n".join(lines)


def _dataset_row(entry: VocEntry, mapping):
    try:
        labels = decode_label_png(entry.label_path)
        return extract_area_features(labels), int(derive_context_label(labels, mapping))
    except (EmptyLabelMap, NotPaletteIndexed, UnsupportedLabelIndex, OSError, ValueError) as exc:
        raise type(exc)(f"{entry.id}: {exc}") from exc


def build_context_dataset(corpus: VocCorpus, mapping=None, n_jobs: int = 1) -> ContextDataset:
    """One (area features, context) pair per corpus entry, in corpus order."""
    mapping = check_context_mapping(DEFAULT_CONTEXT_MAPPING if mapping is None else mapping)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(lambda e: _dataset_row(e, mapping), corpus.entries))
    else:
        rows = [_dataset_row(e, mapping) for e in corpus.entries]
    X = np.stack([r[0] for r in rows]) if rows else np.zeros((0, len(OBJECT_CLASSES)))
    y = np.array([r[1] for r in rows], dtype=np.int64)
    dataset = ContextDataset(X, y, [e.id for e in corpus.entries], corpus.split)
    logger.info("context counts for %s:\n%s", corpus.split, dataset.count_report())
    return dataset


def quantize(values) -> np.ndarray:
    """Map ``[0, 1]`` saliency to 8-bit, rounding halves away from zero."""
    arr = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(arr * 255.0 + 0.5).astype(np.uint8)


def save_saliency_png(values, path) -> None:
    q = quantize(values)
    Image.frombytes("L", (q.shape[1], q.shape[0]), q.tobytes()).save(path)
