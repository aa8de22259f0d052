"""Semantic saliency: per-class importance look-up tables chosen by context."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .config import read_sections
from .context import Context, classify
from .core import N_CLASSES, VOC_CLASSES, VOID, check_label_map
from .dataset import DEFAULT_CONTEXT_MAPPING, check_context_mapping
from .exceptions import MalformedConfigFile, MissingUserLut

USER_SECTION = "user"


@dataclass(frozen=True)
class SaliencyLut:
    name: str
    weights: np.ndarray
    void_weight: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (N_CLASSES,):
            raise ValueError(f"LUT {self.name!r} needs {N_CLASSES} class weights, got {w.shape}")
        if not (np.all(np.isfinite(w)) and w.min() >= 0.0 and w.max() <= 1.0):
            raise ValueError(f"LUT {self.name!r} weights must lie in [0, 1]")
        if not 0.0 <= self.void_weight <= 1.0:
            raise ValueError(f"LUT {self.name!r} void weight must lie in [0, 1]")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "void_weight", float(self.void_weight))

    def table(self) -> np.ndarray:
        """256-entry lookup table indexed directly by raw label values."""
        t = np.zeros(256, dtype=np.float64)
        t[:N_CLASSES] = self.weights
        t[VOID] = self.void_weight
        return t

    def __eq__(self, other):
        if not isinstance(other, SaliencyLut):
            return NotImplemented
        return (self.name == other.name and self.void_weight == other.void_weight
                and np.array_equal(self.weights, other.weights))

    __hash__ = None


@dataclass(frozen=True)
class LutBank:
    contexts: dict[Context, SaliencyLut]
    user: SaliencyLut | None = field(default=None)

    def __post_init__(self):
        if set(self.contexts) != set(Context):
            raise ValueError("a LUT bank needs exactly one LUT per context")


def apply_lut(labels, lut: SaliencyLut) -> np.ndarray:
    labels = check_label_map(labels)
    return lut.table()[labels]


def select_lut(bank: LutBank, ctx: Context, user_override: bool = False) -> SaliencyLut:
    if user_override:
        if bank.user is None:
            raise MissingUserLut("user LUT requested but the LUT bank has no [user] section")
        return bank.user
    return bank.contexts[Context(ctx)]


def semantic_saliency(labels, bank: LutBank, model, user_override: bool = False):
    """Classify the image context and map labels through the selected LUT.

    Returns ``(saliency_map, context)``.
    """
    ctx = classify(model, labels)
    return apply_lut(labels, select_lut(bank, ctx, user_override)), ctx


# -- defaults and files ---------------------------------------------------

MEMBER_WEIGHT = 1.0
PERSON_WEIGHT = 0.8
OTHER_OBJECT_WEIGHT = 0.4
BACKGROUND_WEIGHT = 0.1
VOID_WEIGHT = 0.0


def default_lut_bank(mapping=None) -> LutBank:
    """Context LUTs built from a class -> context mapping.

    Member classes of the context weigh 1.0, person 0.8 (unless it is a
    member), other objects 0.4, background 0.1, VOID 0.
    """
    mapping = check_context_mapping(DEFAULT_CONTEXT_MAPPING if mapping is None else mapping)
    luts = {}
    for ctx in Context:
        w = np.full(N_CLASSES, OTHER_OBJECT_WEIGHT)
        w[0] = BACKGROUND_WEIGHT
        for idx, name in enumerate(VOC_CLASSES[1:], start=1):
            if mapping[name] == ctx:
                w[idx] = MEMBER_WEIGHT
            elif name == "person":
                w[idx] = PERSON_WEIGHT
        luts[ctx] = SaliencyLut(_section_name(ctx), w, VOID_WEIGHT)
    return LutBank(luts)


def _section_name(ctx: Context) -> str:
    return {Context.OTHER_ANIMALS: "other_animals"}.get(ctx, ctx.label.lower())


def _parse_lut(name: str, items: dict[str, str], source: str) -> SaliencyLut:
    required = set(VOC_CLASSES) | {"void"}
    missing = sorted(required - set(items))
    unknown = sorted(set(items) - required)
    if missing or unknown:
        raise MalformedConfigFile(
            f"{source}: section [{name}] missing keys {missing}, unknown keys {unknown}"
        )
    try:
        weights = [float(items[c]) for c in VOC_CLASSES]
        return SaliencyLut(name, weights, float(items["void"]))
    except ValueError as exc:
        raise MalformedConfigFile(f"{source}: section [{name}]: {exc}") from None


def load_lut_bank(path=None) -> LutBank:
    """Read a LUT bank file; ``None`` loads the packaged defaults."""
    if path is None:
        ref = resources.files("ctxsal") / "data" / "default_luts.cfg"
        with resources.as_file(ref) as default_path:
            return load_lut_bank(default_path)
    source = os.fspath(path)
    sections = read_sections(path)
    contexts = {}
    user = None
    for name, items in sections.items():
        if name == USER_SECTION:
            user = _parse_lut(name, items, source)
            continue
        try:
            ctx = Context.parse(name)
        except ValueError:
            raise MalformedConfigFile(f"{source}: unknown LUT section [{name}]") from None
        contexts[ctx] = _parse_lut(name, items, source)
    missing = [c.label for c in Context if c not in contexts]
    if missing:
        raise MalformedConfigFile(f"{source}: missing context LUT sections {missing}")
    return LutBank(contexts, user)


def format_lut_bank(bank: LutBank) -> str:
    blocks = []
    luts = [(_section_name(c), bank.contexts[c]) for c in Context]
    if bank.user is not None:
        luts.append((USER_SECTION, bank.user))
    for section, lut in luts:
        lines = [f"[{section}]"]
        lines += [f"{name} = {w!r}" for name, w in zip(VOC_CLASSES, lut.weights.tolist())]
        lines.append(f"void = {lut.void_weight!r}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def save_lut_bank(bank: LutBank, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_lut_bank(bank))
