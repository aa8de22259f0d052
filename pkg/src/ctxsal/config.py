"""Pipeline configuration and the ``key = value`` text format shared by all
config-like files."""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, fields

from .exceptions import MalformedConfigFile
from .features import DEFAULT_BLOCK_SIZE, DEFAULT_HUE_EXPONENT

_ROOT = "__root__"


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        strict=True, interpolation=None, default_section="__defaults__",
    )
    return parser


def read_sections(path) -> dict[str, dict[str, str]]:
    """Parse an INI-style file of ``[section]`` blocks of ``key = value`` lines.

    Keys and section names are lowercased. Duplicates are errors.
    """
    parser = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise MalformedConfigFile(f"{os.fspath(path)}: {exc}") from exc
    except configparser.Error as exc:
        raise MalformedConfigFile(f"{os.fspath(path)}: {exc}") from None
    return {name.lower(): dict(parser[name]) for name in parser.sections()}


def read_key_values(path) -> dict[str, str]:
    """Parse a flat (section-less) ``key = value`` file."""
    parser = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string(f"[{_ROOT}]\n" + fh.read(), source=os.fspath(path))
    except OSError as exc:
        raise MalformedConfigFile(f"{os.fspath(path)}: {exc}") from exc
    except configparser.Error as exc:
        raise MalformedConfigFile(f"{os.fspath(path)}: {exc}") from None
    if len(parser.sections()) != 1:
        raise MalformedConfigFile(f"{os.fspath(path)}: sections are not allowed in this file")
    return dict(parser[_ROOT])


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class PipelineConfig:
    block_size: int = DEFAULT_BLOCK_SIZE
    p: float = DEFAULT_HUE_EXPONENT
    w1: float = 0.5
    w2: float = 0.5
    sigma_sq: float = 40.0
    center_prior: bool = True
    smooth_size: int = 20
    smooth: bool = True
    lut_bank: str | None = None
    model: str | None = None
    user_lut: bool = False

    def __post_init__(self):
        if self.block_size < 2:
            raise ValueError("block_size must be >= 2")
        if not self.p > 0:
            raise ValueError("p must be > 0")
        if self.w1 < 0 or self.w2 < 0 or not self.w1 + self.w2 > 0:
            raise ValueError("fusion weights must be non-negative with a positive sum")
        if not self.sigma_sq > 0:
            raise ValueError("sigma_sq must be > 0")
        if self.smooth_size < 1:
            raise ValueError("smooth_size must be >= 1")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        return cls().updated(read_key_values(path), source=os.fspath(path))

    def updated(self, overrides: dict, source: str = "overrides") -> "PipelineConfig":
        """Return a copy with string or typed values from ``overrides`` applied.
        ``None`` values are ignored so unset CLI flags fall through."""
        types = {f.name: f.type for f in fields(self)}
        changes = {}
        for key, raw in overrides.items():
            if raw is None:
                continue
            if key not in types:
                raise MalformedConfigFile(f"{source}: unknown config key {key!r}")
            kind = types[key]
            try:
                if not isinstance(raw, str):
                    value = raw
                elif kind == "bool":
                    value = _parse_bool(raw)
                elif kind == "int":
                    value = int(raw)
                elif kind == "float":
                    value = float(raw)
                else:
                    value = raw.strip() or None
            except ValueError as exc:
                raise MalformedConfigFile(f"{source}: bad value for {key}: {exc}") from None
            changes[key] = value
        try:
            return dataclasses.replace(self, **changes)
        except ValueError as exc:
            raise MalformedConfigFile(f"{source}: {exc}") from None
