"""Argument checks shared by the estimator layer and the CLI."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .detect import Mechanism, PatternConfig
from .source import Language, SourceUnit, parse_unit, read_unit


def check_max_transfers(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"max_transfers must be a positive integer, got {value!r}")
    return value


def check_mechanisms(values: Optional[Iterable[Union[str, Mechanism]]]) -> Optional[frozenset[Mechanism]]:
    """None means every mechanism; strings are mechanism ids."""
    if values is None:
        return None
    if isinstance(values, (str, Mechanism)):
        values = [values]
    out = set()
    for v in values:
        try:
            out.add(v if isinstance(v, Mechanism) else Mechanism(v))
        except ValueError:
            raise ValueError(f"unknown mechanism {v!r}") from None
    return frozenset(out)


def check_patterns(patterns) -> PatternConfig:
    """Accept None, a PatternConfig or an extension mapping."""
    if patterns is None:
        return PatternConfig()
    if isinstance(patterns, PatternConfig):
        return patterns
    if isinstance(patterns, dict):
        return PatternConfig().extended(patterns)
    raise TypeError(f"patterns must be a PatternConfig or a mapping, got {type(patterns).__name__}")


def check_units(X, root: Union[str, Path, None] = None) -> list[SourceUnit]:
    """Coerce ``X`` into source units.

    Items may be SourceUnit objects, paths to .py/.java files, or
    ``(path, text)`` tuples whose language follows from the extension.
    """
    if isinstance(X, (str, Path, SourceUnit)):
        raise TypeError("X must be a sequence of units, paths or (path, text) pairs")
    units = []
    for item in X:
        if isinstance(item, SourceUnit):
            units.append(item)
        elif isinstance(item, (str, Path)):
            units.append(read_unit(item, root))
        elif isinstance(item, tuple) and len(item) == 2:
            path, text = item
            lang = Language.from_path(str(path))
            if lang is None:
                raise ValueError(f"{path}: not a .py or .java file")
            units.append(parse_unit(str(path), text, lang))
        else:
            raise TypeError(f"cannot interpret {type(item).__name__} as a source unit")
    return units


def check_binary(values: Sequence, name: str = "labels") -> list[int]:
    out = list(values)
    if any(isinstance(v, bool) or v not in (0, 1) for v in out):
        raise ValueError(f"{name} must be 0 or 1")
    return out
