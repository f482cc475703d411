"""JSON Schemas for every file the tool writes."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

NAMES = ("scan_report", "function_pair", "pairs_manifest", "dataset_record", "dataset_manifest", "stats",
         "metric_report")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in NAMES:
        raise KeyError(f"unknown schema {name!r}; known: {', '.join(NAMES)}")
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
