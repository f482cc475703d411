"""Find cross-language interaction code in Python and Java and build bug-pair corpora from it."""

from __future__ import annotations

__version__ = "0.1.0"

from .detect import CrossLangSite, Mechanism, LanguagePair, NativeBindingIndex, build_binding_index, detect_sites
from .source import FunctionSpan, Language, SourceUnit, function_at, parse_unit
from .taint import TaintMark, cross_language_functions, propagate

__all__ = [
    "CrossLangSite",
    "FunctionSpan",
    "Language",
    "LanguagePair",
    "Mechanism",
    "NativeBindingIndex",
    "SourceUnit",
    "TaintMark",
    "__version__",
    "build_binding_index",
    "cross_language_functions",
    "detect_sites",
    "function_at",
    "parse_unit",
    "propagate",
]
