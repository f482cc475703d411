"""Cross-language site detection for the nine supported mechanisms."""

from .index import Evidence, IndexEntry, NativeBindingIndex, build_binding_index, scan_native_text
from .mechanisms import (
    DEFAULT_PATTERNS,
    EXTENSION_PRECEDENCE,
    LanguagePair,
    Mechanism,
    MechanismPatterns,
    PatternConfig,
    parse_mechanisms,
)
from .sites import CALL, LOAD_DECL, CrossLangSite, detect_sites

__all__ = [
    "CALL",
    "DEFAULT_PATTERNS",
    "EXTENSION_PRECEDENCE",
    "LOAD_DECL",
    "CrossLangSite",
    "Evidence",
    "IndexEntry",
    "LanguagePair",
    "Mechanism",
    "MechanismPatterns",
    "NativeBindingIndex",
    "PatternConfig",
    "build_binding_index",
    "detect_sites",
    "parse_mechanisms",
    "scan_native_text",
]
