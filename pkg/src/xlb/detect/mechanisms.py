"""The nine interaction mechanisms and their (extensible) detection patterns."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Union

from ..source import Language


class LanguagePair(str, enum.Enum):
    PYTHON_C = "python_c"
    JAVA_C = "java_c"
    JAVA_PYTHON = "java_python"

    @property
    def caller(self) -> Language:
        return Language.PYTHON if self is LanguagePair.PYTHON_C else Language.JAVA


class Mechanism(str, enum.Enum):
    PYTHON_C_API = "python_c_api"
    CTYPES = "ctypes"
    BOOST_PYTHON = "boost_python"
    CFFI = "cffi"
    SWIG = "swig"
    PYBIND11 = "pybind11"
    JNI = "jni"
    JNA = "jna"
    JYTHON = "jython"

    @property
    def language_pair(self) -> LanguagePair:
        return _PAIRS[self]

    @property
    def is_extension_module(self) -> bool:
        return self in EXTENSION_PRECEDENCE


_PAIRS = {
    Mechanism.PYTHON_C_API: LanguagePair.PYTHON_C,
    Mechanism.CTYPES: LanguagePair.PYTHON_C,
    Mechanism.BOOST_PYTHON: LanguagePair.PYTHON_C,
    Mechanism.CFFI: LanguagePair.PYTHON_C,
    Mechanism.SWIG: LanguagePair.PYTHON_C,
    Mechanism.PYBIND11: LanguagePair.PYTHON_C,
    Mechanism.JNI: LanguagePair.JAVA_C,
    Mechanism.JNA: LanguagePair.JAVA_C,
    Mechanism.JYTHON: LanguagePair.JAVA_PYTHON,
}

# More specific binding macros win over the generic initializer they expand to.
EXTENSION_PRECEDENCE = (Mechanism.PYBIND11, Mechanism.BOOST_PYTHON, Mechanism.SWIG, Mechanism.PYTHON_C_API)


@dataclass(frozen=True)
class MechanismPatterns:
    """Signature lists for one mechanism.

    loaders   dotted call suffixes that load a library or produce a handle
    invokers  method names that cross the boundary on a typed receiver
    imports   module / package prefixes whose import enables the mechanism
    modules   extension-module names known to belong to the mechanism
    bases     supertypes marking a binding interface (JNA)
    factories calls producing a binding factory object (cffi ``FFI()``)
    """

    loaders: tuple[str, ...] = ()
    invokers: tuple[str, ...] = ()
    imports: tuple[str, ...] = ()
    modules: tuple[str, ...] = ()
    bases: tuple[str, ...] = ()
    factories: tuple[str, ...] = ()

    def extend(self, other: "MechanismPatterns") -> "MechanismPatterns":
        def merged(a: tuple[str, ...], b: tuple[str, ...]) -> tuple[str, ...]:
            return a + tuple(x for x in b if x not in a)

        return MechanismPatterns(
            loaders=merged(self.loaders, other.loaders),
            invokers=merged(self.invokers, other.invokers),
            imports=merged(self.imports, other.imports),
            modules=merged(self.modules, other.modules),
            bases=merged(self.bases, other.bases),
            factories=merged(self.factories, other.factories),
        )


DEFAULT_PATTERNS: Mapping[Mechanism, MechanismPatterns] = {
    Mechanism.CTYPES: MechanismPatterns(
        loaders=(
            "CDLL",
            "WinDLL",
            "OleDLL",
            "PyDLL",
            "cdll.LoadLibrary",
            "windll.LoadLibrary",
            "oledll.LoadLibrary",
            "pydll.LoadLibrary",
            "ctypeslib.load_library",
        ),
        imports=("ctypes", "numpy.ctypeslib"),
        # ``ctypes.cdll.<lib>`` attribute-style loaders
        modules=("cdll", "windll", "oledll", "pydll"),
    ),
    Mechanism.CFFI: MechanismPatterns(loaders=("dlopen",), imports=("cffi",), factories=("FFI",)),
    Mechanism.JNI: MechanismPatterns(
        loaders=(
            "System.loadLibrary",
            "System.load",
            "Runtime.getRuntime().loadLibrary",
            "Runtime.getRuntime().load",
        ),
    ),
    Mechanism.JNA: MechanismPatterns(
        loaders=("Native.load", "Native.loadLibrary"),
        imports=("com.sun.jna",),
        bases=("Library", "StdCallLibrary", "com.sun.jna.Library", "com.sun.jna.win32.StdCallLibrary"),
    ),
    Mechanism.JYTHON: MechanismPatterns(
        invokers=("exec", "eval", "get", "invoke", "__call__"),
        imports=("org.python",),
        # types assumed behind a wildcard ``org.python.*`` import
        bases=(
            "PythonInterpreter",
            "PyObject",
            "PyFunction",
            "PyModule",
            "PyCode",
            "PySystemState",
            "InteractiveInterpreter",
            "InteractiveConsole",
        ),
    ),
    Mechanism.PYTHON_C_API: MechanismPatterns(),
    Mechanism.BOOST_PYTHON: MechanismPatterns(),
    Mechanism.SWIG: MechanismPatterns(),
    Mechanism.PYBIND11: MechanismPatterns(),
}

_FIELDS = ("loaders", "invokers", "imports", "modules", "bases", "factories")


@dataclass(frozen=True)
class PatternConfig:
    """Per-mechanism pattern sets: defaults plus user extensions."""

    patterns: Mapping[Mechanism, MechanismPatterns] = field(default_factory=lambda: dict(DEFAULT_PATTERNS))

    def __getitem__(self, mechanism: Mechanism) -> MechanismPatterns:
        return self.patterns.get(mechanism, MechanismPatterns())

    def extended(self, extra: Mapping[str, Mapping[str, list]]) -> "PatternConfig":
        """Return a config with ``extra`` patterns appended.

        ``extra`` maps mechanism id to ``{field: [pattern, ...]}`` where field is
        one of loaders, invokers, imports, modules, bases, factories.
        """
        merged = dict(self.patterns)
        for key, fields in extra.items():
            try:
                mech = Mechanism(key)
            except ValueError:
                raise ValueError(f"unknown mechanism in pattern config: {key!r}") from None
            if not isinstance(fields, Mapping):
                raise ValueError(f"patterns for {key!r} must be an object")
            unknown = set(fields) - set(_FIELDS)
            if unknown:
                raise ValueError(f"unknown pattern fields for {key!r}: {sorted(unknown)}")
            values = {}
            for name, items in fields.items():
                if not isinstance(items, list) or not all(isinstance(i, str) and i for i in items):
                    raise ValueError(f"{key}.{name} must be a list of non-empty strings")
                values[name] = tuple(items)
            merged[mech] = self[mech].extend(replace(MechanismPatterns(), **values))
        return PatternConfig(merged)

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None) -> "PatternConfig":
        base = cls()
        if path is None:
            return base
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("pattern config must be a JSON object")
        return base.extended(data)


def parse_mechanisms(values: Optional[list[str]]) -> Optional[frozenset[Mechanism]]:
    """Parse a user-supplied mechanism filter (comma lists allowed)."""
    if not values:
        return None
    out = set()
    for value in values:
        for part in value.split(","):
            part = part.strip()
            if part:
                out.add(Mechanism(part))
    return frozenset(out)
