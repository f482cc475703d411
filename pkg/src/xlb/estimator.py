"""Estimator-style wrappers (fit / transform / predict, get_params / set_params).

The classes follow the scikit-learn conventions closely enough for
``sklearn.base.clone`` and pipelines, without importing scikit-learn.
"""

from __future__ import annotations

import inspect
from pathlib import Path
from typing import Optional, Union

from .corpus.strip import strip_comments
from .detect import NativeBindingIndex, build_binding_index
from .scan import FileReport, analyze_units
from .source import Language
from .taint import DEFAULT_MAX_TRANSFERS, MODULE_SPAN_NAME
from .validation import check_max_transfers, check_mechanisms, check_patterns, check_units


class NotFittedError(RuntimeError):
    pass


class _ParamsMixin:
    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return sorted(p for p in sig.parameters if p != "self")

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class CrossLanguageFinder(_ParamsMixin):
    """Finds cross-language sites, marked lines and functions in source units.

    ``fit`` builds the native binding index over the units (and, optionally,
    a project root holding native build files); ``transform`` returns one
    :class:`FileReport` per unit; ``predict`` returns 1 for a unit containing
    at least one cross-language function and 0 otherwise.
    """

    def __init__(self, mechanisms=None, max_transfers: int = DEFAULT_MAX_TRANSFERS, patterns=None) -> None:
        self.mechanisms = mechanisms
        self.max_transfers = max_transfers
        self.patterns = patterns

    def fit(self, X, y=None, project_root: Union[str, Path, None] = None, native_sources=None):
        check_max_transfers(self.max_transfers)
        self.mechanisms_ = check_mechanisms(self.mechanisms)
        units = check_units(X, project_root)
        self.index_: NativeBindingIndex = build_binding_index(
            project_root, units, check_patterns(self.patterns), native_sources=native_sources)
        self.n_units_ = len(units)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "index_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted; call fit first")

    def transform(self, X) -> list[FileReport]:
        self._check_fitted()
        units = check_units(X)
        return analyze_units(units, self.index_, mechanisms=self.mechanisms_, max_transfers=self.max_transfers)

    def fit_transform(self, X, y=None, **fit_params) -> list[FileReport]:
        units = check_units(X, fit_params.get("project_root"))
        return self.fit(units, y, **fit_params).transform(units)

    def predict(self, X) -> list[int]:
        return [int(any(f.qualified_name != MODULE_SPAN_NAME for f in r.functions))
                for r in self.transform(X)]


class CommentStripper(_ParamsMixin):
    """Stateless transformer: code strings to comment-free code strings."""

    def __init__(self, language: str = "python") -> None:
        self.language = language

    def fit(self, X=None, y=None):
        self.language_ = Language(self.language).value
        return self

    def transform(self, X) -> list[str]:
        if not hasattr(self, "language_"):
            raise NotFittedError("CommentStripper is not fitted; call fit first")
        return [strip_comments(code, self.language_) for code in X]

    def fit_transform(self, X, y=None) -> list[str]:
        return self.fit(X, y).transform(X)
