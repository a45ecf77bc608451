from __future__ import annotations

"""Expressions in one variable ``t`` for custom warping profiles.

Sources are parsed by sympy with a fixed vocabulary: the variable ``t``, the
constants ``pi`` and ``E``, and the functions in ``FUNCTIONS``. Both ``^``
and ``**`` mean power. Derivatives are taken symbolically.
"""

import re
import tokenize
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .errors import ConfigError


VARIABLE = sp.Symbol("t", real=True)
FUNCTIONS: dict[str, Any] = {
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
    "abs": sp.Abs,
    "Abs": sp.Abs,
}
CONSTANTS: dict[str, Any] = {"pi": sp.pi, "E": sp.E}
TRANSFORMATIONS = standard_transformations + (convert_xor,)
ALLOWED_SOURCE = re.compile(r"[0-9A-Za-z\s+\-*/^().]*")
ATTRIBUTE_ACCESS = re.compile(r"\.\s*[A-Za-z]")
NAME = re.compile(r"(?<![0-9.])[A-Za-z][A-Za-z0-9]*")


def _namespace() -> tuple[dict[str, Any], dict[str, Any]]:
    local_dict: dict[str, Any] = {"t": VARIABLE, **CONSTANTS, **FUNCTIONS}
    global_dict: dict[str, Any] = {
        "__builtins__": {},
        "Integer": sp.Integer,
        "Float": sp.Float,
        "Rational": sp.Rational,
        "Symbol": sp.Symbol,
    }
    return local_dict, global_dict


def _check_source(source: str) -> None:
    if not source or not source.strip():
        raise ConfigError("expression_syntax", "empty expression")
    if not ALLOWED_SOURCE.fullmatch(source):
        bad = next(char for char in source if not ALLOWED_SOURCE.fullmatch(char))
        raise ConfigError("expression_syntax", f"unexpected character {bad!r} in {source!r}")
    if ATTRIBUTE_ACCESS.search(source):
        raise ConfigError("expression_syntax", f"attribute access is not allowed in {source!r}")


def _check_names(source: str) -> None:
    vocabulary = {"t", *CONSTANTS, *FUNCTIONS}
    unknown = [name for name in NAME.findall(source) if name not in vocabulary]
    if unknown:
        raise ConfigError(
            "expression_syntax",
            f"unknown name {unknown[0]!r} in {source!r}",
            hint=f"expressions may use t, {', '.join(CONSTANTS)} and {', '.join(sorted(set(FUNCTIONS) - {'Abs'}))}",
        )


@dataclass(frozen=True)
class Expression:
    """A sympy expression in ``t``, callable on scalars or numpy arrays."""

    source: str
    expr: sp.Expr

    @classmethod
    def parse(cls, source: str) -> "Expression":
        _check_source(source)
        _check_names(source)
        local_dict, global_dict = _namespace()
        try:
            expr = parse_expr(source, local_dict=local_dict, global_dict=global_dict, transformations=TRANSFORMATIONS)
        except (SyntaxError, TypeError, ValueError, AttributeError, NameError, tokenize.TokenError) as exc:
            raise ConfigError("expression_syntax", f"cannot parse {source!r}: {exc}") from exc
        if not isinstance(expr, sp.Expr):
            raise ConfigError("expression_syntax", f"{source!r} is not an arithmetic expression")
        if expr.has(sp.zoo, sp.oo, -sp.oo, sp.nan):
            raise ConfigError("expression_syntax", f"{source!r} simplifies to a non-finite value")
        return cls(source=source, expr=expr)

    def derivative(self, order: int = 1) -> "Expression":
        derived = sp.diff(self.expr, VARIABLE, order)
        return Expression(source=sp.sstr(derived), expr=derived)

    @cached_property
    def function(self) -> Callable[[np.ndarray], Any]:
        return sp.lambdify(VARIABLE, self.expr, "numpy")

    def __call__(self, t: float | np.ndarray) -> float | np.ndarray:
        array = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            raw = self.function(array)
        value = np.broadcast_to(np.asarray(raw, dtype=float), array.shape).copy()
        if np.ndim(t) == 0:
            return float(value)
        return value
