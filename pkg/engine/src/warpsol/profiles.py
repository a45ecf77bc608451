from __future__ import annotations

"""Warping functions h on an interval I, with the named catalog."""

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, DomainError
from .expressions import Expression


ENDPOINT_TOLERANCE = 1e-9
DERIVATIVE_STEP = 1e-5
UNBOUNDED_SAMPLE_WINDOW = 10.0
CATALOG_NAMES = (
    "euclidean_cone",
    "horospherical",
    "geodesic_spherical",
    "equidistant",
    "spherical",
    "product",
)

ScalarField = Callable[[Any], Any]


def _five_point_first(func: ScalarField, t: Any) -> Any:
    t = np.asarray(t, dtype=float)
    delta = DERIVATIVE_STEP * np.maximum(1.0, np.abs(t))
    return (func(t - 2 * delta) - 8 * func(t - delta) + 8 * func(t + delta) - func(t + 2 * delta)) / (12 * delta)


def _five_point_second(func: ScalarField, t: Any) -> Any:
    t = np.asarray(t, dtype=float)
    delta = DERIVATIVE_STEP * np.maximum(1.0, np.abs(t))
    return (
        -func(t - 2 * delta) + 16 * func(t - delta) - 30 * func(t) + 16 * func(t + delta) - func(t + 2 * delta)
    ) / (12 * delta**2)


def _constant(value: float) -> ScalarField:
    def _field(t: Any) -> Any:
        return np.full_like(np.asarray(t, dtype=float), value)

    return _field


@dataclass(frozen=True)
class WarpingProfile:
    """The warping function of I x_h P together with its first two derivatives.

    ``h``, ``h1`` and ``h2`` are raw vectorized callables; the ``value``,
    ``first`` and ``second`` accessors add the open-interval domain check.
    """

    name: str
    interval_lo: float
    interval_hi: float
    h: ScalarField
    h1: ScalarField
    h2: ScalarField
    fiber_curvature: float = 0.0
    expressions: dict[str, str] = field(default_factory=dict)

    @classmethod
    def catalog(cls, name: str, interval: tuple[float, float] | None = None) -> "WarpingProfile":
        if name == "euclidean_cone":
            base = cls(name, 0.0, math.inf, lambda t: np.asarray(t, dtype=float) * 1.0, _constant(1.0), _constant(0.0), 1.0)
        elif name == "horospherical":
            base = cls(name, -math.inf, math.inf, np.exp, np.exp, np.exp, 0.0)
        elif name == "geodesic_spherical":
            base = cls(name, 0.0, math.inf, np.sinh, np.cosh, np.sinh, 1.0)
        elif name == "equidistant":
            base = cls(name, -math.inf, math.inf, np.cosh, np.sinh, np.cosh, -1.0)
        elif name == "spherical":
            base = cls(name, 0.0, math.pi, np.sin, np.cos, lambda t: -np.sin(t), 1.0)
        elif name == "product":
            base = cls(name, -math.inf, math.inf, _constant(1.0), _constant(0.0), _constant(0.0), 0.0)
        else:
            raise ConfigError(
                "unknown_profile",
                f"unknown catalog profile {name!r}",
                hint=f"expected one of: {', '.join(CATALOG_NAMES)} or custom",
            )
        if interval is None:
            return base
        lo, hi = float(interval[0]), float(interval[1])
        if lo < base.interval_lo or hi > base.interval_hi or lo >= hi:
            raise ConfigError(
                "invalid_interval",
                f"interval ({lo}, {hi}) is not a subinterval of the {name} domain",
                interval=[base.interval_lo, base.interval_hi],
            )
        return cls(name, lo, hi, base.h, base.h1, base.h2, base.fiber_curvature)

    @classmethod
    def from_expressions(
        cls,
        h: str,
        interval: tuple[float, float],
        *,
        h1: str | None = None,
        h2: str | None = None,
        fiber_curvature: float = 0.0,
    ) -> "WarpingProfile":
        """Build a custom profile; missing derivatives are taken symbolically from h."""

        h_expr = Expression.parse(h)
        h1_expr = Expression.parse(h1) if h1 else h_expr.derivative()
        h2_expr = Expression.parse(h2) if h2 else h_expr.derivative(2)
        sources = {"h": h}
        if h1:
            sources["h1"] = h1
        if h2:
            sources["h2"] = h2
        return cls._custom(interval, h_expr, h1_expr, h2_expr, fiber_curvature, sources)

    @classmethod
    def from_callables(
        cls,
        h: ScalarField,
        interval: tuple[float, float],
        *,
        h1: ScalarField | None = None,
        h2: ScalarField | None = None,
        fiber_curvature: float = 0.0,
    ) -> "WarpingProfile":
        """Build a custom profile from vectorized callables; missing derivatives use 5-point differences."""

        h1_field: ScalarField = h1 if h1 is not None else (lambda t: _five_point_first(h, t))
        h2_field: ScalarField = h2 if h2 is not None else (lambda t: _five_point_second(h, t))
        return cls._custom(interval, h, h1_field, h2_field, fiber_curvature, {})

    @classmethod
    def _custom(
        cls,
        interval: tuple[float, float],
        h: ScalarField,
        h1: ScalarField,
        h2: ScalarField,
        fiber_curvature: float,
        sources: dict[str, str],
    ) -> "WarpingProfile":
        lo, hi = float(interval[0]), float(interval[1])
        if not lo < hi:
            raise ConfigError("invalid_interval", f"empty interval ({lo}, {hi})")
        profile = cls("custom", lo, hi, h, h1, h2, float(fiber_curvature), sources)
        profile.validate()
        return profile

    @property
    def is_catalog(self) -> bool:
        return self.name in CATALOG_NAMES

    def contains(self, t: float) -> bool:
        lo_ok = self.interval_lo == -math.inf or t > self.interval_lo + ENDPOINT_TOLERANCE
        hi_ok = self.interval_hi == math.inf or t < self.interval_hi - ENDPOINT_TOLERANCE
        return bool(lo_ok and hi_ok and math.isfinite(t))

    def require(self, t: float, what: str = "t") -> float:
        t = float(t)
        if not self.contains(t):
            raise DomainError(
                "outside_interval",
                f"{what}={t!r} is outside the open interval ({self.interval_lo}, {self.interval_hi}) of {self.name}",
                hint=f"points within {ENDPOINT_TOLERANCE} of an endpoint are rejected",
            )
        return t

    def value(self, t: float) -> float:
        return float(self.h(self.require(t)))

    def first(self, t: float) -> float:
        return float(self.h1(self.require(t)))

    def second(self, t: float) -> float:
        return float(self.h2(self.require(t)))

    def sample_grid(self, count: int = 401, margin: float = 1e-3) -> np.ndarray:
        """Uniform grid over I, clipped to a finite window when I is unbounded."""

        lo = self.interval_lo if math.isfinite(self.interval_lo) else -UNBOUNDED_SAMPLE_WINDOW
        hi = self.interval_hi if math.isfinite(self.interval_hi) else UNBOUNDED_SAMPLE_WINDOW
        if math.isfinite(self.interval_lo) and math.isfinite(self.interval_hi):
            width = hi - lo
            return np.linspace(lo + margin * width, hi - margin * width, count)
        lo = max(lo, self.interval_lo + margin) if math.isfinite(self.interval_lo) else lo
        hi = min(hi, self.interval_hi - margin) if math.isfinite(self.interval_hi) else hi
        if lo >= hi:
            lo, hi = self.interval_lo + margin, self.interval_lo + 1.0
        return np.linspace(lo, hi, count)

    def validate(self) -> None:
        grid = self.sample_grid()
        values = np.asarray(self.h(grid), dtype=float)
        bad = ~np.isfinite(values) | (values <= 0.0)
        if np.any(bad):
            first = float(grid[np.argmax(bad)])
            raise DomainError(
                "nonpositive_warping",
                f"h must be positive on the open interval; h({first!r}) = {float(values[np.argmax(bad)])!r}",
                profile=self.name,
            )

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "name": self.name,
            "interval": [self.interval_lo, self.interval_hi],
            "fiber_curvature": self.fiber_curvature,
        }
        if self.expressions:
            payload["expressions"] = dict(self.expressions)
        return payload


def derivative_consistency(profile: WarpingProfile, points: np.ndarray | None = None, delta: float = 1e-4) -> dict[str, float]:
    """Largest deviation of h1 and h2 from centered differences of h, on `points`."""

    grid = profile.sample_grid(201, margin=0.05) if points is None else np.asarray(points, dtype=float)
    fd_first = (profile.h(grid + delta) - profile.h(grid - delta)) / (2 * delta)
    fd_second = (profile.h(grid + delta) - 2 * profile.h(grid) + profile.h(grid - delta)) / delta**2
    scale = np.maximum(1.0, np.abs(profile.h(grid)))
    return {
        "h1": float(np.max(np.abs(profile.h1(grid) - fd_first) / scale)),
        "h2": float(np.max(np.abs(profile.h2(grid) - fd_second) / scale)),
        "delta": delta,
    }
