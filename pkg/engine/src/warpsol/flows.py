from __future__ import annotations

"""Self-similar mean curvature flows of slices: closed forms and RK4 trajectories."""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, UnsupportedProfileError
from .geometry import SolitonContext, zeta
from .numerics import cumulative_integral, rk4_step
from .profiles import WarpingProfile


DEFAULT_FLOW_STEP = 1e-3
BOUNDARY_MARGIN = 1e-6
MARCH_TOLERANCE = 1e-12
MIN_FLOW_STEP = 1e-12
LEAF_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ClosedFormFlow:
    """t(τ) of a catalog slice flow, re-anchored so that t(0) = t_init.

    The flow is defined on the open window (tau_lo, tau_hi); either end may be
    infinite. ``branch`` is the sign of sinh t for the equidistant family and
    +1 otherwise.
    """

    name: str
    n: int
    t_init: float
    tau_lo: float
    tau_hi: float
    branch: int = 1

    def __call__(self, tau: float | np.ndarray) -> float | np.ndarray:
        taus = np.asarray(tau, dtype=float)
        if np.any(taus <= self.tau_lo) or np.any(taus >= self.tau_hi):
            raise DomainError(
                "outside_flow_window",
                f"τ must lie in ({self.tau_lo}, {self.tau_hi}) for the {self.name} flow",
                t_init=self.t_init,
            )
        values = self._evaluate(taus)
        return float(values) if np.ndim(tau) == 0 else values

    def _evaluate(self, tau: np.ndarray) -> np.ndarray:
        n, t0 = self.n, self.t_init
        if self.name == "euclidean_cone":
            return np.sqrt(t0**2 - 2.0 * n * tau)
        if self.name == "horospherical":
            return t0 - n * tau
        if self.name == "geodesic_spherical":
            return np.arccosh(math.cosh(t0) * np.exp(-n * tau))
        if self.name == "equidistant":
            return np.arcsinh(math.sinh(t0) * np.exp(-n * tau))
        if self.name == "spherical":
            return np.arccos(math.cos(t0) * np.exp(n * tau))
        return np.full_like(tau, t0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "t_init": self.t_init,
            "window": [self.tau_lo, self.tau_hi],
            "branch": self.branch,
        }


def closed_form_flow(name: str, n: int, t_init: float) -> ClosedFormFlow:
    if name == "custom":
        raise UnsupportedProfileError(
            "no_closed_form",
            "custom profiles have no closed-form slice flow",
            hint="use integrate_flow for custom warping functions",
        )
    WarpingProfile.catalog(name).require(t_init, "t_init")
    if n < 1:
        raise ConfigError("invalid_dimension", f"slice dimension must be >= 1, got {n}")

    lo, hi = -math.inf, math.inf
    branch = 1
    if name == "euclidean_cone":
        hi = t_init**2 / (2.0 * n)
    elif name == "geodesic_spherical":
        hi = math.log(math.cosh(t_init)) / n
    elif name == "equidistant":
        branch = int(np.sign(t_init))
    elif name == "spherical":
        cosine = math.cos(t_init)
        if cosine != 0.0:
            hi = -math.log(abs(cosine)) / n
    return ClosedFormFlow(name, n, float(t_init), lo, hi, branch)


def closed_form_branches(name: str, n: int, t_init: float) -> list[ClosedFormFlow]:
    """All closed-form flows through |t_init|; the equidistant family has two."""

    if name != "equidistant" or t_init == 0.0:
        return [closed_form_flow(name, n, t_init)]
    magnitude = abs(t_init)
    return [closed_form_flow(name, n, magnitude), closed_form_flow(name, n, -magnitude)]


@dataclass(frozen=True)
class FlowSpec:
    ctx: SolitonContext
    t_init: float
    tau_lo: float
    tau_hi: float
    step: float = DEFAULT_FLOW_STEP

    def __post_init__(self) -> None:
        if not self.step > 0.0:
            raise ConfigError("invalid_step", f"flow step must be positive, got {self.step}")
        if not self.tau_lo <= 0.0 <= self.tau_hi or self.tau_lo == self.tau_hi:
            raise ConfigError(
                "invalid_window",
                f"parameter window [{self.tau_lo}, {self.tau_hi}] must be nonempty and contain 0",
            )
        self.ctx.profile.require(self.t_init, "t_init")

    @property
    def n(self) -> int:
        return self.ctx.space.fiber_dim


@dataclass(frozen=True)
class FlowTrajectory:
    profile: WarpingProfile
    n: int
    taus: np.ndarray
    ts: np.ndarray
    sigmas: np.ndarray
    c_taus: np.ndarray
    halted_lo: bool = False
    halted_hi: bool = False
    velocities: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return int(self.taus.size)

    @property
    def halted(self) -> bool:
        return self.halted_lo or self.halted_hi

    @property
    def window(self) -> tuple[float, float]:
        return float(self.taus[0]), float(self.taus[-1])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"tau": self.taus, "t": self.ts, "sigma": self.sigmas, "c_tau": self.c_taus})

    def summary(self) -> dict[str, Any]:
        return {
            "profile": self.profile.name,
            "n": self.n,
            "samples": len(self),
            "window_reached": list(self.window),
            "halted_lo": self.halted_lo,
            "halted_hi": self.halted_hi,
        }


def _velocity(profile: WarpingProfile, n: int, t: np.ndarray) -> np.ndarray:
    return -n * profile.h1(t) / profile.h(t)


def _near_boundary(profile: WarpingProfile, t: float) -> bool:
    if not math.isfinite(t):
        return True
    return t - profile.interval_lo < BOUNDARY_MARGIN or profile.interval_hi - t < BOUNDARY_MARGIN


class _LeftInterval(Exception):
    """An RK4 stage left the open interval or produced a non-finite value."""


def _march(profile: WarpingProfile, n: int, t_init: float, tau_end: float, step: float) -> tuple[list[float], list[float], bool]:
    """RK4 with step doubling: a step is halved until one full step and two half steps agree.

    The march halts when a stage leaves I, when the accepted value comes within
    BOUNDARY_MARGIN of the boundary, or when the step falls below MIN_FLOW_STEP.
    """

    taus, ts = [0.0], [t_init]
    if tau_end == 0.0:
        return taus, ts, False
    count = max(1, math.ceil(abs(tau_end) / step - 1e-9))
    nominal = tau_end / count

    def rhs(y: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(y)) or any(_near_boundary(profile, float(value)) for value in y):
            raise _LeftInterval
        with np.errstate(all="ignore"):
            velocity = _velocity(profile, n, y)
        if not np.all(np.isfinite(velocity)):
            raise _LeftInterval
        return velocity

    state = np.array([t_init])
    tau, trial = 0.0, nominal
    while tau != tau_end:
        remaining = tau_end - tau
        last = abs(remaining) <= abs(trial) * (1.0 + 1e-9)
        h = remaining if last else trial
        try:
            full = rk4_step(rhs, state, h)
            half = rk4_step(rhs, rk4_step(rhs, state, 0.5 * h), 0.5 * h)
            accepted = bool(abs(full[0] - half[0]) <= MARCH_TOLERANCE * max(1.0, abs(half[0])))
        except _LeftInterval:
            accepted = False
        if not accepted:
            trial = 0.5 * h
            if abs(trial) < MIN_FLOW_STEP:
                return taus, ts, True
            continue
        if _near_boundary(profile, float(half[0])):
            return taus, ts, True
        state = half
        tau = tau_end if last else tau + h
        taus.append(tau)
        ts.append(float(state[0]))
        trial = math.copysign(min(abs(nominal), 2.0 * abs(h)), nominal)
    return taus, ts, False


def integrate_flow(spec: FlowSpec) -> FlowTrajectory:
    """RK4 trajectory of dt/dτ = -n h'/h, integrated both ways from τ = 0.

    σ is the flow parameter ∫ ds/h anchored at the initial slice, so σ(0) = 0.
    """

    profile, n = spec.ctx.profile, spec.n
    if _near_boundary(profile, spec.t_init):
        t = np.array([spec.t_init])
        return FlowTrajectory(
            profile, n, np.zeros(1), t, np.zeros(1), _velocity(profile, n, t) / profile.h(t), True, True, _velocity(profile, n, t)
        )

    fwd_taus, fwd_ts, halted_hi = _march(profile, n, spec.t_init, spec.tau_hi, spec.step)
    back_taus, back_ts, halted_lo = _march(profile, n, spec.t_init, spec.tau_lo, spec.step)
    taus = np.array(back_taus[::-1] + fwd_taus[1:])
    ts = np.array(back_ts[::-1] + fwd_ts[1:])
    velocities = _velocity(profile, n, ts)
    sigmas = cumulative_integral(lambda s: 1.0 / profile.h(s), spec.t_init, ts)
    c_taus = velocities / profile.h(ts)
    return FlowTrajectory(profile, n, taus, ts, sigmas, c_taus, halted_lo, halted_hi, velocities)


def _spline(trajectory: FlowTrajectory) -> CubicHermiteSpline:
    return CubicHermiteSpline(trajectory.taus, trajectory.ts, trajectory.velocities)


def t_at(trajectory: FlowTrajectory, tau: float) -> float:
    lo, hi = trajectory.window
    if not lo <= tau <= hi or len(trajectory) < 2:
        raise DomainError("outside_trajectory", f"τ={tau!r} is outside the computed window [{lo}, {hi}]")
    return float(_spline(trajectory)(tau))


def c_tau_at(trajectory: FlowTrajectory, tau: float) -> float:
    """c_τ = dσ/dτ = -n h'(t(τ))/h(t(τ))², with t(τ) from Hermite interpolation."""

    t = t_at(trajectory, tau)
    profile = trajectory.profile
    return float(-trajectory.n * profile.h1(t) / profile.h(t) ** 2)


@dataclass(frozen=True)
class LeafHit:
    tau_bar: float
    t_bar: float
    zeta_residual: float

    @property
    def passed(self) -> bool:
        return self.zeta_residual <= LEAF_TOLERANCE

    def to_dict(self) -> dict[str, Any]:
        return {"tau_bar": self.tau_bar, "t_bar": self.t_bar, "zeta_residual": self.zeta_residual, "passed": self.passed}


@dataclass(frozen=True)
class LeafConsistency:
    c: float
    hits: list[LeafHit]

    @property
    def present(self) -> bool:
        return bool(self.hits)

    @property
    def passed(self) -> bool:
        return all(hit.passed for hit in self.hits)

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.c, "present": self.present, "passed": self.passed, "hits": [hit.to_dict() for hit in self.hits]}


def leaf_consistency(ctx: SolitonContext, trajectory: FlowTrajectory) -> LeafConsistency:
    """Slices of the trajectory where c_τ equals ctx.c, checked against n h' + c h² = 0."""

    gap = trajectory.c_taus - ctx.c
    profile = trajectory.profile
    hits: list[LeafHit] = []

    def record(tau_bar: float) -> None:
        t_bar = t_at(trajectory, tau_bar)
        residual = abs(float(zeta(profile, trajectory.n, ctx.c, t_bar)))
        hits.append(LeafHit(float(tau_bar), t_bar, residual))

    for index in np.flatnonzero(gap == 0.0):
        record(float(trajectory.taus[index]))
    for index in np.flatnonzero(gap[:-1] * gap[1:] < 0.0):
        tau_bar = brentq(
            lambda tau: c_tau_at(trajectory, tau) - ctx.c,
            float(trajectory.taus[index]),
            float(trajectory.taus[index + 1]),
            xtol=1e-14,
        )
        record(tau_bar)
    hits.sort(key=lambda hit: hit.tau_bar)
    return LeafConsistency(ctx.c, hits)


def closed_form_deviation(trajectory: FlowTrajectory, flow: ClosedFormFlow) -> float:
    """sup |t(τ) - t_closed(τ)| over trajectory samples strictly inside the closed-form window."""

    inside = (trajectory.taus > flow.tau_lo) & (trajectory.taus < flow.tau_hi)
    if not np.any(inside):
        raise DomainError("outside_flow_window", "no trajectory sample lies inside the closed-form window")
    return float(np.max(np.abs(trajectory.ts[inside] - flow(trajectory.taus[inside]))))
