from __future__ import annotations

"""Rotationally symmetric solitons H = c⟨X, N⟩ via the profile-curve ODE.

Euclidean model (the default): the profile γ = (x, r) lives in the half plane
r >= 0 of R^{m+1}, with unit tangent (cos θ, sin θ) and normal
ν = (-sin θ, cos θ). Principal curvatures are k1 = θ' along the profile and
k2 = -cos θ / r on the orbit spheres, H = k1 + (m - 1) k2, so the round
sphere traced counterclockwise has the inward normal and H = m/R > 0.

Space-form model (``space_form=True``): the profile lives in the plane
dt² + h(t)² dφ² of a warped target whose fiber has constant curvature κ; the
state is (t, φ, θ) and ``x``/``r`` of the resulting curve hold t and φ.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
import pandas as pd

from .errors import ConfigError, DomainError, NonConvergenceError
from .numerics import fourth_order_gradient, observed_order, rk4_step
from .profiles import WarpingProfile


DEFAULT_SHOOT_STEP = 1e-3
DEFAULT_MAX_LENGTH = 10.0
DEFAULT_AXIS_STOP = 1e-2
BLOW_UP_CURVATURE = 1e6
SINGULAR_RADIUS = 1e-9
REFINEMENT_CLEARANCE = 0.1

StopReason = Literal["max_length", "axis_return", "axis_crossing", "blow_up", "left_interval", "exact"]


def _sn(kappa: float, phi: np.ndarray) -> np.ndarray:
    if kappa > 0.0:
        root = math.sqrt(kappa)
        return np.sin(root * phi) / root
    if kappa < 0.0:
        root = math.sqrt(-kappa)
        return np.sinh(root * phi) / root
    return np.asarray(phi, dtype=float)


def _cs(kappa: float, phi: np.ndarray) -> np.ndarray:
    """sn'/sn, the curvature of a geodesic sphere of radius φ in the model fiber."""

    if kappa > 0.0:
        root = math.sqrt(kappa)
        return root / np.tan(root * phi)
    if kappa < 0.0:
        root = math.sqrt(-kappa)
        return root / np.tanh(root * phi)
    return 1.0 / np.asarray(phi, dtype=float)


@dataclass(frozen=True)
class ShootingConfig:
    c: float
    m: int
    launch: Literal["axis", "free"] = "axis"
    x0: float = 0.0
    r0: float = 0.0
    theta0: float = math.pi / 2
    step: float = DEFAULT_SHOOT_STEP
    max_length: float = DEFAULT_MAX_LENGTH
    axis_stop: float = DEFAULT_AXIS_STOP
    space_form: bool = False
    profile_name: str = "euclidean_cone"
    fiber_curvature: float | None = None

    def __post_init__(self) -> None:
        if self.c == 0.0:
            raise ConfigError("zero_soliton_constant", "the soliton constant c must be nonzero")
        if self.m < 1:
            raise ConfigError("invalid_dimension", f"soliton dimension must be >= 1, got {self.m}")
        if not self.step > 0.0:
            raise ConfigError("invalid_step", f"shooting step must be positive, got {self.step}")
        if not self.max_length > self.step:
            raise ConfigError("invalid_length", "max_length must exceed one step")
        if self.r0 < 0.0:
            raise ConfigError("invalid_launch", f"r0 must be >= 0, got {self.r0}")
        if self.launch == "axis" and self.r0 != 0.0:
            raise ConfigError("invalid_launch", "axis launches start at r0 = 0")
        if self.launch == "free" and self.r0 == 0.0:
            raise ConfigError("invalid_launch", "free launches need r0 > 0; use launch='axis' on the axis")
        if self.space_form and self.launch != "free":
            raise ConfigError(
                "invalid_launch",
                "the space-form rotational model supports free launches only",
                hint="set launch to 'free' with r0 the fiber angle φ0 > 0",
            )


@dataclass(frozen=True)
class ProfileCurve:
    """Arclength samples of a rotational profile with frame and curvatures.

    ``kappa_prof`` is k1; ``k2`` is the orbit curvature, equal to k1 on poles.
    """

    s: np.ndarray
    x: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    nu_x: np.ndarray
    nu_r: np.ndarray
    kappa_prof: np.ndarray
    k2: np.ndarray
    m: int
    c: float
    pole_start: bool = False
    pole_end: bool = False
    closed: bool = False
    complete: bool = False
    stop_reason: StopReason = "exact"
    model: Literal["euclidean", "space_form"] = "euclidean"
    profile: WarpingProfile = field(default_factory=lambda: WarpingProfile.catalog("euclidean_cone"))
    fiber_curvature: float = 1.0

    def __len__(self) -> int:
        return int(self.s.size)

    @property
    def spacing(self) -> float:
        return float(self.s[1] - self.s[0])

    def pole_mask(self) -> np.ndarray:
        mask = np.zeros(len(self), dtype=bool)
        mask[0] = self.pole_start
        mask[-1] = self.pole_end
        return mask

    def ambient_t(self) -> np.ndarray:
        if self.model == "space_form":
            return self.x.copy()
        return np.hypot(self.x, self.r)

    def support(self) -> np.ndarray:
        """⟨X, N⟩ with X the conformal field h(t)∂t (the position vector in the Euclidean model)."""

        if self.model == "space_form":
            return -self.profile.h(self.x) * np.sin(self.theta)
        return self.r * np.cos(self.theta) - self.x * np.sin(self.theta)

    def eta_rate(self) -> np.ndarray:
        """dη/ds = ⟨X, γ'⟩."""

        if self.model == "space_form":
            return self.profile.h(self.x) * np.cos(self.theta)
        return self.x * np.cos(self.theta) + self.r * np.sin(self.theta)

    def orbit_radius(self) -> np.ndarray:
        if self.model == "space_form":
            return self.profile.h(self.x) * _sn(self.fiber_curvature, self.r)
        return self.r.copy()

    def arclength_defect(self) -> float:
        """sup ||γ'| - 1| at interior samples, |γ'| from 4th-order differences."""

        dx = fourth_order_gradient(self.x, self.spacing)
        dr = fourth_order_gradient(self.r, self.spacing)
        if self.model == "space_form":
            dr = dr * self.profile.h(self.x)
        return float(np.max(np.abs(np.hypot(dx, dr)[1:-1] - 1.0)))

    def normal_defect(self) -> float:
        tangent_x, tangent_r = np.cos(self.theta), np.sin(self.theta)
        dot = np.abs(self.nu_x * tangent_x + self.nu_r * tangent_r)
        unit = np.abs(np.hypot(self.nu_x, self.nu_r) - 1.0)
        return float(max(dot.max(), unit.max()))


@dataclass(frozen=True)
class FundamentalForms:
    k1: np.ndarray
    k2: np.ndarray
    H: np.ndarray
    A2: np.ndarray


def _euclidean_rhs(c: float, m: int):
    def rhs(state: np.ndarray) -> np.ndarray:
        x, r, theta = state
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        turn = c * (r * cos_t - x * sin_t)
        if m > 1:
            turn += (m - 1) * cos_t / r
        return np.array([cos_t, sin_t, turn])

    return rhs


def _space_form_rhs(c: float, m: int, profile: WarpingProfile, kappa: float):
    def rhs(state: np.ndarray) -> np.ndarray:
        t, phi, theta = state
        h, h1 = float(profile.h(t)), float(profile.h1(t))
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        turn = -c * h * sin_t - m * (h1 / h) * sin_t
        if m > 1:
            turn += (m - 1) * cos_t * float(_cs(kappa, phi)) / h
        return np.array([cos_t, sin_t / h, turn])

    return rhs


def profile_rhs(state: np.ndarray, c: float, m: int) -> np.ndarray:
    """(x', r', θ') of the Euclidean profile ODE θ' = c(r cos θ - x sin θ) + (m - 1) cos θ / r."""

    x, r, theta = (float(value) for value in state)
    if r <= 0.0 and m > 1:
        raise DomainError(
            "axis_crossing",
            f"profile ODE is singular at r={r!r}; launch from the axis with the series start",
            state=[x, r, theta],
        )
    return _euclidean_rhs(c, m)(np.array([x, r, theta]))


def _axis_start(config: ShootingConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """Pole state and the series state one step away, with the cap curvature."""

    c, m, x0, step = config.c, config.m, config.x0, config.step
    k0 = -c * x0 / m
    cubic = c * k0 * (x0 * k0 - 1.0) / (2.0 * (m + 2))
    pole = np.array([x0, 0.0, math.pi / 2])
    first = np.array(
        [
            x0 - k0 * step**2 / 2.0 - (cubic - k0**3 / 6.0) * step**4 / 4.0,
            step - k0**2 * step**3 / 6.0,
            math.pi / 2 + k0 * step + cubic * step**3,
        ]
    )
    return pole, first, k0


def shoot(config: ShootingConfig) -> ProfileCurve:
    """Integrate the profile ODE by RK4 from the launch until a stop condition."""

    if config.space_form:
        return _shoot_space_form(config)

    rhs = _euclidean_rhs(config.c, config.m)
    states: list[np.ndarray] = []
    pole_curvature: float | None = None
    if config.launch == "axis":
        pole, first, pole_curvature = _axis_start(config)
        states.extend([pole, first])
    else:
        states.append(np.array([config.x0, config.r0, config.theta0]))

    count = int(math.floor(config.max_length / config.step + 1e-9))
    reason: StopReason = "max_length"
    risen = states[-1][1] >= config.axis_stop
    while len(states) <= count:
        state = states[-1]
        if state[1] <= 0.0:
            reason = "axis_crossing"
            states.pop()
            break
        turn = rhs(state)[2]
        if abs(turn) > BLOW_UP_CURVATURE:
            if len(states) <= 2:
                raise NonConvergenceError(
                    "immediate_blow_up",
                    f"profile curvature {turn:.3e} exceeds {BLOW_UP_CURVATURE:g} at launch",
                    state=state.tolist(),
                )
            reason = "blow_up"
            break
        candidate = rk4_step(rhs, state, config.step)
        if not np.all(np.isfinite(candidate)):
            reason = "blow_up"
            break
        states.append(candidate)
        if candidate[1] >= config.axis_stop:
            risen = True
        elif risen and math.sin(candidate[2]) < 0.0 and candidate[1] < config.axis_stop:
            reason = "axis_return"
            break

    if len(states) < 5:
        raise NonConvergenceError(
            "too_few_samples",
            f"shooting stopped after {len(states)} samples ({reason})",
            state=states[-1].tolist(),
        )
    data = np.array(states)
    s = config.step * np.arange(len(states))
    x, r, theta = data[:, 0], data[:, 1], data[:, 2]
    kappa = fourth_order_gradient(theta, config.step)
    k2 = np.empty_like(r)
    off_axis = r > 0.0
    k2[off_axis] = -np.cos(theta[off_axis]) / r[off_axis]
    pole_start = pole_curvature is not None
    if pole_start:
        kappa[0] = pole_curvature
        k2[0] = pole_curvature
    closed = reason == "axis_return" and pole_start
    return ProfileCurve(
        s=s,
        x=x,
        r=r,
        theta=theta,
        nu_x=-np.sin(theta),
        nu_r=np.cos(theta),
        kappa_prof=kappa,
        k2=k2,
        m=config.m,
        c=config.c,
        pole_start=pole_start,
        closed=closed,
        complete=closed,
        stop_reason=reason,
    )


def _shoot_space_form(config: ShootingConfig) -> ProfileCurve:
    profile = WarpingProfile.catalog(config.profile_name)
    kappa = profile.fiber_curvature if config.fiber_curvature is None else float(config.fiber_curvature)
    profile.require(config.x0, "x0")
    rhs = _space_form_rhs(config.c, config.m, profile, kappa)
    phi_hi = math.pi / math.sqrt(kappa) if kappa > 0.0 else math.inf

    states = [np.array([config.x0, config.r0, config.theta0])]
    count = int(math.floor(config.max_length / config.step + 1e-9))
    reason: StopReason = "max_length"
    while len(states) <= count:
        state = states[-1]
        turn = rhs(state)[2]
        if abs(turn) > BLOW_UP_CURVATURE:
            if len(states) == 1:
                raise NonConvergenceError(
                    "immediate_blow_up",
                    f"profile curvature {turn:.3e} exceeds {BLOW_UP_CURVATURE:g} at launch",
                    state=state.tolist(),
                )
            reason = "blow_up"
            break
        candidate = rk4_step(rhs, state, config.step)
        if not profile.contains(float(candidate[0])):
            reason = "left_interval"
            break
        if not config.axis_stop <= candidate[1] <= phi_hi - config.axis_stop:
            reason = "axis_return"
            break
        states.append(candidate)

    if len(states) < 5:
        raise NonConvergenceError(
            "too_few_samples",
            f"shooting stopped after {len(states)} samples ({reason})",
            state=states[-1].tolist(),
        )
    data = np.array(states)
    t, phi, theta = data[:, 0], data[:, 1], data[:, 2]
    ratio = profile.h1(t) / profile.h(t)
    k1 = fourth_order_gradient(theta, config.step) + ratio * np.sin(theta)
    k2 = ratio * np.sin(theta) - np.cos(theta) * _cs(kappa, phi) / profile.h(t)
    return ProfileCurve(
        s=config.step * np.arange(len(states)),
        x=t,
        r=phi,
        theta=theta,
        nu_x=-np.sin(theta),
        nu_r=np.cos(theta),
        kappa_prof=k1,
        k2=k2,
        m=config.m,
        c=config.c,
        stop_reason=reason,
        model="space_form",
        profile=profile,
        fiber_curvature=kappa,
    )


def _round_curve(radius: float, m: int, c: float, samples: int, outward: bool) -> ProfileCurve:
    if samples < 8:
        raise ConfigError("too_few_samples", f"need at least 8 samples, got {samples}")
    s = np.linspace(0.0, math.pi * radius, samples)
    angle = s / radius
    if outward:
        x, theta, k1 = -radius * np.cos(angle), math.pi / 2 - angle, -1.0 / radius
    else:
        x, theta, k1 = radius * np.cos(angle), math.pi / 2 + angle, 1.0 / radius
    r = radius * np.sin(angle)
    r[0] = r[-1] = 0.0
    curvature = np.full(samples, k1)
    return ProfileCurve(
        s=s,
        x=x,
        r=r,
        theta=theta,
        nu_x=-np.sin(theta),
        nu_r=np.cos(theta),
        kappa_prof=curvature,
        k2=curvature.copy(),
        m=m,
        c=c,
        pole_start=True,
        pole_end=True,
        closed=True,
        complete=True,
    )


def exact_sphere(m: int, c: float, samples: int = 401, outward: bool = False) -> ProfileCurve:
    """The round shrinker of radius sqrt(-m/c), pole to pole."""

    if c >= 0.0:
        raise ConfigError("no_round_soliton", f"round sphere solitons need c < 0, got c={c}")
    return _round_curve(math.sqrt(-m / c), m, c, samples, outward)


def exact_circle(radius: float, m: int, c: float, samples: int = 401, outward: bool = True) -> ProfileCurve:
    """A round sphere of arbitrary radius; a soliton only when radius² = -m/c."""

    if radius <= 0.0:
        raise ConfigError("invalid_radius", f"radius must be positive, got {radius}")
    return _round_curve(radius, m, c, samples, outward)


def exact_cylinder(m: int, c: float, length: float = 4.0, samples: int = 401) -> ProfileCurve:
    """S^{m-1}(sqrt(-(m-1)/c)) x R, sampled over x in [-length/2, length/2]."""

    if m < 2 or c >= 0.0:
        raise ConfigError("no_round_soliton", f"shrinking cylinders need m >= 2 and c < 0, got m={m}, c={c}")
    radius = math.sqrt(-(m - 1) / c)
    s = np.linspace(0.0, length, samples)
    zeros = np.zeros(samples)
    return ProfileCurve(
        s=s,
        x=s - length / 2.0,
        r=np.full(samples, radius),
        theta=zeros,
        nu_x=zeros.copy(),
        nu_r=np.ones(samples),
        kappa_prof=zeros.copy(),
        k2=np.full(samples, -1.0 / radius),
        m=m,
        c=c,
    )


def exact_plane(length: float = 4.0, samples: int = 401, m: int = 2, c: float = -1.0) -> ProfileCurve:
    """The hyperplane x = 0 through the origin, from the pole outwards."""

    s = np.linspace(0.0, length, samples)
    zeros = np.zeros(samples)
    return ProfileCurve(
        s=s,
        x=zeros,
        r=s.copy(),
        theta=np.full(samples, math.pi / 2),
        nu_x=-np.ones(samples),
        nu_r=zeros.copy(),
        kappa_prof=zeros.copy(),
        k2=zeros.copy(),
        m=m,
        c=c,
        pole_start=True,
    )


def fundamental_forms(curve: ProfileCurve) -> FundamentalForms:
    off_axis = ~curve.pole_mask()
    if curve.model == "euclidean" and np.any(curve.r[off_axis] < SINGULAR_RADIUS):
        index = int(np.flatnonzero(off_axis & (curve.r < SINGULAR_RADIUS))[0])
        raise DomainError(
            "singular_sample",
            f"sample {index} sits on the axis (r={curve.r[index]!r}) without a pole flag",
            s=float(curve.s[index]),
        )
    k1 = curve.kappa_prof
    k2 = curve.k2
    H = k1 + (curve.m - 1) * k2
    A2 = k1**2 + (curve.m - 1) * k2**2
    return FundamentalForms(k1=k1, k2=k2, H=H, A2=A2)


@dataclass(frozen=True)
class ResidualField:
    values: np.ndarray
    sup: float

    def to_dict(self) -> dict[str, Any]:
        return {"sup": self.sup, "samples": int(self.values.size)}


def soliton_residual(curve: ProfileCurve) -> ResidualField:
    """H - c⟨X, N⟩ per sample."""

    forms = fundamental_forms(curve)
    values = forms.H - curve.c * curve.support()
    return ResidualField(values=values, sup=float(np.max(np.abs(values))))


def sphere_deviation(curve: ProfileCurve, radius: float) -> float:
    """Largest distance of the samples from the round sphere of the given radius."""

    return float(np.max(np.abs(np.hypot(curve.x, curve.r) - radius)))


def curve_frame(curve: ProfileCurve) -> pd.DataFrame:
    forms = fundamental_forms(curve)
    residual = forms.H - curve.c * curve.support()
    return pd.DataFrame(
        {
            "s": curve.s,
            "x": curve.x,
            "r": curve.r,
            "theta": curve.theta,
            "H": forms.H,
            "A2": forms.A2,
            "residual": residual,
        }
    )


@dataclass(frozen=True)
class RefinementStudy:
    steps: list[float]
    residuals: list[float]
    order: float | None

    def to_dict(self) -> dict[str, Any]:
        return {"steps": self.steps, "residuals": self.residuals, "order": self.order}


def refinement_study(config: ShootingConfig, steps: list[float], clearance: float = REFINEMENT_CLEARANCE) -> RefinementStudy:
    """Sup soliton residual of the shot curve at several steps, with the observed order.

    Samples closer than ``clearance`` to the axis are left out.
    """

    residuals: list[float] = []
    for step in steps:
        curve = shoot(replace(config, step=step))
        values = soliton_residual(curve).values
        if curve.model == "euclidean":
            values = values[curve.orbit_radius() >= clearance]
        residuals.append(float(np.max(np.abs(values))) if values.size else math.inf)
    return RefinementStudy(list(steps), residuals, observed_order(residuals, list(steps)))
