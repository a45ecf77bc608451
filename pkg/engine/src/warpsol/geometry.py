from __future__ import annotations

"""Ambient geometry of I x_h P: potentials, curvature and the soliton function.

Tangent vectors are arrays ``(v_t, v_1, ..., v_n)`` in an orthonormal frame
``∂t, e_1, ..., e_n`` where the ``e_i`` are unit fiber directions. With this
choice the fiber inner product of the hatted parts is the Euclidean dot.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, UnsupportedProfileError
from .numerics import Root, adaptive_simpson, cumulative_integral, find_roots
from .profiles import WarpingProfile


SPACE_FORM_TOLERANCE = 1e-8


@dataclass(frozen=True)
class WarpedSpace:
    profile: WarpingProfile
    fiber_curvature: float
    fiber_dim: int

    def __post_init__(self) -> None:
        if self.fiber_dim < 1:
            raise ConfigError("invalid_dimension", f"fiber dimension must be >= 1, got {self.fiber_dim}")

    @classmethod
    def catalog(
        cls,
        name: str,
        fiber_dim: int,
        *,
        fiber_curvature: float | None = None,
        interval: tuple[float, float] | None = None,
    ) -> "WarpedSpace":
        profile = WarpingProfile.catalog(name, interval)
        kappa = profile.fiber_curvature if fiber_curvature is None else float(fiber_curvature)
        return cls(profile, kappa, int(fiber_dim))

    def to_dict(self) -> dict[str, object]:
        return {"profile": self.profile.to_dict(), "fiber_curvature": self.fiber_curvature, "fiber_dim": self.fiber_dim}


@dataclass(frozen=True)
class SolitonContext:
    """Soliton constant c, soliton dimension m and the base point t0 of the potential."""

    space: WarpedSpace
    c: float
    m: int
    t0: float

    def __post_init__(self) -> None:
        profile = self.space.profile
        if self.c == 0.0 or not math.isfinite(self.c):
            raise ConfigError("zero_soliton_constant", "the soliton constant c must be finite and nonzero")
        if not 1 <= self.m <= self.space.fiber_dim:
            raise ConfigError(
                "invalid_dimension",
                f"soliton dimension m={self.m} must satisfy 1 <= m <= n={self.space.fiber_dim}",
            )
        if not (math.isfinite(self.t0) and profile.interval_lo <= self.t0 <= profile.interval_hi):
            raise ConfigError(
                "invalid_base_point",
                f"t0={self.t0!r} must be a finite point of [{profile.interval_lo}, {profile.interval_hi}]",
            )

    @property
    def profile(self) -> WarpingProfile:
        return self.space.profile

    def to_dict(self) -> dict[str, object]:
        return {"space": self.space.to_dict(), "c": self.c, "m": self.m, "t0": self.t0}


def eta_hat(ctx: SolitonContext, t: float) -> float:
    """∫_{t0}^{t} h(s) ds."""

    t = ctx.profile.require(t)
    return adaptive_simpson(ctx.profile.h, ctx.t0, t)


def eta_values(ctx: SolitonContext, t: np.ndarray) -> np.ndarray:
    return cumulative_integral(ctx.profile.h, ctx.t0, np.asarray(t, dtype=float))


def flow_param(ctx: SolitonContext, t: float) -> float:
    """∫_{t0}^{t} ds / h(s), the parameter of the flow of X."""

    profile = ctx.profile
    t = profile.require(t)
    if not profile.contains(ctx.t0):
        raise DomainError(
            "singular_base_point",
            f"1/h is not integrable from t0={ctx.t0!r}; choose t0 inside the open interval",
        )
    return adaptive_simpson(lambda s: 1.0 / profile.h(s), ctx.t0, t)


def flow_param_values(ctx: SolitonContext, t: np.ndarray) -> np.ndarray:
    profile = ctx.profile
    if not profile.contains(ctx.t0):
        raise DomainError("singular_base_point", f"1/h is not integrable from t0={ctx.t0!r}")
    return cumulative_integral(lambda s: 1.0 / profile.h(s), ctx.t0, np.asarray(t, dtype=float))


def zeta(profile: WarpingProfile, m: int, c: float, t: np.ndarray) -> np.ndarray:
    """m h' + c h², vectorized and without a domain check."""

    t = np.asarray(t, dtype=float)
    return m * profile.h1(t) + c * profile.h(t) ** 2


def soliton_function(ctx: SolitonContext, t: float) -> float:
    t = ctx.profile.require(t)
    return float(zeta(ctx.profile, ctx.m, ctx.c, t))


def soliton_function_derivative(ctx: SolitonContext, t: float) -> float:
    profile = ctx.profile
    return float(ctx.m * profile.h2(t) + 2.0 * ctx.c * profile.h(t) * profile.h1(t))


def soliton_leaves(ctx: SolitonContext, bracket_lo: float, bracket_hi: float) -> list[Root]:
    """Slices {t̄} x P that are themselves solitons, i.e. the roots of ζ in the bracket."""

    if not bracket_lo < bracket_hi:
        raise DomainError("empty_bracket", f"bracket [{bracket_lo}, {bracket_hi}] is empty")
    ctx.profile.require(bracket_lo, "bracket_lo")
    ctx.profile.require(bracket_hi, "bracket_hi")
    return find_roots(
        lambda t: zeta(ctx.profile, ctx.m, ctx.c, t),
        bracket_lo,
        bracket_hi,
        derivative=lambda t: soliton_function_derivative(ctx, t),
    )


def _vector(space: WarpedSpace, value: np.ndarray) -> np.ndarray:
    vector = np.asarray(value, dtype=float)
    if vector.shape != (space.fiber_dim + 1,):
        raise ConfigError(
            "invalid_vector",
            f"tangent vectors need {space.fiber_dim + 1} components (∂t first), got shape {vector.shape}",
        )
    return vector


def riemann_component(
    space: WarpedSpace,
    t: float,
    U: np.ndarray,
    V: np.ndarray,
    W: np.ndarray,
    Z: np.ndarray,
) -> float:
    """⟨R(U,V)W, Z⟩ of the warped metric dt² + h(t)² g_κ."""

    profile = space.profile
    h, h1, h2 = profile.value(t), profile.first(t), profile.second(t)
    U, V, W, Z = (_vector(space, vector) for vector in (U, V, W, Z))
    u_hat, v_hat, w_hat, z_hat = U[1:], V[1:], W[1:], Z[1:]
    fiber_part = (h1**2 - space.fiber_curvature) / h**2 * (
        np.dot(u_hat, w_hat) * np.dot(v_hat, z_hat) - np.dot(v_hat, w_hat) * np.dot(u_hat, z_hat)
    )
    radial_part = (h2 / h) * (
        U[0] * W[0] * np.dot(z_hat, v_hat)
        - U[0] * Z[0] * np.dot(w_hat, v_hat)
        - V[0] * W[0] * np.dot(z_hat, u_hat)
        + V[0] * Z[0] * np.dot(w_hat, u_hat)
    )
    return float(fiber_part + radial_part)


def sectional_curvature(space: WarpedSpace, t: float, U: np.ndarray, V: np.ndarray) -> float:
    U, V = _vector(space, U), _vector(space, V)
    area = np.dot(U, U) * np.dot(V, V) - np.dot(U, V) ** 2
    if area <= 0.0:
        raise DomainError("degenerate_plane", "sectional curvature needs two independent vectors")
    return riemann_component(space, t, U, V, V, U) / area


def _frame(space: WarpedSpace) -> np.ndarray:
    return np.eye(space.fiber_dim + 1)


def ricci(space: WarpedSpace, t: float, Y: np.ndarray, Z: np.ndarray) -> float:
    """Ric(Y, Z) by contracting riemann_component over the orthonormal frame."""

    return float(sum(riemann_component(space, t, E, Y, Z, E) for E in _frame(space)))


def ricci_radial(space: WarpedSpace, Z: np.ndarray, t: float) -> float:
    """Ric(Z, X) with X = h(t)∂t."""

    X = np.zeros(space.fiber_dim + 1)
    X[0] = space.profile.value(t)
    return ricci(space, t, Z, X)


def ricci_unit_normal(space: WarpedSpace, t: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Ric(N, N) for unit N = Θ∂t + sqrt(1 - Θ²) e, vectorized over sample points."""

    profile = space.profile
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    h, h1, h2 = profile.h(t), profile.h1(t), profile.h2(t)
    n = space.fiber_dim
    radial = -n * h2 / h
    tangential = -h2 / h + (n - 1) * (space.fiber_curvature - h1**2) / h**2
    return theta**2 * radial + (1.0 - theta**2) * tangential


def varkappa(space: WarpedSpace, t: float) -> float:
    """min{-h''/h, (κ - h'²)/h²}."""

    profile = space.profile
    h, h1, h2 = profile.value(t), profile.first(t), profile.second(t)
    return min(-h2 / h, (space.fiber_curvature - h1**2) / h**2)


def varkappa_values(space: WarpedSpace, t: np.ndarray) -> np.ndarray:
    profile = space.profile
    t = np.asarray(t, dtype=float)
    h, h1, h2 = profile.h(t), profile.h1(t), profile.h2(t)
    return np.minimum(-h2 / h, (space.fiber_curvature - h1**2) / h**2)


@dataclass(frozen=True)
class SpaceFormCheck:
    kappa_bar: float | None
    branch_mismatch: float
    spread: float

    @property
    def is_space_form(self) -> bool:
        return self.kappa_bar is not None

    def to_dict(self) -> dict[str, float | bool | None]:
        return {
            "space_form": self.is_space_form,
            "kappa_bar": self.kappa_bar,
            "branch_mismatch": self.branch_mismatch,
            "spread": self.spread,
        }


def space_form_check(space: WarpedSpace, samples: int = 401, tol: float = SPACE_FORM_TOLERANCE) -> SpaceFormCheck:
    """Whether -h''/h and (κ - h'²)/h² agree and are constant over I."""

    profile = space.profile
    grid = profile.sample_grid(samples)
    h, h1, h2 = profile.h(grid), profile.h1(grid), profile.h2(grid)
    radial = -h2 / h
    tangential = (space.fiber_curvature - h1**2) / h**2
    mismatch = float(np.max(np.abs(radial - tangential)))
    spread = float(max(np.ptp(radial), np.ptp(tangential)))
    if mismatch <= tol and spread <= tol:
        value = float(np.mean(radial))
        return SpaceFormCheck(0.0 if abs(value) <= tol else value, mismatch, spread)
    return SpaceFormCheck(None, mismatch, spread)


def chi_catalog(ctx: SolitonContext) -> Callable[[np.ndarray], np.ndarray]:
    """χ with η̂' = χ(η̂)^{1/2}, shifted to the base point t0."""

    name = ctx.profile.name
    t0 = ctx.t0
    if name == "euclidean_cone":
        return lambda tau: 2.0 * np.asarray(tau) + t0**2
    if name == "horospherical":
        return lambda tau: (np.asarray(tau) + math.exp(t0)) ** 2
    if name == "geodesic_spherical":
        return lambda tau: (np.asarray(tau) + math.cosh(t0)) ** 2 - 1.0
    if name == "spherical":
        return lambda tau: 1.0 - (math.cos(t0) - np.asarray(tau)) ** 2
    if name == "equidistant":
        return lambda tau: 1.0 + (np.asarray(tau) + math.sinh(t0)) ** 2
    if name == "product":
        return lambda tau: np.ones_like(np.asarray(tau, dtype=float))
    raise UnsupportedProfileError(
        "no_chi_catalog",
        f"no closed-form χ is known for profile {name!r}",
        hint="the conserved quantity is available for catalog profiles only",
    )
