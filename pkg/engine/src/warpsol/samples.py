from __future__ import annotations

"""Immersion samples: pointwise soliton fields plus the 1-D reduced operators.

Every sample is a function of one parameter ξ with uniform spacing Δξ, an
induced metric g = ds/dξ and an orbit weight ρ (r^{m-1} on rotational
profiles, 1 on graphs), so the Laplace–Beltrami operator of a function of ξ is

    Δf = (1/(ρ g)) d/dξ (ρ/g df/dξ)

discretized in divergence form with face values of ρ and g. Poles use the
reflected stencil Δf = 2m (f_1 - f_0) / Δs². Slice samples are analytic
single-point samples whose derivative terms all vanish.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .errors import ConfigError
from .geometry import SolitonContext, WarpedSpace, eta_values, ricci_unit_normal, space_form_check
from .graphs import GraphGrid, TranslatorSolution
from .rotational import ProfileCurve, fundamental_forms

SampleKind = Literal["slice", "rotational", "graph"]


@dataclass(frozen=True)
class ImmersionSample:
    kind: SampleKind
    ctx: SolitonContext
    spacing: float
    metric: np.ndarray
    face_metric: np.ndarray
    weight: np.ndarray
    face_weight: np.ndarray
    poles: np.ndarray
    t: np.ndarray
    eta: np.ndarray
    eta_rate: np.ndarray
    support: np.ndarray
    theta_n: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    orbit: np.ndarray
    arclength: np.ndarray
    complete: bool = False
    closed: bool = False
    origin: int | None = None
    label: str = ""
    handle: Any = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def m(self) -> int:
        return self.ctx.m

    @property
    def c(self) -> float:
        return self.ctx.c

    @property
    def analytic(self) -> bool:
        return self.kind == "slice"

    @property
    def H(self) -> np.ndarray:
        return self.k1 + (self.m - 1) * self.k2

    @property
    def A2(self) -> np.ndarray:
        return self.k1**2 + (self.m - 1) * self.k2**2

    @property
    def X2(self) -> np.ndarray:
        """|X|² = h(t)²."""

        return self.ctx.profile.h(self.t) ** 2

    def nodes(self) -> np.ndarray:
        """Evaluation mask: poles and interior samples; non-pole endpoints are boundary."""

        if self.analytic:
            return np.ones(len(self), dtype=bool)
        mask = np.ones(len(self), dtype=bool)
        mask[0] = bool(self.poles[0])
        mask[-1] = bool(self.poles[-1])
        return mask

    def inside(self) -> np.ndarray:
        """Samples whose ambient coordinate lies in the open interval I."""

        profile = self.ctx.profile
        return np.array([profile.contains(float(value)) for value in self.t])

    def d_ds(self, f: np.ndarray) -> np.ndarray:
        """Arclength derivative; centered inside, zero at poles, one-sided at open ends."""

        f = np.asarray(f, dtype=float)
        if self.analytic:
            return np.zeros_like(f)
        out = np.empty_like(f)
        out[1:-1] = (f[2:] - f[:-2]) / (2.0 * self.spacing * self.metric[1:-1])
        out[0] = (f[1] - f[0]) / (self.spacing * self.metric[0])
        out[-1] = (f[-1] - f[-2]) / (self.spacing * self.metric[-1])
        out[self.poles] = 0.0
        return out

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.analytic:
            return np.zeros_like(f)
        out = np.full_like(f, np.nan)
        flux = self.face_weight / self.face_metric * np.diff(f)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[1:-1] = (flux[1:] - flux[:-1]) / (self.weight[1:-1] * self.metric[1:-1] * self.spacing**2)
        if self.poles[0]:
            out[0] = 2.0 * self.m * (f[1] - f[0]) / (self.spacing * self.metric[0]) ** 2
        if self.poles[-1]:
            out[-1] = 2.0 * self.m * (f[-2] - f[-1]) / (self.spacing * self.metric[-1]) ** 2
        return out

    def drift_laplacian(self, f: np.ndarray) -> np.ndarray:
        """Δ_{-cη} f = Δf + c⟨∇η, ∇f⟩."""

        return self.laplacian(f) + self.c * self.eta_rate * self.d_ds(f)

    def space_form_curvature(self) -> float | None:
        return space_form_check(self.ctx.space).kappa_bar

    def ricci_normal(self) -> np.ndarray:
        """Ric(N, N); constant n κ̄ in space forms, including singular orbits of the model."""

        kappa_bar = self.space_form_curvature()
        if kappa_bar is not None:
            return np.full(len(self), self.ctx.space.fiber_dim * kappa_bar)
        return ricci_unit_normal(self.ctx.space, self.t, self.theta_n)

    def h2_over_h(self) -> np.ndarray:
        kappa_bar = self.space_form_curvature()
        if kappa_bar is not None:
            return np.full(len(self), -kappa_bar)
        profile = self.ctx.profile
        return profile.h2(self.t) / profile.h(self.t)

    def h1(self) -> np.ndarray:
        return np.asarray(self.ctx.profile.h1(self.t), dtype=float) * np.ones(len(self))

    def measure(self) -> np.ndarray:
        """Unweighted dual-cell measure ρ g Δξ (without the unit-sphere area), with pole caps."""

        if self.analytic:
            return np.ones(len(self))
        mass = self.weight * self.metric * self.spacing
        if not self.poles[0]:
            mass[0] *= 0.5
        if not self.poles[-1]:
            mass[-1] *= 0.5
        for index in (0, -1):
            if self.poles[index]:
                mass[index] = (self.spacing * self.metric[index] / 2.0) ** self.m / self.m
        return mass

    def restrict(self, start: int, stop: int) -> "ImmersionSample":
        """Sub-sample on [start, stop) whose new ends are boundary (Dirichlet) samples."""

        if not 0 <= start < stop <= len(self) or stop - start < 5:
            raise ConfigError("invalid_window", f"cannot restrict a sample of {len(self)} points to [{start}, {stop})")
        nodes = slice(start, stop)
        faces = slice(start, stop - 1)
        poles = self.poles[nodes].copy()
        poles[0] = poles[0] and start == 0
        poles[-1] = poles[-1] and stop == len(self)
        origin = None if self.origin is None or not start <= self.origin < stop else self.origin - start
        return ImmersionSample(
            kind=self.kind,
            ctx=self.ctx,
            spacing=self.spacing,
            metric=self.metric[nodes],
            face_metric=self.face_metric[faces],
            weight=self.weight[nodes],
            face_weight=self.face_weight[faces],
            poles=poles,
            t=self.t[nodes],
            eta=self.eta[nodes],
            eta_rate=self.eta_rate[nodes],
            support=self.support[nodes],
            theta_n=self.theta_n[nodes],
            k1=self.k1[nodes],
            k2=self.k2[nodes],
            orbit=self.orbit[nodes],
            arclength=self.arclength[nodes],
            complete=False,
            closed=False,
            origin=origin,
            label=f"{self.label}[{start}:{stop}]",
            handle=self.handle,
        )


def _single(value: float) -> np.ndarray:
    return np.array([float(value)])


def slice_sample(ctx: SolitonContext, t_bar: float) -> ImmersionSample:
    """The m-dimensional totally geodesic piece of the slice {t̄} x P, normal ∂t."""

    profile = ctx.profile
    t_bar = profile.require(t_bar, "t_bar")
    h, h1 = profile.value(t_bar), profile.first(t_bar)
    curvature = -h1 / h
    one = _single(1.0)
    return ImmersionSample(
        kind="slice",
        ctx=ctx,
        spacing=0.0,
        metric=one,
        face_metric=np.empty(0),
        weight=one.copy(),
        face_weight=np.empty(0),
        poles=np.zeros(1, dtype=bool),
        t=_single(t_bar),
        eta=eta_values(ctx, _single(t_bar)),
        eta_rate=_single(0.0),
        support=_single(h),
        theta_n=one.copy(),
        k1=_single(curvature),
        k2=_single(curvature),
        orbit=_single(h),
        arclength=_single(0.0),
        complete=True,
        closed=True,
        label=f"slice[{profile.name}, t={t_bar:.6g}]",
    )


def rotational_context(curve: ProfileCurve, t0: float | None = None) -> SolitonContext:
    space = WarpedSpace(curve.profile, curve.fiber_curvature, curve.m)
    if t0 is None:
        lo = curve.profile.interval_lo
        t0 = lo if math.isfinite(lo) else 0.0
    return SolitonContext(space, curve.c, curve.m, float(t0))


def rotational_sample(curve: ProfileCurve, t0: float | None = None, label: str = "") -> ImmersionSample:
    forms = fundamental_forms(curve)
    ctx = rotational_context(curve, t0)
    t = curve.ambient_t()
    h = ctx.profile.h(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta_n = np.where(h > 0.0, curve.support() / h, 0.0)
    orbit = curve.orbit_radius()
    weight = orbit ** (curve.m - 1)
    face_weight = (0.5 * (orbit[1:] + orbit[:-1])) ** (curve.m - 1)
    poles = curve.pole_mask()
    return ImmersionSample(
        kind="rotational",
        ctx=ctx,
        spacing=curve.spacing,
        metric=np.ones(len(curve)),
        face_metric=np.ones(len(curve) - 1),
        weight=weight,
        face_weight=face_weight,
        poles=poles,
        t=t,
        eta=eta_values(ctx, t),
        eta_rate=curve.eta_rate(),
        support=curve.support(),
        theta_n=theta_n,
        k1=forms.k1.copy(),
        k2=forms.k2.copy(),
        orbit=orbit,
        arclength=curve.s - curve.s[0],
        complete=curve.complete,
        closed=curve.closed,
        origin=0 if curve.pole_start else None,
        label=label or f"rotational[{curve.stop_reason}]",
        handle=curve,
    )


def graph_context(c: float, t0: float = 0.0) -> SolitonContext:
    return SolitonContext(WarpedSpace.catalog("product", 1), c, 1, t0)


def graph_sample(source: GraphGrid | TranslatorSolution, c: float | None = None, t0: float = 0.0, label: str = "") -> ImmersionSample:
    """Graph curve t = u(x) over the interior nodes of a 1-D Dirichlet grid, normal (1, -u')/W."""

    if isinstance(source, TranslatorSolution):
        grid, c = source.grid, source.c if c is None else c
    else:
        grid = source
    if c is None:
        raise ConfigError("missing_soliton_constant", "graph samples need the soliton constant c")
    if grid.d != 1 or grid.topology != "dirichlet":
        raise ConfigError(
            "unsupported_graph_sample",
            "identity and stability samples are built from 1-D Dirichlet grids",
            d=grid.d,
            topology=grid.topology,
        )
    ctx = graph_context(c, t0)
    dx = grid.spacing
    u = grid.u
    face_slope = np.diff(u) / dx
    face_W = np.sqrt(1.0 + face_slope**2)
    flux = face_slope / face_W
    interior = slice(1, grid.n - 1)
    slope = (u[2:] - u[:-2]) / (2.0 * dx)
    W = np.sqrt(1.0 + slope**2)
    curvature = np.diff(flux) / dx
    x = grid.axis()[interior]
    arclength = np.concatenate([[0.0], np.cumsum(face_W[1:-1] * dx)])
    origin = int(np.argmin(np.abs(x - 0.5 * (grid.lo + grid.hi))))
    values = u[interior]
    return ImmersionSample(
        kind="graph",
        ctx=ctx,
        spacing=dx,
        metric=W,
        face_metric=face_W[1:-1],
        weight=np.ones(values.size),
        face_weight=np.ones(values.size - 1),
        poles=np.zeros(values.size, dtype=bool),
        t=values.copy(),
        eta=values - t0,
        eta_rate=slope / W,
        support=1.0 / W,
        theta_n=1.0 / W,
        k1=curvature,
        k2=np.zeros(values.size),
        orbit=np.ones(values.size),
        arclength=arclength - arclength[origin],
        origin=origin,
        label=label or f"graph[N={grid.n}]",
        handle=source,
    )
