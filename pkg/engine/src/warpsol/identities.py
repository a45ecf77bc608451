from __future__ import annotations

"""Residuals of the elliptic soliton identities and the height / Barta estimates."""

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, UnsupportedProfileError
from .geometry import SolitonContext, chi_catalog, eta_hat, soliton_function, zeta
from .numerics import grid_minimum, observed_order
from .samples import ImmersionSample


ANALYTIC_TOLERANCE = 1e-10
HEIGHT_TOLERANCE = 1e-6
GRADIENT_TOLERANCE = 1e-8
QUOTIENT_MIN_H = 1e-6
HEIGHT_PROFILES = ("euclidean_cone", "horospherical", "geodesic_spherical")


@dataclass(frozen=True)
class IdentityReport:
    name: str
    sup: float
    l2: float
    spacing: float
    samples: int
    label: str = ""
    order: float | None = None

    def with_order(self, order: float | None) -> "IdentityReport":
        return IdentityReport(self.name, self.sup, self.l2, self.spacing, self.samples, self.label, order)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "name": self.name,
            "sample": self.label,
            "sup": self.sup,
            "l2": self.l2,
            "spacing": self.spacing,
            "samples": self.samples,
        }
        if self.order is not None:
            payload["order"] = self.order
        return payload


def _report(name: str, sample: ImmersionSample, residual: np.ndarray) -> IdentityReport:
    values = np.asarray(residual, dtype=float)[sample.nodes()]
    sup = float(np.max(np.abs(values)))
    l2 = float(np.sqrt(np.mean(values**2)))
    return IdentityReport(name, sup, l2, sample.spacing, int(values.size), sample.label)


def _kappa_bar(sample: ImmersionSample, kappa_bar: float | None) -> float:
    if kappa_bar is not None:
        return float(kappa_bar)
    value = sample.space_form_curvature()
    if value is None:
        raise UnsupportedProfileError(
            "not_a_space_form",
            f"profile {sample.ctx.profile.name!r} with κ={sample.ctx.space.fiber_curvature} is not a space form",
            hint="this identity holds in constant-curvature targets only",
        )
    return value


def _grad_A_squared(sample: ImmersionSample) -> np.ndarray:
    # Codazzi puts the orbit derivative in three slots of ∇A for each orbit direction
    return sample.d_ds(sample.k1) ** 2 + 3 * (sample.m - 1) * sample.d_ds(sample.k2) ** 2


def check_delta_eta(sample: ImmersionSample) -> IdentityReport:
    """Δη = m h' + |H|²/c."""

    residual = sample.laplacian(sample.eta) - sample.m * sample.h1() - sample.H**2 / sample.c
    return _report("delta_eta", sample, residual)


def check_delta_eta_weighted(sample: ImmersionSample) -> IdentityReport:
    """Δ_{-cη} η = m h' + c|X|²."""

    residual = sample.drift_laplacian(sample.eta) - sample.m * sample.h1() - sample.c * sample.X2
    return _report("delta_eta_weighted", sample, residual)


def check_grad_H(sample: ImmersionSample) -> IdentityReport:
    """∇H = -c A(∇η)."""

    residual = sample.d_ds(sample.H) + sample.c * sample.k1 * sample.eta_rate
    return _report("grad_H", sample, residual)


@dataclass(frozen=True)
class ConservedQuantity:
    values: np.ndarray
    drift: float
    label: str = ""

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def to_dict(self) -> dict[str, Any]:
        return {"name": "conserved_quantity", "sample": self.label, "drift": self.drift, "mean": self.mean}


def conserved_quantity(sample: ImmersionSample) -> ConservedQuantity:
    """|H|² + c²|∇η|² - c² χ(η), constant along solitons of catalog targets."""

    chi = chi_catalog(sample.ctx)
    c = sample.c
    values = sample.H**2 + c**2 * sample.eta_rate**2 - c**2 * np.asarray(chi(sample.eta), dtype=float)
    values = values[sample.nodes()]
    return ConservedQuantity(values, float(values.max() - values.min()), sample.label)


def simons_residual(sample: ImmersionSample, kappa_bar: float | None = None) -> IdentityReport:
    """½Δ_{-cη}|A|² = |∇A|² - (c h' + |A|²)|A|² + (m|A|² - H²) κ̄."""

    kappa = _kappa_bar(sample, kappa_bar)
    A2, H = sample.A2, sample.H
    rhs = _grad_A_squared(sample) - (sample.c * sample.h1() + A2) * A2 + (sample.m * A2 - H**2) * kappa
    return _report("simons", sample, 0.5 * sample.drift_laplacian(A2) - rhs)


def delta_H_residual(sample: ImmersionSample) -> IdentityReport:
    """½Δ_{-cη}H² = -(c h' + |A|²)H² + |∇H|² - H²(Ric(N,N) + m h''/h)."""

    if sample.m != sample.ctx.space.fiber_dim:
        raise ConfigError(
            "not_codimension_one",
            f"the H² identity needs a hypersurface (m = n), got m={sample.m}, n={sample.ctx.space.fiber_dim}",
        )
    H2 = sample.H**2
    ambient = sample.ricci_normal() + sample.m * sample.h2_over_h()
    rhs = -(sample.c * sample.h1() + sample.A2) * H2 + sample.d_ds(sample.H) ** 2 - H2 * ambient
    return _report("delta_H", sample, 0.5 * sample.drift_laplacian(H2) - rhs)


def umbilicity_gap(sample: ImmersionSample) -> float:
    """sup (|A|² - H²/m)."""

    gap = (sample.A2 - sample.H**2 / sample.m)[sample.nodes()]
    return float(np.max(gap))


def umbilicity_residual(sample: ImmersionSample, kappa_bar: float | None = None) -> IdentityReport:
    """½Δ_{-cη}u = (m κ̄ - c h' - |A|²) u + |∇A|² - |∇H|²/m for u = |A|² - H²/m."""

    kappa = _kappa_bar(sample, kappa_bar)
    u = sample.A2 - sample.H**2 / sample.m
    rhs = (sample.m * kappa - sample.c * sample.h1() - sample.A2) * u + _grad_A_squared(sample) - sample.d_ds(sample.H) ** 2 / sample.m
    return _report("umbilicity", sample, 0.5 * sample.drift_laplacian(u) - rhs)


def umbilicity_criterion(sample: ImmersionSample, kappa_bar: float | None = None) -> dict[str, Any]:
    """sup(c h' + |A|²) against m κ̄; at or below it the soliton is forced to be totally umbilic."""

    kappa = _kappa_bar(sample, kappa_bar)
    potential = (sample.c * sample.h1() + sample.A2)[sample.nodes()]
    threshold = sample.m * kappa
    sup_potential = float(np.max(potential))
    return {
        "name": "umbilicity_criterion",
        "sample": sample.label,
        "sup_potential": sup_potential,
        "threshold": threshold,
        "criterion_holds": sup_potential <= threshold + ANALYTIC_TOLERANCE,
        "umbilicity_gap": umbilicity_gap(sample),
    }


def quotient_residual(sample: ImmersionSample, kappa_bar: float | None = None, min_H: float = QUOTIENT_MIN_H) -> IdentityReport:
    """Δ_{-cη} f + ⟨∇log H², ∇f⟩ = (2/H⁴)|H∇A - ∇H ⊗ A|² + 2κ̄(m f - 1) for f = |A|²/H²."""

    kappa = _kappa_bar(sample, kappa_bar)
    H = sample.H
    nodes = sample.nodes()
    if np.any(np.abs(H[nodes]) < min_H):
        raise ConfigError(
            "vanishing_mean_curvature",
            f"the quotient identity needs |H| >= {min_H} on the sample",
            min_abs_H=float(np.min(np.abs(H[nodes]))),
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        f = sample.A2 / H**2
        log_H2 = np.log(H**2)
    dH, dk1, dk2 = sample.d_ds(H), sample.d_ds(sample.k1), sample.d_ds(sample.k2)
    m = sample.m
    tensor = (dH * sample.k1 - H * dk1) ** 2 + (m - 1) * (dH * sample.k2 - H * dk2) ** 2 + 2 * (m - 1) * H**2 * dk2**2
    lhs = sample.drift_laplacian(f) + sample.d_ds(log_H2) * sample.d_ds(f)
    rhs = 2.0 * tensor / H**4 + 2.0 * kappa * (m * f - 1.0)
    return _report("quotient", sample, lhs - rhs)


def gradient_consistency(sample: ImmersionSample) -> dict[str, Any]:
    """min(1 - |H|²/(c²h²)) and max(|∇η| - h) over samples off singular orbits."""

    h = np.asarray(sample.ctx.profile.h(sample.t), dtype=float)
    mask = sample.nodes() & (h > 0.0)
    defect = 1.0 - sample.H[mask] ** 2 / (sample.c**2 * h[mask] ** 2)
    excess = np.abs(sample.eta_rate[mask]) - h[mask]
    min_defect = float(np.min(defect))
    max_excess = float(np.max(excess))
    return {
        "name": "gradient_consistency",
        "sample": sample.label,
        "min_tangential_defect": min_defect,
        "max_gradient_excess": max_excess,
        "passed": min_defect >= -GRADIENT_TOLERANCE and max_excess <= GRADIENT_TOLERANCE,
    }


@dataclass(frozen=True)
class HeightEstimate:
    profile: str
    t_lower: float
    t_upper: float
    height_bound: float
    height_slack: float
    inf_H2: float
    sup_H2: float
    lower_mean_curvature_slack: float
    upper_mean_curvature_slack: float
    label: str = ""

    @property
    def passed(self) -> bool:
        return min(self.height_slack, self.lower_mean_curvature_slack, self.upper_mean_curvature_slack) >= -HEIGHT_TOLERANCE

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": "height_estimate",
            "sample": self.label,
            "profile": self.profile,
            "t_lower": self.t_lower,
            "t_upper": self.t_upper,
            "height_bound": self.height_bound,
            "height_slack": self.height_slack,
            "inf_H2": self.inf_H2,
            "sup_H2": self.sup_H2,
            "lower_mean_curvature_slack": self.lower_mean_curvature_slack,
            "upper_mean_curvature_slack": self.upper_mean_curvature_slack,
            "passed": self.passed,
        }


def height_bound(name: str, m: int, c: float) -> float:
    """Lower bound for sup(π∘ψ) of a shrinking soliton (c < 0) in the catalog targets."""

    if name == "euclidean_cone":
        return math.sqrt(-m / c)
    if name == "horospherical":
        return math.log(-m / c)
    if name == "geodesic_spherical":
        return math.acosh(-(m + math.sqrt(m * m + 4.0 * c * c)) / (2.0 * c))
    raise ConfigError("no_height_bound", f"no height estimate is implemented for profile {name!r}")


def height_estimate_check(sample: ImmersionSample) -> HeightEstimate:
    """t* against its bound, and inf|H|² <= -m c h'(t_*) <= ... <= sup|H|² with t^*.

    Both mean-curvature estimates are stated for c < 0:
    inf|H|² <= -m c h'(t_*) and sup|H|² >= -m c h'(t^*).
    """

    ctx = sample.ctx
    name = ctx.profile.name
    if ctx.c >= 0.0:
        raise ConfigError("height_estimate_sign", f"height estimates are stated for c < 0, got c={ctx.c}")
    if name not in HEIGHT_PROFILES:
        raise ConfigError(
            "no_height_bound",
            f"no height estimate is implemented for profile {name!r}",
            hint=f"supported profiles: {', '.join(HEIGHT_PROFILES)}",
        )
    if not sample.complete:
        raise ConfigError(
            "incomplete_sample",
            "height estimates need a complete sample (a slice, a closed profile or an axis-to-axis shot)",
            sample=sample.label,
        )
    nodes = sample.nodes()
    t = sample.t[nodes]
    H2 = sample.H[nodes] ** 2
    t_lower, t_upper = float(np.min(t)), float(np.max(t))
    profile = ctx.profile
    bound = height_bound(name, ctx.m, ctx.c)
    lower_rhs = -ctx.m * ctx.c * float(profile.h1(t_lower))
    upper_rhs = -ctx.m * ctx.c * float(profile.h1(t_upper))
    return HeightEstimate(
        profile=name,
        t_lower=t_lower,
        t_upper=t_upper,
        height_bound=bound,
        height_slack=t_upper - bound,
        inf_H2=float(np.min(H2)),
        sup_H2=float(np.max(H2)),
        lower_mean_curvature_slack=lower_rhs - float(np.min(H2)),
        upper_mean_curvature_slack=float(np.max(H2)) - upper_rhs,
        label=sample.label,
    )


@dataclass(frozen=True)
class SliceGeometry:
    t_bar: float
    umbilic_coefficient: float
    dt_component: float
    fiber_component: float | None
    zeta: float
    soliton: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_bar": self.t_bar,
            "umbilic_coefficient": self.umbilic_coefficient,
            "H_dt_component": self.dt_component,
            "H_fiber_component": self.fiber_component,
            "zeta": self.zeta,
            "soliton": self.soliton,
        }


def slice_geometry(ctx: SolitonContext, t_bar: float, minimal: bool) -> SliceGeometry:
    """II = II_P - (h'/h)⟨·,·⟩∂t on {t̄} x P, so H has ∂t-component -m h'/h.

    The fiber component vanishes exactly when the submanifold is minimal in
    the slice, and then the slice piece is a soliton iff ζ(t̄) = 0.
    """

    profile = ctx.profile
    h, h1 = profile.value(t_bar), profile.first(t_bar)
    value = soliton_function(ctx, t_bar)
    return SliceGeometry(
        t_bar=float(t_bar),
        umbilic_coefficient=-h1 / h,
        dt_component=-ctx.m * h1 / h,
        fiber_component=0.0 if minimal else None,
        zeta=value,
        soliton=bool(minimal and abs(value) <= ANALYTIC_TOLERANCE),
    )


@dataclass(frozen=True)
class BartaBound:
    a: float
    b: float
    alpha: float
    zeta_min: float
    zeta_argmin: float
    eta_span: float
    bound: float
    b_threshold: float | None

    @property
    def consistent(self) -> bool:
        return self.zeta_min <= self.bound

    @property
    def verdict(self) -> str:
        return "consistent" if self.consistent else "violated (hypotheses cannot all hold)"

    def to_dict(self) -> dict[str, Any]:
        return {
            "a": self.a,
            "b": self.b,
            "alpha": self.alpha,
            "zeta_min": self.zeta_min,
            "zeta_argmin": self.zeta_argmin,
            "eta_span": self.eta_span,
            "bound": self.bound,
            "verdict": self.verdict,
            "b_threshold": self.b_threshold,
        }


def barta_lambda1_bound(ctx: SolitonContext, a: float, b: float, alpha: float) -> BartaBound:
    """inf_{[a,b]} ζ against (α²/4)(η̂(b) - η̂(a)), with the cone threshold for b."""

    if not a < b:
        raise ConfigError("empty_bracket", f"[a, b] = [{a}, {b}] is empty")
    if alpha < 0.0:
        raise ConfigError("invalid_growth_rate", f"α must be >= 0, got {alpha}")
    profile = ctx.profile
    profile.require(a, "a")
    profile.require(b, "b")
    argmin, zeta_min = grid_minimum(lambda t: zeta(profile, ctx.m, ctx.c, t), a, b)
    span = eta_hat(ctx, b) - eta_hat(ctx, a)
    threshold = None
    denominator = alpha**2 - 8.0 * ctx.c
    if profile.name == "euclidean_cone" and denominator > 0.0:
        threshold = math.sqrt((8.0 * ctx.m + alpha**2 * a**2) / denominator)
    return BartaBound(float(a), float(b), float(alpha), zeta_min, argmin, span, alpha**2 / 4.0 * span, threshold)


def refinement_study(check: Callable[[ImmersionSample], IdentityReport], samples: list[ImmersionSample]) -> IdentityReport:
    """Run `check` on samples of decreasing spacing; return the finest report with the observed order."""

    if len(samples) < 2:
        raise ConfigError("too_few_resolutions", "a refinement study needs at least two samples")
    reports = [check(sample) for sample in samples]
    order = observed_order([report.sup for report in reports], [report.spacing for report in reports])
    finest = min(reports, key=lambda report: report.spacing)
    return finest.with_order(order)
