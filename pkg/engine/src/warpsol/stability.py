from __future__ import annotations

"""The stability operator L_{cη} = Δ_{-cη} + |A|² + Ric(N,N) - c h' on 1-D samples.

Eigenpairs follow the convention Lφ = -λφ with λ ascending, so the count of
negative λ is the (discrete, rotationally symmetric) Morse index.
"""

import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import pandas as pd
from scipy import integrate, linalg, special

from .errors import ConfigError, NonConvergenceError
from .geometry import varkappa_values
from .samples import ImmersionSample


SELF_ADJOINT_TRIALS = 100
PARABOLICITY_MIN_SAMPLES = 16
DIVERGENCE_EXPONENT = -1.05


@dataclass(frozen=True)
class StabilityOperator:
    sample: ImmersionSample
    unknowns: np.ndarray
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    mass: np.ndarray
    potential: np.ndarray
    boundary: Literal["dirichlet", "none"]

    @property
    def size(self) -> int:
        return int(self.unknowns.size)

    def matrix(self) -> np.ndarray:
        """Dense L restricted to the unknowns (boundary values pinned to zero)."""

        stiffness = np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)
        return -stiffness / self.mass[:, None] + np.diag(self.potential[self.unknowns])

    def apply(self, values: np.ndarray) -> np.ndarray:
        """L on a vector over the unknowns."""

        values = np.asarray(values, dtype=float)
        stiffness = self.diagonal * values
        stiffness[:-1] += self.off_diagonal * values[1:]
        stiffness[1:] += self.off_diagonal * values[:-1]
        return -stiffness / self.mass + self.potential[self.unknowns] * values

    def to_dict(self) -> dict[str, Any]:
        return {"sample": self.sample.label, "unknowns": self.size, "boundary": self.boundary}


def _ambient_omega(m: int) -> float:
    """Area of the unit (m-1)-sphere, 2 for m = 1."""

    return 2.0 * math.pi ** (m / 2.0) / float(special.gamma(m / 2.0))


def _weight_exponent(sample: ImmersionSample) -> np.ndarray:
    exponent = sample.c * sample.eta
    return exponent - np.max(exponent)


def stability_potential(sample: ImmersionSample) -> np.ndarray:
    """|A|² + Ric(N,N) - c h'(π∘ψ)."""

    return sample.A2 + sample.ricci_normal() - sample.c * sample.h1()


def _face_stiffness(sample: ImmersionSample) -> np.ndarray:
    exponent = _weight_exponent(sample)
    face_exponent = 0.5 * (exponent[1:] + exponent[:-1])
    return sample.face_weight * np.exp(face_exponent) / (sample.face_metric * sample.spacing)


def _nodal_mass(sample: ImmersionSample) -> np.ndarray:
    return sample.measure() * np.exp(_weight_exponent(sample))


def assemble_L(sample: ImmersionSample) -> StabilityOperator:
    """Weighted divergence-form stencil over poles and interior samples; open ends are Dirichlet."""

    if sample.analytic:
        raise ConfigError("analytic_sample", "slice samples carry no grid to assemble the stability operator on")
    if len(sample) < 3:
        raise ConfigError("too_few_samples", f"need at least 3 samples, got {len(sample)}")
    fields = {"eta": sample.eta, "A2": sample.A2, "k1": sample.k1}
    missing = [name for name, values in fields.items() if not np.all(np.isfinite(values[sample.nodes()]))]
    if missing:
        raise ConfigError("missing_sample_fields", f"sample fields are not finite: {', '.join(missing)}", sample=sample.label)

    unknowns = np.flatnonzero(sample.nodes())
    faces = _face_stiffness(sample)
    mass = _nodal_mass(sample)
    # node i couples through faces i-1 and i; a face to a pinned boundary sample only loads the diagonal
    left = np.concatenate([[0.0], faces])
    right = np.concatenate([faces, [0.0]])
    diagonal = (left + right)[unknowns]
    off_diagonal = -faces[unknowns[:-1]]
    if np.any(np.diff(unknowns) != 1):
        raise ConfigError("non_contiguous_unknowns", "stability unknowns must be a contiguous run of samples")
    boundary: Literal["dirichlet", "none"] = "none" if unknowns.size == len(sample) else "dirichlet"
    return StabilityOperator(
        sample=sample,
        unknowns=unknowns,
        diagonal=diagonal,
        off_diagonal=off_diagonal,
        mass=mass[unknowns],
        potential=stability_potential(sample),
        boundary=boundary,
    )


def apply_L(op: StabilityOperator, values: np.ndarray) -> np.ndarray:
    """L_{cη} of a full-length sample field, using its actual boundary values; NaN off the unknowns."""

    sample = op.sample
    values = np.asarray(values, dtype=float)
    faces = _face_stiffness(sample)
    flux = faces * np.diff(values)
    divergence = np.zeros_like(values)
    divergence[:-1] += flux
    divergence[1:] -= flux
    out = np.full_like(values, np.nan)
    mass = _nodal_mass(sample)
    out[op.unknowns] = divergence[op.unknowns] / mass[op.unknowns] + op.potential[op.unknowns] * values[op.unknowns]
    return out


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    index: int
    unknowns: np.ndarray
    label: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample": self.label,
            "convention": "L phi = -lambda phi, lambda ascending",
            "eigenvalues": [float(value) for value in self.eigenvalues],
            "index": self.index,
            "index_is_lower_bound": True,
            "max_residual": float(np.max(self.residuals)) if self.residuals.size else 0.0,
        }

    def to_frame(self, arclength: np.ndarray) -> pd.DataFrame:
        columns: dict[str, np.ndarray] = {"s": np.asarray(arclength)[self.unknowns]}
        for index in range(self.eigenvectors.shape[1]):
            columns[f"phi_{index}"] = self.eigenvectors[:, index]
        return pd.DataFrame(columns)


def _symmetric_tridiagonal(op: StabilityOperator) -> tuple[np.ndarray, np.ndarray]:
    """M^{-1/2}(K - M V)M^{-1/2}; its eigenvalues are the λ of Lφ = -λφ."""

    root = np.sqrt(op.mass)
    diagonal = op.diagonal / op.mass - op.potential[op.unknowns]
    off_diagonal = op.off_diagonal / (root[:-1] * root[1:])
    return diagonal, off_diagonal


def eigen_lowest(op: StabilityOperator, k: int = 1) -> SpectrumReport:
    """k lowest eigenpairs, eigenvectors M-normalized with a positive first nonzero entry."""

    if k < 1:
        raise ConfigError("invalid_eigen_count", f"k must be >= 1, got {k}")
    k = min(k, op.size)
    diagonal, off_diagonal = _symmetric_tridiagonal(op)
    try:
        values, vectors = linalg.eigh_tridiagonal(
            diagonal,
            off_diagonal,
            select="i",
            select_range=(0, k - 1),
            lapack_driver="stebz",
        )
        spectrum = linalg.eigvalsh_tridiagonal(diagonal, off_diagonal)
    except linalg.LinAlgError as exc:
        raise NonConvergenceError(
            "eigen_stagnation",
            f"tridiagonal eigen-solver failed: {exc}",
            sample=op.sample.label,
            unknowns=op.size,
        ) from exc

    residuals = np.empty(k)
    phis = np.empty_like(vectors)
    for column in range(k):
        psi = vectors[:, column]
        applied = diagonal * psi
        applied[:-1] += off_diagonal * psi[1:]
        applied[1:] += off_diagonal * psi[:-1]
        residuals[column] = np.linalg.norm(applied - values[column] * psi) / np.linalg.norm(psi)
        phi = psi / np.sqrt(op.mass)
        pivot = phi[np.flatnonzero(np.abs(phi) > 1e-12 * np.max(np.abs(phi)))[0]]
        phis[:, column] = phi * math.copysign(1.0, pivot)
    return SpectrumReport(
        eigenvalues=values,
        eigenvectors=phis,
        residuals=residuals,
        index=int(np.count_nonzero(spectrum < 0.0)),
        unknowns=op.unknowns,
        label=op.sample.label,
    )


def self_adjointness(op: StabilityOperator, trials: int = SELF_ADJOINT_TRIALS, seed: int = 0) -> float:
    """max |⟨Lf,g⟩ - ⟨f,Lg⟩| / (|⟨Lf,g⟩| + |⟨f,Lg⟩|) in the e^{cη} inner product over random pairs."""

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = rng.standard_normal(op.size)
        g = rng.standard_normal(op.size)
        left = float(np.sum(op.mass * op.apply(f) * g))
        right = float(np.sum(op.mass * f * op.apply(g)))
        scale = abs(left) + abs(right)
        if scale > 0.0:
            worst = max(worst, abs(left - right) / scale)
    return worst


@dataclass(frozen=True)
class EigenCheck:
    sup: float
    l2: float
    spacing: float
    label: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"name": "eigen_check_H", "sample": self.label, "sup": self.sup, "l2": self.l2, "spacing": self.spacing}


def eigen_check_H(sample: ImmersionSample, op: StabilityOperator | None = None) -> EigenCheck:
    """L_{cη}H + (2c h' + m h''/h) H at the unknowns."""

    op = op or assemble_L(sample)
    H = sample.H
    coefficient = 2.0 * sample.c * sample.h1() + sample.m * sample.h2_over_h()
    residual = (apply_L(op, H) + coefficient * H)[op.unknowns]
    return EigenCheck(
        sup=float(np.max(np.abs(residual))),
        l2=float(np.sqrt(np.mean(residual**2))),
        spacing=sample.spacing,
        label=sample.label,
    )


@dataclass(frozen=True)
class WeightedVolume:
    """log vol_{cη}(∂B_r) and log vol_{cη}(B_r) on an increasing radius grid."""

    r: np.ndarray
    log_boundary: np.ndarray
    log_ball: np.ndarray

    @classmethod
    def from_log_density(cls, r: np.ndarray, log_boundary: np.ndarray) -> "WeightedVolume":
        r = np.asarray(r, dtype=float)
        log_boundary = np.asarray(log_boundary, dtype=float)
        if r.size < 2 or np.any(np.diff(r) <= 0.0):
            raise ConfigError("invalid_radius_grid", "radii must be strictly increasing with at least two entries")
        finite = np.isfinite(log_boundary)
        shift = float(np.max(log_boundary[finite])) if np.any(finite) else 0.0
        density = np.exp(np.where(finite, log_boundary - shift, -np.inf))
        ball = integrate.cumulative_trapezoid(density, r, initial=0.0)
        with np.errstate(divide="ignore"):
            log_ball = np.log(ball) + shift
        return cls(r, log_boundary, log_ball)

    @property
    def boundary(self) -> np.ndarray:
        return np.exp(self.log_boundary)

    @property
    def ball(self) -> np.ndarray:
        return np.exp(self.log_ball)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"r": self.r, "log_boundary": self.log_boundary, "log_ball": self.log_ball})


def _distance_branches(sample: ImmersionSample) -> list[tuple[np.ndarray, np.ndarray]]:
    """(distance from the origin, log boundary density) along each branch leaving the origin."""

    origin = sample.origin
    exponent = sample.c * sample.eta
    if sample.kind == "rotational":
        if origin != 0 or not sample.poles[0]:
            raise ConfigError("no_origin", "rotational samples need a pole at the start as origin", sample=sample.label)
        if sample.m == 1:
            return [(sample.arclength, math.log(2.0) + exponent)]
        with np.errstate(divide="ignore"):
            log_density = math.log(_ambient_omega(sample.m)) + (sample.m - 1) * np.log(sample.orbit) + exponent
        return [(sample.arclength, log_density)]
    if sample.kind == "graph":
        if origin is None:
            raise ConfigError("no_origin", "graph sample has no marked origin", sample=sample.label)
        s = sample.arclength
        right = (s[origin:] - s[origin], exponent[origin:])
        left = ((s[origin] - s[: origin + 1])[::-1], exponent[: origin + 1][::-1])
        return [left, right]
    raise ConfigError("no_origin", "slice samples carry no intrinsic distance", sample=sample.label)


def weighted_volume(sample: ImmersionSample, r_grid: np.ndarray) -> WeightedVolume:
    """vol_{cη}(∂B_r) = ∫_{∂B_r} e^{cη} and vol_{cη}(B_r) for intrinsic balls about the marked origin."""

    r_grid = np.asarray(r_grid, dtype=float)
    branches = _distance_branches(sample)
    reach = max(float(distance[-1]) for distance, _ in branches)
    if r_grid.size == 0 or r_grid[0] < 0.0 or r_grid[-1] > reach + 1e-12:
        raise ConfigError("radius_out_of_range", f"radii must lie in [0, {reach}]", sample=sample.label)
    terms = []
    for distance, log_density in branches:
        inside = r_grid <= distance[-1] + 1e-12
        values = np.full(r_grid.shape, -np.inf)
        values[inside] = np.interp(r_grid[inside], distance, log_density)
        terms.append(values)
    log_boundary = special.logsumexp(np.vstack(terms), axis=0) if len(terms) > 1 else terms[0]
    # balls integrate on the native grid, then interpolate
    native = np.unique(np.concatenate([distance for distance, _ in branches]))
    native_terms = []
    for distance, log_density in branches:
        values = np.full(native.shape, -np.inf)
        inside = native <= distance[-1] + 1e-12
        values[inside] = np.interp(native[inside], distance, log_density)
        native_terms.append(values)
    native_log = special.logsumexp(np.vstack(native_terms), axis=0) if len(native_terms) > 1 else native_terms[0]
    native_volume = WeightedVolume.from_log_density(native, native_log)
    log_ball = np.interp(r_grid, native, native_volume.log_ball)
    return WeightedVolume(r_grid, log_boundary, log_ball)


@dataclass(frozen=True)
class ParabolicityVerdict:
    r_max: float
    tail_exponent: float
    divergent: bool
    cutoffs: np.ndarray
    log_partial_integrals: np.ndarray

    @property
    def verdict(self) -> str:
        return "divergent (parabolic indicator)" if self.divergent else "convergent (inconclusive)"

    def to_dict(self) -> dict[str, Any]:
        return {
            "r_max": self.r_max,
            "tail_exponent": self.tail_exponent,
            "verdict": self.verdict,
            "heuristic": "finite-cutoff integral with fitted tail exponent; not a proof",
            "cutoffs": [float(value) for value in self.cutoffs],
            "log_partial_integrals": [float(value) for value in self.log_partial_integrals],
        }


def parabolicity_volume_test(volume: WeightedVolume, r_max: float | None = None) -> ParabolicityVerdict:
    """∫^{r_max} dr / vol(∂B_r): partial integrals at doubling cutoffs, tail exponent of the integrand.

    The integrand is fitted as r^q over the outer half of the radii; q >= -1
    (up to a small margin) is read as divergence.
    """

    r_max = float(volume.r[-1]) if r_max is None else float(r_max)
    mask = (volume.r > 0.0) & (volume.r <= r_max) & np.isfinite(volume.log_boundary)
    r = volume.r[mask]
    log_integrand = -volume.log_boundary[mask]
    if r.size < PARABOLICITY_MIN_SAMPLES:
        raise ConfigError(
            "too_few_samples",
            f"the volume test needs at least {PARABOLICITY_MIN_SAMPLES} radii in (0, {r_max}], got {r.size}",
        )
    tail = r >= 0.5 * r[-1]
    if np.count_nonzero(tail) < 2:
        tail = np.arange(r.size) >= r.size // 2
    slope, _ = np.polyfit(np.log(r[tail]), log_integrand[tail], 1)

    pieces = np.log(0.5 * np.diff(r)) + np.logaddexp(log_integrand[1:], log_integrand[:-1])
    partial = np.concatenate([[-np.inf], np.logaddexp.accumulate(pieces)])
    cutoffs = []
    cutoff = r[-1]
    while cutoff > r[0] and len(cutoffs) < 8:
        cutoffs.append(cutoff)
        cutoff /= 2.0
    cutoffs = np.array(sorted(cutoffs))
    log_partials = np.interp(cutoffs, r, partial)
    return ParabolicityVerdict(
        r_max=r_max,
        tail_exponent=float(slope),
        divergent=bool(slope >= DIVERGENCE_EXPONENT),
        cutoffs=cutoffs,
        log_partial_integrals=log_partials,
    )


def lambda_coefficient(sample: ImmersionSample) -> dict[str, float]:
    """Λ = (1/(m-1)) sup(|A|² + c h' - (m-1) ϰ) over samples with π∘ψ in I, and Λ₊."""

    m = sample.m
    if m < 2:
        raise ConfigError("invalid_dimension", "Λ is defined for m >= 2")
    mask = sample.nodes() & sample.inside()
    if not np.any(mask):
        raise ConfigError("empty_sample", "no sample point lies inside the interval", sample=sample.label)
    t = sample.t[mask]
    values = sample.A2[mask] + sample.c * sample.h1()[mask] - (m - 1) * varkappa_values(sample.ctx.space, t)
    value = float(np.max(values)) / (m - 1)
    return {"Lambda": value, "Lambda_plus": max(value, 0.0)}


def weighted_area(sample: ImmersionSample) -> float:
    """∫ e^{cη} dM over the sample (orbit spheres included for rotational samples)."""

    if sample.analytic:
        raise ConfigError("analytic_sample", "slice samples carry no area")
    mass = sample.measure() * np.exp(sample.c * sample.eta)
    if sample.kind == "rotational":
        return float(np.sum(mass)) * _ambient_omega(sample.m)
    return float(np.sum(mass))
