from __future__ import annotations

"""The `verify` suites: named checks with declared bars, run over a thread pool."""

import concurrent.futures
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from .errors import WarpsolError
from .flows import FlowSpec, closed_form_deviation, closed_form_flow, integrate_flow
from .geometry import SolitonContext, WarpedSpace, soliton_leaves
from .graphs import GraphGrid, grid_order, grim_reaper_values, self_similarity_check, shared_nodes, solve_translator
from .identities import (
    barta_lambda1_bound,
    check_delta_eta,
    check_delta_eta_weighted,
    check_grad_H,
    conserved_quantity,
    delta_H_residual,
    height_estimate_check,
    refinement_study as identity_refinement,
    simons_residual,
)
from .numerics import observed_order
from .rotational import ShootingConfig, exact_cylinder, exact_plane, exact_sphere, refinement_study, shoot, soliton_residual
from .samples import ImmersionSample, graph_sample, rotational_sample, slice_sample
from .stability import (
    WeightedVolume,
    assemble_L,
    eigen_check_H,
    eigen_lowest,
    parabolicity_volume_test,
    self_adjointness,
)


EXACT_BAR = 1e-10
LEAF_BAR = 1e-12
FLOW_BAR = 1e-8
ORDER_BAR = 1.9
SHOOT_ORDER_BAR = 3.5
ROUND_OFF_FLOOR = 1e-10
SHOT_SPHERE = ShootingConfig(c=-1.0, m=2, x0=math.sqrt(2.0))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float | None
    bar: float | None
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "value": self.value, "bar": self.bar, "detail": self.detail}


def _below(name: str, value: float, bar: float, **detail: Any) -> CheckResult:
    return CheckResult(name, bool(value <= bar), float(value), bar, detail)


def _converges(name: str, order: float | None, residual: float, bar: float, **detail: Any) -> CheckResult:
    passed = residual <= ROUND_OFF_FLOOR or (order is not None and order >= bar)
    return CheckResult(name, bool(passed), order, bar, {"finest_residual": residual, **detail})


LEAF_WITNESSES: dict[str, tuple[int, float, float]] = {
    "euclidean_cone": (2, -1.0, math.sqrt(2.0)),
    "horospherical": (3, -3.0, 0.0),
    "geodesic_spherical": (2, -1.0, math.acosh(1.0 + math.sqrt(2.0))),
}

FLOW_WINDOW_INSET = 1e-3
FLOW_CASES: dict[str, tuple[float, float, float]] = {
    # (t_init, tau_lo, tau_hi when the closed-form window is unbounded above)
    "euclidean_cone": (2.0, -1.0, 1.0),
    "horospherical": (0.0, -1.0, 1.0),
    "geodesic_spherical": (1.0, -0.5, 1.0),
    "equidistant": (1.0, -1.0, 1.0),
    "spherical": (1.0, -1.0, 1.0),
}


def witness_context(name: str) -> SolitonContext:
    m, c, t_bar = LEAF_WITNESSES[name]
    space = WarpedSpace.catalog(name, m)
    lo = space.profile.interval_lo
    return SolitonContext(space, c, m, lo if math.isfinite(lo) else t_bar)


def _leaf_check(name: str) -> Callable[[], CheckResult]:
    def run() -> CheckResult:
        ctx = witness_context(name)
        expected = LEAF_WITNESSES[name][2]
        lo = max(ctx.profile.interval_lo, expected - 1.0) + 1e-3
        roots = soliton_leaves(ctx, lo, expected + 5.0)
        nearest = min(roots, key=lambda root: abs(root.t - expected))
        error = abs(nearest.t - expected)
        return CheckResult(
            f"leaves.{name}",
            bool(abs(nearest.residual) <= LEAF_BAR and error <= 1e-9),
            abs(nearest.residual),
            LEAF_BAR,
            {"t_bar": nearest.t, "expected": expected},
        )

    return run


def _flow_check(name: str) -> Callable[[], CheckResult]:
    def run() -> CheckResult:
        t_init, tau_lo, unbounded_hi = FLOW_CASES[name]
        n = 2
        space = WarpedSpace.catalog(name, n)
        exact = closed_form_flow(name, n, t_init)
        tau_hi = exact.tau_hi - FLOW_WINDOW_INSET if math.isfinite(exact.tau_hi) else unbounded_hi
        lo = space.profile.interval_lo
        ctx = SolitonContext(space, -1.0, n, lo if math.isfinite(lo) else 0.0)
        trajectory = integrate_flow(FlowSpec(ctx, t_init, tau_lo, tau_hi))
        return _below(f"flow.{name}", closed_form_deviation(trajectory, exact), FLOW_BAR, window=[tau_lo, tau_hi])

    return run


def exact_samples() -> dict[str, ImmersionSample]:
    ctx = witness_context("euclidean_cone")
    return {
        "slice": slice_sample(ctx, math.sqrt(2.0)),
        "sphere": rotational_sample(exact_sphere(2, -1.0), label="sphere"),
        "cylinder": rotational_sample(exact_cylinder(2, -1.0), label="cylinder"),
        "plane": rotational_sample(exact_plane(), label="plane"),
    }


IDENTITY_CHECKS = {
    "delta_eta": lambda sample: check_delta_eta(sample).sup,
    "delta_eta_weighted": lambda sample: check_delta_eta_weighted(sample).sup,
    "grad_H": lambda sample: check_grad_H(sample).sup,
    "conserved_quantity": lambda sample: conserved_quantity(sample).drift,
    "simons": lambda sample: simons_residual(sample).sup,
    "delta_H": lambda sample: delta_H_residual(sample).sup,
}


def _identity_check(identity: str, sample_name: str) -> Callable[[], CheckResult]:
    def run() -> CheckResult:
        sample = exact_samples()[sample_name]
        return _below(f"identity.{identity}.{sample_name}", IDENTITY_CHECKS[identity](sample), EXACT_BAR)

    return run


def _rotational_exact() -> CheckResult:
    worst = max(
        soliton_residual(curve).sup for curve in (exact_sphere(2, -1.0), exact_cylinder(2, -1.0), exact_plane())
    )
    return _below("rotational.exact_residual", worst, 1e-12)


def _height_check(name: str) -> Callable[[], CheckResult]:
    def run() -> CheckResult:
        ctx = witness_context(name)
        estimate = height_estimate_check(slice_sample(ctx, LEAF_WITNESSES[name][2]))
        slack = max(
            abs(estimate.height_slack),
            abs(estimate.lower_mean_curvature_slack),
            abs(estimate.upper_mean_curvature_slack),
        )
        return _below(f"height.{name}", slack, 1e-8, estimate=estimate.to_dict())

    return run


def _eigen_exact() -> CheckResult:
    worst = max(
        eigen_check_H(rotational_sample(curve)).sup for curve in (exact_sphere(2, -1.0), exact_cylinder(2, -1.0))
    )
    return _below("stability.eigen_check_H.exact", worst, EXACT_BAR)


def _sphere_spectrum() -> CheckResult:
    sample = rotational_sample(exact_sphere(2, -1.0), label="sphere")
    op = assemble_L(sample)
    report = eigen_lowest(op, 1)
    phi = report.eigenvectors[:, 0]
    flatness = float(np.ptp(phi) / np.max(np.abs(phi)))
    error = abs(float(report.eigenvalues[0]) - 2.0 * sample.c)
    return CheckResult(
        "stability.sphere_lowest",
        bool(error <= 1e-8 and flatness <= 1e-8),
        error,
        1e-8,
        {"lambda": float(report.eigenvalues[0]), "index": report.index, "self_adjointness": self_adjointness(op)},
    )


def parabolicity_cases(r_max: float, samples: int = 400) -> dict[str, WeightedVolume]:
    r = np.linspace(r_max / samples, r_max, samples)
    return {
        "shrinker_plane": WeightedVolume.from_log_density(r, np.log(2.0 * math.pi * r) - r**2 / 2.0),
        "euclidean_plane": WeightedVolume.from_log_density(r, np.log(2.0 * math.pi * r)),
        "euclidean_space": WeightedVolume.from_log_density(r, np.log(4.0 * math.pi * r**2)),
    }


PARABOLICITY_EXPECTED = {"shrinker_plane": True, "euclidean_plane": True, "euclidean_space": False}


def _parabolicity() -> CheckResult:
    verdicts: dict[str, list[bool]] = {}
    for r_max in (20.0, 40.0):
        for name, volume in parabolicity_cases(r_max).items():
            verdicts.setdefault(name, []).append(parabolicity_volume_test(volume).divergent)
    passed = all(all(value == PARABOLICITY_EXPECTED[name] for value in values) for name, values in verdicts.items())
    return CheckResult("stability.parabolicity", passed, None, None, {"divergent": verdicts})


def _barta() -> CheckResult:
    ctx = witness_context("euclidean_cone")
    bound = barta_lambda1_bound(ctx, 0.5, 3.0, 1.0)
    error = abs((bound.b_threshold or math.nan) - math.sqrt(16.25 / 9.0))
    return _below("identity.barta_threshold", error, EXACT_BAR, bound=bound.to_dict())


def exact_suite() -> dict[str, Callable[[], CheckResult]]:
    checks: dict[str, Callable[[], CheckResult]] = {}
    for name in LEAF_WITNESSES:
        checks[f"leaves.{name}"] = _leaf_check(name)
        checks[f"height.{name}"] = _height_check(name)
    for name in FLOW_CASES:
        checks[f"flow.{name}"] = _flow_check(name)
    for identity in IDENTITY_CHECKS:
        for sample_name in ("slice", "sphere", "cylinder", "plane"):
            checks[f"identity.{identity}.{sample_name}"] = _identity_check(identity, sample_name)
    checks["rotational.exact_residual"] = _rotational_exact
    checks["stability.eigen_check_H.exact"] = _eigen_exact
    checks["stability.sphere_lowest"] = _sphere_spectrum
    checks["stability.parabolicity"] = _parabolicity
    checks["identity.barta_threshold"] = _barta
    return checks


def _shot_sphere_order() -> CheckResult:
    study = refinement_study(SHOT_SPHERE, [2e-3, 1e-3, 5e-4])
    return _converges("rotational.shot_sphere_order", study.order, study.residuals[-1], SHOOT_ORDER_BAR, study=study.to_dict())


def _shot_delta_eta_order() -> CheckResult:
    samples = [rotational_sample(shoot(replace(SHOT_SPHERE, step=step))) for step in (1e-3, 5e-4)]
    report = identity_refinement(check_delta_eta, samples)
    return _converges("identity.delta_eta.shot_sphere_order", report.order, report.sup, ORDER_BAR)


def _grim_reaper_solutions(sizes: tuple[int, ...]) -> list[Any]:
    return [solve_translator(GraphGrid.grim_reaper(n), 1.0) for n in sizes]


def _grim_reaper() -> CheckResult:
    coarse, fine = _grim_reaper_solutions((800, 1599))
    errors = []
    for solution in (coarse, fine):
        errors.append(float(np.max(np.abs(solution.grid.u - grim_reaper_values(solution.grid)))))
    shared = shared_nodes(coarse.grid, fine.grid)
    order = grid_order(errors, [coarse.grid, fine.grid])
    passed = (
        coarse.newton_iters <= 12
        and max(coarse.residual_sup, fine.residual_sup) <= 1e-10
        and order is not None
        and order >= ORDER_BAR
    )
    return CheckResult(
        "graph.grim_reaper",
        bool(passed),
        order,
        ORDER_BAR,
        {"errors": errors, "newton_iters": [coarse.newton_iters, fine.newton_iters], "shared_nodes": int(shared.size)},
    )


def _self_similarity() -> CheckResult:
    (solution,) = _grim_reaper_solutions((400,))
    report = self_similarity_check(solution, 0.1, 1e-5)
    return _below("graph.self_similarity", report.deviation, 1e-4, report=report.to_dict())


def _grim_reaper_eigen_order() -> CheckResult:
    samples = [graph_sample(solution) for solution in _grim_reaper_solutions((200, 400))]
    checks = [eigen_check_H(sample) for sample in samples]
    order = observed_order([check.sup for check in checks], [check.spacing for check in checks])
    return _converges("stability.eigen_check_H.grim_reaper_order", order, checks[-1].sup, ORDER_BAR)


def _dirichlet_monotonicity() -> CheckResult:
    (solution,) = _grim_reaper_solutions((400,))
    sample = graph_sample(solution)
    center = len(sample) // 2
    values = []
    for half in (60, 120, center - 1):
        window = sample.restrict(center - half, center + half + 1)
        values.append(float(eigen_lowest(assemble_L(window), 1).eigenvalues[0]))
    passed = all(inner >= outer - 1e-12 for inner, outer in zip(values, values[1:]))
    return CheckResult("stability.dirichlet_monotonicity", bool(passed), None, None, {"lambda_1": values})


def discrete_suite() -> dict[str, Callable[[], CheckResult]]:
    return {
        "rotational.shot_sphere_order": _shot_sphere_order,
        "identity.delta_eta.shot_sphere_order": _shot_delta_eta_order,
        "graph.grim_reaper": _grim_reaper,
        "graph.self_similarity": _self_similarity,
        "stability.eigen_check_H.grim_reaper_order": _grim_reaper_eigen_order,
        "stability.dirichlet_monotonicity": _dirichlet_monotonicity,
    }


SUITES = {"exact": exact_suite, "discrete": discrete_suite}


def _guarded(name: str, check: Callable[[], CheckResult]) -> CheckResult:
    try:
        return check()
    except WarpsolError as exc:
        return CheckResult(name, False, None, None, {"error": exc.to_dict()})


def run_suite(suite: str, workers: int = 4) -> list[CheckResult]:
    """Run every check of `suite`; results come back sorted by check name."""

    checks = SUITES[suite]()
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {name: pool.submit(_guarded, name, check) for name, check in checks.items()}
        results = [future.result() for future in futures.values()]
    return sorted(results, key=lambda result: result.name)
