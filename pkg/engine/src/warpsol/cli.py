from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable
from uuid import uuid4

import pandas as pd

from .config import RunConfig, build_config
from .errors import NonConvergenceError, WarpsolError
from .flows import FlowSpec, closed_form_deviation, closed_form_flow, integrate_flow, leaf_consistency
from .geometry import soliton_leaves, space_form_check
from .graphs import GraphGrid, grim_reaper_values, self_similarity_check, solve_translator, translator_residual
from .journal import BuildInfo, RunJournal
from .paths import ensure_output_dirs, output_root
from .reports import write_csv, write_report
from .rotational import ShootingConfig, curve_frame, exact_cylinder, exact_plane, exact_sphere, shoot, soliton_residual
from .samples import ImmersionSample, graph_sample, rotational_sample
from .stability import assemble_L, eigen_check_H, eigen_lowest, lambda_coefficient, self_adjointness, weighted_area
from .suite import run_suite


EXIT_OK = 0
EXIT_CHECK_FAILED = 1
SPECTRUM_RESIDUAL_BAR = 1e-8
SELF_ADJOINT_BAR = 1e-10
CURVE_INVARIANT_BAR = 1e-8

# (argparse dest, config section, config key)
OVERRIDES: tuple[tuple[str, str, str], ...] = (
    ("profile", "profile", "name"),
    ("interval", "profile", "interval"),
    ("fiber_curvature", "profile", "fiber_curvature"),
    ("h", "profile", "h"),
    ("h1", "profile", "h1"),
    ("h2", "profile", "h2"),
    ("m", "context", "m"),
    ("n", "context", "n"),
    ("c", "context", "c"),
    ("t0", "context", "t0"),
    ("bracket", "leaves", "bracket"),
    ("t_init", "flow", "t_init"),
    ("tau_lo", "flow", "tau_lo"),
    ("tau_hi", "flow", "tau_hi"),
    ("flow_step", "flow", "step"),
    ("launch", "shoot", "launch"),
    ("x0", "shoot", "x0"),
    ("r0", "shoot", "r0"),
    ("theta0", "shoot", "theta0"),
    ("shoot_step", "shoot", "step"),
    ("max_length", "shoot", "max_length"),
    ("axis_stop", "shoot", "axis_stop"),
    ("space_form", "shoot", "space_form"),
    ("d", "translate", "d"),
    ("N", "translate", "N"),
    ("domain", "translate", "domain"),
    ("lo", "translate", "lo"),
    ("hi", "translate", "hi"),
    ("tol", "translate", "tol"),
    ("max_iterations", "translate", "max_iterations"),
    ("horizon", "translate", "horizon"),
    ("dtau", "translate", "dtau"),
    ("suite", "verify", "suite"),
    ("workers", "verify", "workers"),
    ("sample", "spectrum", "sample"),
    ("k", "spectrum", "k"),
    ("samples", "spectrum", "samples"),
    ("spectrum_N", "spectrum", "N"),
    ("length", "spectrum", "length"),
)


@dataclass
class Outcome:
    """Result payload, CSV frames and the verification verdict of one command."""

    result: Any
    frames: dict[str, pd.DataFrame] = field(default_factory=dict)
    passed: bool = True
    failed: list[str] = field(default_factory=list)


def _run_leaves(config: RunConfig) -> Outcome:
    ctx = config.soliton_context()
    if config.leaves.bracket is not None:
        lo, hi = config.leaves.bracket
    else:
        grid = ctx.profile.sample_grid()
        lo, hi = float(grid[0]), float(grid[-1])
    roots = soliton_leaves(ctx, lo, hi)
    print(json.dumps([root.to_dict() for root in roots]))
    frame = pd.DataFrame([root.to_dict() for root in roots], columns=["t_bar", "zeta_residual", "tangential"])
    return Outcome({"bracket": [lo, hi], "leaves": roots}, {"leaves": frame})


def _run_flow(config: RunConfig) -> Outcome:
    ctx = config.soliton_context()
    section = config.flow
    trajectory = integrate_flow(FlowSpec(ctx, section.t_init, section.tau_lo, section.tau_hi, section.step))
    leaves = leaf_consistency(ctx, trajectory)
    result: dict[str, Any] = {"trajectory": trajectory.summary(), "leaf_consistency": leaves}
    if ctx.profile.is_catalog:
        exact = closed_form_flow(ctx.profile.name, ctx.space.fiber_dim, section.t_init)
        result["closed_form"] = {"flow": exact, "sup_deviation": closed_form_deviation(trajectory, exact)}
    return Outcome(result, {"flow": trajectory.to_frame()}, leaves.passed, [] if leaves.passed else ["leaf_consistency"])


def _shooting_config(config: RunConfig) -> ShootingConfig:
    section = config.shoot
    return ShootingConfig(
        c=config.context.c,
        m=config.context.m,
        launch=section.launch,
        x0=section.x0,
        r0=section.r0,
        theta0=section.theta0,
        step=section.step,
        max_length=section.max_length,
        axis_stop=section.axis_stop,
        space_form=section.space_form,
        profile_name=config.profile.name,
        fiber_curvature=config.profile.fiber_curvature,
    )


def _run_shoot(config: RunConfig) -> Outcome:
    curve = shoot(_shooting_config(config))
    residual = soliton_residual(curve)
    defects = {"arclength_defect": curve.arclength_defect(), "normal_defect": curve.normal_defect()}
    result = {
        "stop_reason": curve.stop_reason,
        "model": curve.model,
        "samples": len(curve),
        "length": float(curve.s[-1] - curve.s[0]),
        "closed": curve.closed,
        "complete": curve.complete,
        "soliton_residual": residual,
        **defects,
        "invariant_bar": CURVE_INVARIANT_BAR,
    }
    failed = [name for name, value in defects.items() if not value <= CURVE_INVARIANT_BAR]
    return Outcome(result, {"shoot": curve_frame(curve)}, not failed, failed)


def _translator_grid(config: RunConfig) -> GraphGrid:
    section = config.translate
    if section.domain == "grimreaper":
        return GraphGrid.grim_reaper(section.N, section.d)
    if section.domain == "periodic":
        return GraphGrid.periodic(section.hi - section.lo, section.N, section.d, lo=section.lo)
    return GraphGrid.dirichlet(section.lo, section.hi, section.N, section.d)


def _run_translate(config: RunConfig) -> Outcome:
    section = config.translate
    c = config.context.c
    solution = solve_translator(_translator_grid(config), c, tol=section.tol, max_iterations=section.max_iterations)
    residual = translator_residual(solution.grid, c)
    result: dict[str, Any] = {"solution": solution}
    if section.domain == "grimreaper" and c == 1.0:
        result["grim_reaper_deviation"] = float(abs(solution.grid.u - grim_reaper_values(solution.grid)).max())
    if section.horizon > 0.0:
        result["self_similarity"] = self_similarity_check(solution, section.horizon, section.dtau)
    passed = solution.residual_sup <= section.tol
    return Outcome(result, {"translate": solution.grid.to_frame(residual.values)}, passed, [] if passed else ["residual_sup"])


def _spectrum_sample(config: RunConfig) -> ImmersionSample:
    section = config.spectrum
    m, c = config.context.m, config.context.c
    if section.sample == "sphere":
        return rotational_sample(exact_sphere(m, c, section.samples), label="sphere")
    if section.sample == "cylinder":
        return rotational_sample(exact_cylinder(m, c, section.length, section.samples), label="cylinder")
    if section.sample == "plane":
        return rotational_sample(exact_plane(section.length, section.samples, m, c), label="plane")
    if section.sample == "grimreaper":
        return graph_sample(solve_translator(GraphGrid.grim_reaper(section.N), c), label="grim_reaper")
    return rotational_sample(shoot(_shooting_config(config)), label="shoot")


def _run_spectrum(config: RunConfig) -> Outcome:
    sample = _spectrum_sample(config)
    op = assemble_L(sample)
    report = eigen_lowest(op, config.spectrum.k)
    symmetry = self_adjointness(op)
    result: dict[str, Any] = {
        "operator": op,
        "spectrum": report,
        "self_adjointness": symmetry,
        "eigen_check_H": eigen_check_H(sample, op),
        "weighted_area": weighted_area(sample),
    }
    if sample.m >= 2:
        result["lambda_coefficient"] = lambda_coefficient(sample)
    if sample.space_form_curvature() is not None:
        result["space_form"] = space_form_check(sample.ctx.space)
    failed = []
    if float(report.residuals.max()) > SPECTRUM_RESIDUAL_BAR:
        failed.append("eigen_residual")
    if symmetry > SELF_ADJOINT_BAR:
        failed.append("self_adjointness")
    return Outcome(result, {"spectrum": report.to_frame(sample.arclength)}, not failed, failed)


def _run_verify(config: RunConfig) -> Outcome:
    results = run_suite(config.verify.suite, config.verify.workers)
    failed = [result.name for result in results if not result.passed]
    frame = pd.DataFrame(
        {
            "name": [result.name for result in results],
            "passed": [result.passed for result in results],
            "value": [math.nan if result.value is None else result.value for result in results],
            "bar": [math.nan if result.bar is None else result.bar for result in results],
        }
    )
    result = {"suite": config.verify.suite, "passed": not failed, "checks": results}
    return Outcome(result, {f"verify_{config.verify.suite}": frame}, not failed, failed)


PIPELINES: dict[str, Callable[[RunConfig], Outcome]] = {
    "leaves": _run_leaves,
    "flow": _run_flow,
    "shoot": _run_shoot,
    "translate": _run_translate,
    "verify": _run_verify,
    "spectrum": _run_spectrum,
}


def run(config: RunConfig, journal: RunJournal, trace_id: str) -> int:
    """Execute one command, write its report and CSVs, and return the exit status."""

    dirs = ensure_output_dirs(Path(config.output_dir) if config.output_dir else output_root())
    journal.log_event("run.started", trace_id=trace_id, data={"command": config.command})
    outcome = PIPELINES[config.command](config)
    report_path = write_report(dirs["reports"] / f"{config.command}.json", config.command, config.echo(), outcome.result, journal.build)
    csv_paths = [str(write_csv(dirs["csv"] / f"{name}.csv", frame)) for name, frame in outcome.frames.items()]
    for name in outcome.failed:
        journal.log_event("check.failed", trace_id=trace_id, data={"command": config.command, "check": name})
    journal.log_event(
        "run.completed",
        trace_id=trace_id,
        data={"command": config.command, "passed": outcome.passed, "report": str(report_path), "csv": csv_paths},
    )
    return EXIT_OK if outcome.passed else EXIT_CHECK_FAILED


def _add_context_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--output-dir", default=None, help="Output directory (default $WARPSOL_OUTPUT_DIR or ./warpsol-out)")
    parser.add_argument("--profile", default=None, help="Catalog profile name or custom")
    parser.add_argument("--interval", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    parser.add_argument("--fiber-curvature", type=float, default=None)
    parser.add_argument("--h", default=None, help="Custom warping function expression")
    parser.add_argument("--h1", default=None)
    parser.add_argument("--h2", default=None)
    parser.add_argument("--m", type=int, default=None, help="Soliton dimension")
    parser.add_argument("--n", type=int, default=None, help="Fiber dimension (default m)")
    parser.add_argument("--c", type=float, default=None, help="Soliton constant")
    parser.add_argument("--t0", type=float, default=None, help="Base point of the potential")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Mean curvature flow solitons in warped products")
    sub = parser.add_subparsers(dest="command", required=True)

    leaves_cmd = sub.add_parser("leaves", help="Slices that are solitons (roots of the soliton function)")
    _add_context_flags(leaves_cmd)
    leaves_cmd.add_argument("--bracket", type=float, nargs=2, default=None, metavar=("LO", "HI"))

    flow_cmd = sub.add_parser("flow", help="Integrate the slice flow t(τ)")
    _add_context_flags(flow_cmd)
    flow_cmd.add_argument("--t-init", type=float, default=None)
    flow_cmd.add_argument("--tau-lo", type=float, default=None)
    flow_cmd.add_argument("--tau-hi", type=float, default=None)
    flow_cmd.add_argument("--step", dest="flow_step", type=float, default=None)

    shoot_cmd = sub.add_parser(
        "shoot", help="Shoot a rotational soliton profile; exits 1 when the arclength or normal defect exceeds 1e-8"
    )
    _add_context_flags(shoot_cmd)
    shoot_cmd.add_argument("--launch", choices=["axis", "free"], default=None)
    shoot_cmd.add_argument("--x0", type=float, default=None)
    shoot_cmd.add_argument("--r0", type=float, default=None)
    shoot_cmd.add_argument("--theta0", type=float, default=None)
    shoot_cmd.add_argument("--step", dest="shoot_step", type=float, default=None)
    shoot_cmd.add_argument("--max-length", type=float, default=None)
    shoot_cmd.add_argument("--axis-stop", type=float, default=None)
    shoot_cmd.add_argument("--space-form", action="store_const", const=True, default=None)

    translate_cmd = sub.add_parser("translate", help="Solve the translating graph equation")
    _add_context_flags(translate_cmd)
    translate_cmd.add_argument("--d", type=int, default=None)
    translate_cmd.add_argument("--N", type=int, default=None)
    translate_cmd.add_argument("--domain", choices=["grimreaper", "dirichlet", "periodic"], default=None)
    translate_cmd.add_argument("--lo", type=float, default=None)
    translate_cmd.add_argument("--hi", type=float, default=None)
    translate_cmd.add_argument("--tol", type=float, default=None)
    translate_cmd.add_argument("--max-iterations", type=int, default=None)
    translate_cmd.add_argument("--horizon", type=float, default=None, help="Self-similarity horizon (0 skips)")
    translate_cmd.add_argument("--dtau", type=float, default=None)

    verify_cmd = sub.add_parser("verify", help="Run a verification suite")
    _add_context_flags(verify_cmd)
    verify_cmd.add_argument("--suite", choices=["exact", "discrete"], default=None)
    verify_cmd.add_argument("--workers", type=int, default=None)

    spectrum_cmd = sub.add_parser("spectrum", help="Lowest eigenpairs of the stability operator")
    _add_context_flags(spectrum_cmd)
    spectrum_cmd.add_argument("--sample", choices=["sphere", "cylinder", "plane", "grimreaper", "shoot"], default=None)
    spectrum_cmd.add_argument("--k", type=int, default=None)
    spectrum_cmd.add_argument("--samples", type=int, default=None)
    spectrum_cmd.add_argument("--N", dest="spectrum_N", type=int, default=None)
    spectrum_cmd.add_argument("--length", type=float, default=None)

    journal_cmd = sub.add_parser("journal", help="Run journal operations")
    journal_cmd.add_argument("--output-dir", default=None)
    journal_sub = journal_cmd.add_subparsers(dest="journal_command", required=True)
    journal_sub.add_parser("status", help="Show journal status")
    journal_sub.add_parser("verify", help="Verify journal hash-chain integrity")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, dict[str, Any]]:
    sections: dict[str, dict[str, Any]] = {}
    for dest, section, key in OVERRIDES:
        value = getattr(args, dest, None)
        if value is not None:
            sections.setdefault(section, {})[key] = list(value) if isinstance(value, list) else value
    return sections


def _journal(output_dir: str | None) -> RunJournal:
    base = Path(output_dir) if output_dir else output_root()
    return RunJournal(base / "journal" / "events.jsonl", BuildInfo.detect(Path.cwd()))


def main() -> int:
    args = _parser().parse_args()
    trace_id = f"cli:{uuid4()}"
    journal = _journal(args.output_dir)

    if args.command == "journal":
        if args.journal_command == "status":
            print(json.dumps(journal.status(), indent=2))
            return EXIT_OK
        result = journal.verify_chain()
        journal.log_event("journal.verified", trace_id=trace_id, data={"ok": result["ok"]})
        print(json.dumps(result, indent=2))
        return EXIT_OK if result["ok"] else EXIT_CHECK_FAILED

    try:
        config = build_config(
            args.command,
            path=Path(args.config) if args.config else None,
            overrides=_overrides(args),
            output_dir=args.output_dir,
        )
        return run(config, journal, trace_id)
    except WarpsolError as exc:
        record = {"error": exc.to_dict(), "exit_code": exc.exit_code, "trace_id": trace_id}
        print(json.dumps(record, sort_keys=True, default=str), file=sys.stderr)
        event = "solver.nonconverged" if isinstance(exc, NonConvergenceError) else "run.failed"
        journal.log_event(event, trace_id=trace_id, data={"command": args.command, "error": exc.to_dict()})
        return exc.exit_code
