from __future__ import annotations

import json
import math
import sys
from pathlib import Path

from warpsol import cli


def _run(monkeypatch, tmp_path: Path, *args: str) -> int:  # type: ignore[no-untyped-def]
    monkeypatch.setenv("WARPSOL_OUTPUT_DIR", str(tmp_path))
    monkeypatch.setattr(sys, "argv", ["warpsol", *args])
    return cli.main()


def _report(tmp_path: Path, command: str) -> dict:
    return json.loads((tmp_path / "reports" / f"{command}.json").read_text(encoding="utf-8"))


def _events(tmp_path: Path) -> list[dict]:
    path = tmp_path / "journal" / "events.jsonl"
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


def test_leaves_prints_roots_and_writes_artifacts(monkeypatch, tmp_path: Path, capsys) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "leaves", "--bracket", "0.1", "10") == 0
    roots = json.loads(capsys.readouterr().out)
    assert len(roots) == 1
    assert math.isclose(roots[0]["t_bar"], math.sqrt(2.0), abs_tol=1e-12)

    report = _report(tmp_path, "leaves")
    assert report["command"] == "leaves"
    assert report["config"]["leaves"]["bracket"] == [0.1, 10.0]
    assert (tmp_path / "csv" / "leaves.csv").read_text(encoding="utf-8").startswith("t_bar,zeta_residual,tangential\n")
    assert [event["event_type"] for event in _events(tmp_path)] == ["run.started", "run.completed"]


def test_leaves_without_roots_is_an_empty_list(monkeypatch, tmp_path: Path, capsys) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "leaves", "--profile", "product", "--bracket", "0.1", "10") == 0
    assert json.loads(capsys.readouterr().out) == []


def test_flow_matches_the_closed_form(monkeypatch, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    code = _run(monkeypatch, tmp_path, "flow", "--t-init", "2", "--tau-hi", "0.9", "--step", "1e-3")
    assert code == 0
    result = _report(tmp_path, "flow")["result"]
    assert result["closed_form"]["sup_deviation"] <= 1e-8
    assert result["leaf_consistency"]["passed"] is True
    assert abs(result["leaf_consistency"]["hits"][0]["tau_bar"] - 0.5) <= 1e-8
    assert (tmp_path / "csv" / "flow.csv").exists()


def test_shoot_sphere_from_the_axis(monkeypatch, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "shoot", "--x0", str(math.sqrt(2.0))) == 0
    result = _report(tmp_path, "shoot")["result"]
    assert result["stop_reason"] == "axis_return"
    assert result["closed"] is True
    assert result["arclength_defect"] <= result["invariant_bar"] == 1e-8


def test_shoot_fails_the_arclength_bar_at_a_coarse_step(monkeypatch, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "shoot", "--x0", str(math.sqrt(2.0)), "--step", "0.2") == 1
    result = _report(tmp_path, "shoot")["result"]
    assert result["arclength_defect"] > result["invariant_bar"]
    failed = [event["data"]["check"] for event in _events(tmp_path) if event["event_type"] == "check.failed"]
    assert failed == ["arclength_defect"]


def test_spectrum_of_the_sphere(monkeypatch, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "spectrum", "--sample", "sphere", "--k", "2") == 0
    result = _report(tmp_path, "spectrum")["result"]
    assert abs(result["spectrum"]["eigenvalues"][0] + 2.0) <= 1e-9
    assert result["spectrum"]["index"] == 2
    header = (tmp_path / "csv" / "spectrum.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "s,phi_0,phi_1"


def test_config_file_and_flags(monkeypatch, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    config = tmp_path / "run.yaml"
    config.write_text("profile:\n  name: geodesic_spherical\nleaves:\n  bracket: [0.1, 10]\n", encoding="utf-8")
    assert _run(monkeypatch, tmp_path, "leaves", "--config", str(config), "--c", "-1") == 0
    report = _report(tmp_path, "leaves")
    assert report["config"]["profile"]["name"] == "geodesic_spherical"
    assert math.isclose(report["result"]["leaves"][0]["t_bar"], math.acosh(1.0 + math.sqrt(2.0)), abs_tol=1e-12)


def test_invalid_configuration_exits_with_a_structured_error(monkeypatch, tmp_path: Path, capsys) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "leaves", "--profile", "torus") == 2
    record = json.loads(capsys.readouterr().err)
    assert record["exit_code"] == 2
    assert record["error"]["code"] == "invalid_config"
    assert record["trace_id"].startswith("cli:")
    assert _events(tmp_path)[-1]["event_type"] == "run.failed"
    assert not (tmp_path / "reports" / "leaves.json").exists()


def test_domain_errors_exit_with_code_two(monkeypatch, tmp_path: Path, capsys) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "leaves", "--bracket", "-1", "2") == 2
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "outside_interval"


def test_closed_fiber_translator_is_infeasible(monkeypatch, tmp_path: Path, capsys) -> None:  # type: ignore[no-untyped-def]
    code = _run(monkeypatch, tmp_path, "translate", "--domain", "periodic", "--c", "1", "--N", "32")
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "closed_fiber_translator"


def test_newton_iteration_cap_exits_with_code_three(monkeypatch, tmp_path: Path, capsys) -> None:  # type: ignore[no-untyped-def]
    code = _run(monkeypatch, tmp_path, "translate", "--c", "1", "--N", "200", "--max-iterations", "1", "--tol", "1e-14")
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "newton_iteration_cap"
    assert _events(tmp_path)[-1]["event_type"] == "solver.nonconverged"


def test_translate_grim_reaper(monkeypatch, tmp_path: Path) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "translate", "--c", "1", "--N", "200") == 0
    result = _report(tmp_path, "translate")["result"]
    assert result["solution"]["residual_sup"] <= 1e-10
    assert result["grim_reaper_deviation"] <= 5e-2
    assert (tmp_path / "csv" / "translate.csv").read_text(encoding="utf-8").startswith("x,u,residual\n")


def test_journal_status_and_verify(monkeypatch, tmp_path: Path, capsys) -> None:  # type: ignore[no-untyped-def]
    assert _run(monkeypatch, tmp_path, "leaves", "--bracket", "0.1", "10") == 0
    capsys.readouterr()
    assert _run(monkeypatch, tmp_path, "journal", "status") == 0
    assert json.loads(capsys.readouterr().out)["event_count"] == 2
    assert _run(monkeypatch, tmp_path, "journal", "verify") == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True
