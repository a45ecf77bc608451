from __future__ import annotations

import math

import numpy as np
import pytest

from warpsol.errors import ConfigError, DomainError, UnsupportedProfileError
from warpsol.flows import (
    FlowSpec,
    c_tau_at,
    closed_form_branches,
    closed_form_deviation,
    closed_form_flow,
    integrate_flow,
    leaf_consistency,
    t_at,
)
from warpsol.geometry import SolitonContext, WarpedSpace


def _ctx(name: str, n: int = 2, c: float = -1.0, t0: float = 0.0) -> SolitonContext:
    return SolitonContext(WarpedSpace.catalog(name, n), c, n, t0)


def test_closed_form_euclidean_cone() -> None:
    flow = closed_form_flow("euclidean_cone", 2, 2.0)
    assert flow.tau_hi == pytest.approx(1.0)
    assert flow.tau_lo == -math.inf
    taus = np.array([-1.0, 0.0, 0.5, 0.99])
    assert flow(taus) == pytest.approx(np.sqrt(4.0 - 4.0 * taus))
    with pytest.raises(DomainError, match="τ must lie"):
        flow(1.0)
    payload = flow.to_dict()
    assert payload["window"] == [-math.inf, flow.tau_hi]
    assert "tau_lo" not in payload


def test_closed_form_horospherical_and_spherical() -> None:
    horo = closed_form_flow("horospherical", 3, 0.0)
    assert horo(0.25) == pytest.approx(-0.75)
    spherical = closed_form_flow("spherical", 2, math.pi / 3)
    assert spherical.tau_hi == pytest.approx(math.log(2.0) / 2.0)
    assert math.cos(spherical(0.1)) == pytest.approx(0.5 * math.exp(0.2))


def test_equidistant_flow_has_two_branches() -> None:
    branches = closed_form_branches("equidistant", 2, math.asinh(1.0))
    assert [flow.branch for flow in branches] == [1, -1]
    assert math.sinh(branches[0](0.5)) == pytest.approx(math.exp(-1.0))
    assert math.sinh(branches[1](0.5)) == pytest.approx(-math.exp(-1.0))
    assert len(closed_form_branches("horospherical", 2, 1.0)) == 1


def test_closed_form_rejects_custom_profiles() -> None:
    with pytest.raises(UnsupportedProfileError, match="closed-form"):
        closed_form_flow("custom", 2, 1.0)


def test_integrate_flow_matches_euclidean_closed_form() -> None:
    spec = FlowSpec(_ctx("euclidean_cone"), 2.0, 0.0, 0.9, 1e-3)
    trajectory = integrate_flow(spec)
    assert not trajectory.halted
    assert trajectory.window == pytest.approx((0.0, 0.9))
    deviation = closed_form_deviation(trajectory, closed_form_flow("euclidean_cone", 2, 2.0))
    assert deviation <= 1e-8
    zero = int(np.flatnonzero(trajectory.taus == 0.0)[0])
    assert trajectory.sigmas[zero] == 0.0
    assert list(trajectory.to_frame().columns) == ["tau", "t", "sigma", "c_tau"]


def test_integrate_flow_matches_spherical_closed_form_both_ways() -> None:
    spec = FlowSpec(_ctx("spherical", t0=math.pi / 3), math.pi / 3, -0.5, 0.3, 1e-3)
    trajectory = integrate_flow(spec)
    assert trajectory.window == pytest.approx((-0.5, 0.3))
    assert closed_form_deviation(trajectory, closed_form_flow("spherical", 2, math.pi / 3)) <= 1e-8


def test_integrate_flow_halts_at_the_interval_end() -> None:
    trajectory = integrate_flow(FlowSpec(_ctx("euclidean_cone"), 2.0, 0.0, 1.5, 1e-3))
    assert trajectory.halted_hi
    assert not trajectory.halted_lo
    assert 0.999 < trajectory.window[1] < 1.0
    assert np.all(trajectory.ts > 0.0)
    assert trajectory.summary()["halted_hi"] is True
    early = trajectory.taus <= 0.999
    exact = closed_form_flow("euclidean_cone", 2, 2.0)(trajectory.taus[early])
    assert np.max(np.abs(trajectory.ts[early] - exact)) <= 1e-8


def test_integrate_flow_refines_near_the_collapse() -> None:
    space = WarpedSpace.catalog("spherical", 2)
    ctx = SolitonContext(space, -1.0, 2, 1.0)
    exact = closed_form_flow("spherical", 2, 1.0)
    trajectory = integrate_flow(FlowSpec(ctx, 1.0, -1.0, exact.tau_hi - 1e-3, 1e-3))
    assert not trajectory.halted
    assert np.min(np.diff(trajectory.taus)) < 1e-3 / 2
    assert closed_form_deviation(trajectory, exact) <= 1e-8


def test_flow_spec_validation() -> None:
    ctx = _ctx("euclidean_cone")
    with pytest.raises(ConfigError, match="contain 0"):
        FlowSpec(ctx, 2.0, 0.1, 0.5)
    with pytest.raises(ConfigError, match="positive"):
        FlowSpec(ctx, 2.0, 0.0, 0.5, 0.0)
    with pytest.raises(DomainError, match="t_init"):
        FlowSpec(ctx, -2.0, 0.0, 0.5)


def test_c_tau_and_interpolation() -> None:
    trajectory = integrate_flow(FlowSpec(_ctx("euclidean_cone"), 2.0, 0.0, 0.9, 1e-3))
    assert t_at(trajectory, 0.5004) == pytest.approx(math.sqrt(4.0 - 4.0 * 0.5004), abs=1e-10)
    assert c_tau_at(trajectory, 0.5) == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(DomainError, match="outside the computed window"):
        t_at(trajectory, 0.95)


def test_leaf_consistency_finds_the_soliton_slice() -> None:
    cone = _ctx("euclidean_cone")
    report = leaf_consistency(cone, integrate_flow(FlowSpec(cone, 2.0, 0.0, 0.9, 1e-3)))
    assert report.present and report.passed
    assert [hit.tau_bar for hit in report.hits] == pytest.approx([0.5], abs=1e-8)
    assert report.hits[0].t_bar == pytest.approx(math.sqrt(2.0), abs=1e-8)

    horo = _ctx("horospherical", n=3, c=-3.0)
    report = leaf_consistency(horo, integrate_flow(FlowSpec(horo, 1.0, 0.0, 0.5, 1e-3)))
    assert [hit.tau_bar for hit in report.hits] == pytest.approx([1.0 / 3.0], abs=1e-8)
    assert report.to_dict()["passed"] is True


def test_leaf_consistency_without_crossing() -> None:
    cone = _ctx("euclidean_cone")
    report = leaf_consistency(cone, integrate_flow(FlowSpec(cone, 2.0, 0.0, 0.2, 1e-3)))
    assert not report.present
    assert report.passed
