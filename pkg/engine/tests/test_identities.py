from __future__ import annotations

import math

import pytest

from warpsol.errors import ConfigError, UnsupportedProfileError
from warpsol.geometry import SolitonContext, WarpedSpace
from warpsol.identities import (
    barta_lambda1_bound,
    check_delta_eta,
    check_delta_eta_weighted,
    check_grad_H,
    conserved_quantity,
    delta_H_residual,
    gradient_consistency,
    height_bound,
    height_estimate_check,
    quotient_residual,
    refinement_study,
    simons_residual,
    slice_geometry,
    umbilicity_criterion,
    umbilicity_gap,
    umbilicity_residual,
)
from warpsol.rotational import exact_cylinder, exact_plane, exact_sphere
from warpsol.samples import ImmersionSample, rotational_sample, slice_sample


EXACT = 1e-10


def _ctx(name: str, m: int = 2, c: float = -1.0, **space: float) -> SolitonContext:
    return SolitonContext(WarpedSpace.catalog(name, m, **space), c, m, 0.0)


def _exact_samples() -> dict[str, ImmersionSample]:
    return {
        "slice": slice_sample(_ctx("euclidean_cone"), math.sqrt(2.0)),
        "sphere": rotational_sample(exact_sphere(2, -1.0)),
        "cylinder": rotational_sample(exact_cylinder(2, -1.0)),
        "plane": rotational_sample(exact_plane()),
    }


@pytest.mark.parametrize("check", [check_delta_eta, check_delta_eta_weighted, check_grad_H, simons_residual, delta_H_residual])
@pytest.mark.parametrize("which", ["slice", "sphere", "cylinder", "plane"])
def test_identities_vanish_on_exact_solitons(check, which: str) -> None:
    report = check(_exact_samples()[which])
    assert report.sup <= EXACT
    assert report.l2 <= report.sup + 1e-15
    assert "order" not in report.to_dict()


def test_slice_sample_fields() -> None:
    sample = _exact_samples()["slice"]
    assert sample.H[0] == pytest.approx(-math.sqrt(2.0))
    assert sample.A2[0] == pytest.approx(1.0)
    assert sample.analytic and sample.complete


def test_conserved_quantity_on_catalog_solitons() -> None:
    for which in ("slice", "sphere"):
        quantity = conserved_quantity(_exact_samples()[which])
        assert quantity.drift <= EXACT
        assert quantity.mean == pytest.approx(0.0, abs=EXACT)


def test_umbilicity_on_sphere_and_cylinder() -> None:
    sphere = _exact_samples()["sphere"]
    assert umbilicity_gap(sphere) == pytest.approx(0.0, abs=1e-12)
    criterion = umbilicity_criterion(sphere)
    assert criterion["criterion_holds"] is True
    assert criterion["threshold"] == 0.0
    cylinder = _exact_samples()["cylinder"]
    assert umbilicity_gap(cylinder) == pytest.approx(0.5)
    assert umbilicity_residual(cylinder).sup <= EXACT
    assert umbilicity_residual(sphere).sup <= EXACT


def test_quotient_identity_needs_nonzero_mean_curvature() -> None:
    assert quotient_residual(_exact_samples()["sphere"]).sup <= EXACT
    with pytest.raises(ConfigError, match="\\|H\\|"):
        quotient_residual(_exact_samples()["plane"])


def test_space_form_identities_reject_other_targets() -> None:
    sample = slice_sample(_ctx("horospherical", fiber_curvature=1.0), 0.3)
    with pytest.raises(UnsupportedProfileError, match="not a space form"):
        simons_residual(sample)
    assert simons_residual(sample, kappa_bar=0.0).samples == 1


def test_delta_H_needs_a_hypersurface() -> None:
    ctx = SolitonContext(WarpedSpace.catalog("euclidean_cone", 3), -1.0, 2, 0.0)
    with pytest.raises(ConfigError, match="hypersurface"):
        delta_H_residual(slice_sample(ctx, math.sqrt(2.0)))


def test_gradient_consistency_on_the_sphere() -> None:
    report = gradient_consistency(_exact_samples()["sphere"])
    assert report["passed"] is True
    assert report["min_tangential_defect"] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    ("name", "m", "c", "t_bar"),
    [
        ("euclidean_cone", 2, -1.0, math.sqrt(2.0)),
        ("horospherical", 3, -3.0, 0.0),
        ("geodesic_spherical", 2, -1.0, math.acosh(1.0 + math.sqrt(2.0))),
    ],
)
def test_height_estimates_are_sharp_on_soliton_slices(name: str, m: int, c: float, t_bar: float) -> None:
    ctx = SolitonContext(WarpedSpace.catalog(name, m), c, m, 0.0)
    estimate = height_estimate_check(slice_sample(ctx, t_bar))
    assert estimate.height_bound == pytest.approx(t_bar, abs=1e-12)
    assert estimate.height_slack == pytest.approx(0.0, abs=1e-12)
    assert abs(estimate.lower_mean_curvature_slack) <= 1e-10
    assert estimate.passed


def test_height_estimate_on_the_round_sphere() -> None:
    estimate = height_estimate_check(_exact_samples()["sphere"])
    assert estimate.height_slack == pytest.approx(0.0, abs=1e-12)
    assert estimate.passed


def test_height_estimate_preconditions() -> None:
    with pytest.raises(ConfigError, match="c < 0"):
        height_estimate_check(slice_sample(_ctx("euclidean_cone", c=1.0), 1.0))
    with pytest.raises(ConfigError, match="complete"):
        height_estimate_check(_exact_samples()["cylinder"])
    with pytest.raises(ConfigError, match="no height estimate"):
        height_bound("product", 2, -1.0)


def test_slice_geometry_of_the_soliton_sphere() -> None:
    geometry = slice_geometry(_ctx("euclidean_cone"), math.sqrt(2.0), minimal=True)
    assert geometry.dt_component == pytest.approx(-math.sqrt(2.0))
    assert geometry.soliton
    off_leaf = slice_geometry(_ctx("euclidean_cone"), 1.0, minimal=True)
    assert not off_leaf.soliton
    assert slice_geometry(_ctx("euclidean_cone"), math.sqrt(2.0), minimal=False).to_dict()["H_fiber_component"] is None


def test_barta_bound_and_cone_threshold() -> None:
    bound = barta_lambda1_bound(_ctx("euclidean_cone"), 0.5, 3.0, 1.0)
    assert bound.zeta_min == pytest.approx(-7.0)
    assert bound.zeta_argmin == pytest.approx(3.0)
    assert bound.eta_span == pytest.approx(4.375)
    assert bound.consistent
    assert bound.b_threshold == pytest.approx(math.sqrt(16.25 / 9.0))
    with pytest.raises(ConfigError, match="empty"):
        barta_lambda1_bound(_ctx("euclidean_cone"), 3.0, 0.5, 1.0)
    with pytest.raises(ConfigError, match="α"):
        barta_lambda1_bound(_ctx("euclidean_cone"), 0.5, 3.0, -1.0)


def test_refinement_study_reports_the_finest_sample() -> None:
    samples = [rotational_sample(exact_sphere(2, -1.0, samples=count)) for count in (101, 201)]
    report = refinement_study(check_delta_eta, samples)
    assert report.samples == 201
    with pytest.raises(ConfigError, match="two samples"):
        refinement_study(check_delta_eta, samples[:1])
