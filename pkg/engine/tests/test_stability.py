from __future__ import annotations

import math

import numpy as np
import pytest

from warpsol.errors import ConfigError
from warpsol.geometry import SolitonContext, WarpedSpace
from warpsol.graphs import GraphGrid, solve_translator
from warpsol.rotational import exact_cylinder, exact_plane, exact_sphere
from warpsol.samples import graph_sample, rotational_sample, slice_sample
from warpsol.stability import (
    WeightedVolume,
    apply_L,
    assemble_L,
    eigen_check_H,
    eigen_lowest,
    lambda_coefficient,
    parabolicity_volume_test,
    self_adjointness,
    stability_potential,
    weighted_area,
    weighted_volume,
)


def _sphere():
    return rotational_sample(exact_sphere(2, -1.0), label="sphere")


def _grim_reaper_sample(n: int = 200):
    return graph_sample(solve_translator(GraphGrid.grim_reaper(n), 1.0))


def test_sphere_spectrum() -> None:
    op = assemble_L(_sphere())
    assert op.boundary == "none"
    assert op.size == 401
    report = eigen_lowest(op, k=3)
    assert report.eigenvalues[0] == pytest.approx(-2.0, abs=1e-9)
    assert report.eigenvalues[1] == pytest.approx(-1.0, abs=5e-2)
    assert report.eigenvalues[2] == pytest.approx(1.0, abs=5e-2)
    assert report.index == 2
    assert np.all(report.eigenvectors[:, 0] > 0.0)
    assert np.max(report.residuals) <= 1e-8
    payload = report.to_dict()
    assert payload["index_is_lower_bound"] is True
    assert payload["convention"].startswith("L phi = -lambda phi")
    frame = report.to_frame(_sphere().arclength)
    assert list(frame.columns) == ["s", "phi_0", "phi_1", "phi_2"]


def test_stability_potential_on_the_sphere() -> None:
    assert stability_potential(_sphere()) == pytest.approx(np.full(401, 2.0), abs=1e-12)


def test_operator_is_self_adjoint() -> None:
    assert self_adjointness(assemble_L(_sphere())) <= 1e-12
    assert self_adjointness(assemble_L(_grim_reaper_sample())) <= 1e-12


def test_dense_matrix_matches_apply() -> None:
    op = assemble_L(rotational_sample(exact_cylinder(2, -1.0, samples=41)))
    vector = np.random.default_rng(5).standard_normal(op.size)
    assert op.matrix() @ vector == pytest.approx(op.apply(vector), abs=1e-10)


def test_mean_curvature_is_an_eigenfunction_on_exact_solitons() -> None:
    assert eigen_check_H(_sphere()).sup <= 1e-10
    assert eigen_check_H(rotational_sample(exact_cylinder(2, -1.0))).sup <= 1e-10


def test_open_ends_are_pinned() -> None:
    op = assemble_L(rotational_sample(exact_cylinder(2, -1.0, samples=41)))
    assert op.boundary == "dirichlet"
    assert op.size == 39
    values = apply_L(op, np.ones(41))
    assert math.isnan(values[0]) and math.isnan(values[-1])
    assert np.all(np.isfinite(values[1:-1]))


def test_assemble_rejects_slice_samples() -> None:
    ctx = SolitonContext(WarpedSpace.catalog("euclidean_cone", 2), -1.0, 2, 0.0)
    with pytest.raises(ConfigError, match="slice samples"):
        assemble_L(slice_sample(ctx, math.sqrt(2.0)))
    with pytest.raises(ConfigError, match="k must be"):
        eigen_lowest(assemble_L(_sphere()), k=0)


def test_dirichlet_eigenvalue_decreases_with_the_domain() -> None:
    sample = _grim_reaper_sample()
    center = len(sample) // 2
    values = []
    for half in (30, 60, center - 1):
        window = sample.restrict(center - half, center + half + 1)
        values.append(float(eigen_lowest(assemble_L(window)).eigenvalues[0]))
    assert values[0] >= values[1] - 1e-12
    assert values[1] >= values[2] - 1e-12


def test_restrict_rejects_tiny_windows() -> None:
    with pytest.raises(ConfigError, match="restrict"):
        _grim_reaper_sample().restrict(10, 12)


def test_weighted_volume_of_the_shrinking_plane() -> None:
    sample = rotational_sample(exact_plane(length=4.0, samples=401))
    r = np.linspace(0.5, 4.0, 36)
    volume = weighted_volume(sample, r)
    assert volume.log_boundary == pytest.approx(np.log(2.0 * math.pi * r) - r**2 / 2.0, abs=1e-4)
    assert volume.ball[-1] == pytest.approx(2.0 * math.pi * (1.0 - math.exp(-8.0)), rel=1e-4)
    assert list(volume.to_frame().columns) == ["r", "log_boundary", "log_ball"]
    with pytest.raises(ConfigError, match="radii must lie"):
        weighted_volume(sample, np.array([1.0, 5.0]))


def test_weighted_volume_of_a_graph_adds_both_branches() -> None:
    sample = _grim_reaper_sample()
    volume = weighted_volume(sample, np.array([0.0, 0.1]))
    assert volume.boundary[0] == pytest.approx(2.0 * math.exp(sample.c * sample.eta[sample.origin]), rel=1e-12)


def test_weighted_volume_needs_an_origin() -> None:
    ctx = SolitonContext(WarpedSpace.catalog("euclidean_cone", 2), -1.0, 2, 0.0)
    with pytest.raises(ConfigError, match="distance"):
        weighted_volume(slice_sample(ctx, math.sqrt(2.0)), np.array([0.0]))
    with pytest.raises(ConfigError, match="pole"):
        weighted_volume(rotational_sample(exact_cylinder(2, -1.0)), np.array([0.0]))


@pytest.mark.parametrize(
    ("log_boundary", "divergent"),
    [
        (lambda r: np.log(2.0 * math.pi * r) - r**2 / 2.0, True),
        (lambda r: np.log(2.0 * math.pi * r), True),
        (lambda r: np.log(4.0 * math.pi * r**2), False),
    ],
)
@pytest.mark.parametrize("r_max", [20.0, 40.0])
def test_parabolicity_volume_test(log_boundary, divergent: bool, r_max: float) -> None:
    r = np.linspace(r_max / 400, r_max, 400)
    verdict = parabolicity_volume_test(WeightedVolume.from_log_density(r, log_boundary(r)))
    assert verdict.divergent is divergent
    assert verdict.cutoffs[-1] == pytest.approx(r_max)
    assert np.all(np.diff(verdict.log_partial_integrals) > 0.0)
    assert verdict.to_dict()["heuristic"].endswith("not a proof")


def test_parabolicity_needs_enough_radii() -> None:
    r = np.linspace(0.1, 1.0, 8)
    with pytest.raises(ConfigError, match="at least 16"):
        parabolicity_volume_test(WeightedVolume.from_log_density(r, np.zeros(8)))
    with pytest.raises(ConfigError, match="strictly increasing"):
        WeightedVolume.from_log_density(np.array([1.0, 1.0]), np.zeros(2))


def test_lambda_coefficient_and_weighted_area() -> None:
    coefficient = lambda_coefficient(_sphere())
    assert coefficient["Lambda"] == pytest.approx(0.0, abs=1e-12)
    assert coefficient["Lambda_plus"] >= 0.0
    with pytest.raises(ConfigError, match="m >= 2"):
        lambda_coefficient(_grim_reaper_sample())
    assert weighted_area(_sphere()) == pytest.approx(8.0 * math.pi * math.exp(-1.0), rel=1e-3)
