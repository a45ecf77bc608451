from __future__ import annotations

import math

import numpy as np
import pytest

from warpsol.errors import ConfigError, DomainError, UnsupportedProfileError
from warpsol.geometry import (
    SolitonContext,
    WarpedSpace,
    chi_catalog,
    eta_hat,
    eta_values,
    flow_param,
    flow_param_values,
    ricci,
    ricci_radial,
    riemann_component,
    sectional_curvature,
    soliton_function,
    soliton_leaves,
    space_form_check,
    varkappa,
)
from warpsol.profiles import WarpingProfile


def _ctx(name: str, *, n: int = 2, m: int = 2, c: float = -1.0, t0: float = 0.0) -> SolitonContext:
    return SolitonContext(WarpedSpace.catalog(name, n), c, m, t0)


def _random_vectors(count: int, size: int, seed: int = 7) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.normal(size=size) for _ in range(count)]


def test_eta_hat_closed_forms() -> None:
    assert eta_hat(_ctx("euclidean_cone"), 2.0) == pytest.approx(2.0, abs=1e-12)
    assert eta_hat(_ctx("horospherical"), 1.0) == pytest.approx(math.e - 1.0, abs=1e-12)
    spherical = _ctx("spherical", t0=math.pi / 2)
    t = math.pi - 1e-3
    assert eta_hat(spherical, t) == pytest.approx(math.cos(math.pi / 2) - math.cos(t), abs=1e-10)
    assert eta_hat(spherical, math.pi / 2) == 0.0


def test_eta_hat_rejects_points_outside_interval() -> None:
    with pytest.raises(DomainError, match="outside the open interval"):
        eta_hat(_ctx("euclidean_cone"), -1.0)


def test_eta_values_are_increasing_with_derivative_h() -> None:
    ctx = _ctx("geodesic_spherical", t0=1.0)
    grid = np.linspace(0.2, 3.0, 281)
    values = eta_values(ctx, grid)
    assert np.all(np.diff(values) > 0.0)
    slope = np.gradient(values, grid[1] - grid[0])
    assert np.max(np.abs(slope[1:-1] - np.sinh(grid[1:-1]))) <= 1e-3


def test_flow_param_closed_forms() -> None:
    horo = _ctx("horospherical")
    assert flow_param(horo, 1.5) == pytest.approx(1.0 - math.exp(-1.5), abs=1e-12)
    product = _ctx("product", t0=0.25)
    assert flow_param(product, 2.0) == pytest.approx(1.75, abs=1e-12)
    cone = _ctx("euclidean_cone", t0=1.0)
    assert flow_param(cone, 3.0) == pytest.approx(math.log(3.0), abs=1e-11)
    grid = np.linspace(0.5, 4.0, 8)
    assert flow_param_values(cone, grid) == pytest.approx(np.log(grid), abs=1e-11)


def test_flow_param_needs_interior_base_point() -> None:
    with pytest.raises(DomainError, match="t0"):
        flow_param(_ctx("euclidean_cone", t0=0.0), 1.0)


def test_soliton_function_examples() -> None:
    assert soliton_function(_ctx("euclidean_cone"), math.sqrt(2.0)) == pytest.approx(0.0, abs=1e-14)
    assert soliton_function(_ctx("product", m=1), 0.3) == -1.0
    horo = _ctx("horospherical", n=3, m=3, c=-3.0)
    assert soliton_function(horo, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_soliton_leaves_find_catalog_witnesses() -> None:
    cone = soliton_leaves(_ctx("euclidean_cone"), 0.1, 10.0)
    assert [root.t for root in cone] == pytest.approx([math.sqrt(2.0)], abs=1e-12)
    geodesic = soliton_leaves(_ctx("geodesic_spherical"), 0.1, 10.0)
    assert len(geodesic) == 1
    assert geodesic[0].t == pytest.approx(math.acosh(1.0 + math.sqrt(2.0)), abs=1e-12)
    for root in cone + geodesic:
        assert abs(root.residual) <= 1e-12
        assert not root.tangential
    assert soliton_leaves(_ctx("product"), 0.1, 10.0) == []


def test_soliton_leaves_reject_bad_brackets() -> None:
    ctx = _ctx("euclidean_cone")
    with pytest.raises(DomainError, match="empty"):
        soliton_leaves(ctx, 2.0, 1.0)
    with pytest.raises(DomainError, match="outside the open interval"):
        soliton_leaves(ctx, -1.0, 1.0)


def test_context_validation() -> None:
    space = WarpedSpace.catalog("euclidean_cone", 2)
    with pytest.raises(ConfigError, match="nonzero"):
        SolitonContext(space, 0.0, 2, 0.0)
    with pytest.raises(ConfigError, match="m=3"):
        SolitonContext(space, -1.0, 3, 0.0)
    with pytest.raises(ConfigError, match="t0"):
        SolitonContext(space, -1.0, 2, -1.0)


def test_flat_spaces_have_zero_curvature() -> None:
    for name in ("euclidean_cone", "product"):
        space = WarpedSpace.catalog(name, 3)
        U, V, W, Z = _random_vectors(4, 4)
        assert riemann_component(space, 1.7, U, V, W, Z) == pytest.approx(0.0, abs=1e-12)


def test_riemann_component_tensor_symmetries() -> None:
    space = WarpedSpace.catalog("horospherical", 3, fiber_curvature=0.5)
    U, V, W, Z = _random_vectors(4, 4, seed=11)
    for t in (-0.5, 0.3, 1.2):
        base = riemann_component(space, t, U, V, W, Z)
        assert riemann_component(space, t, V, U, W, Z) == pytest.approx(-base, abs=1e-12)
        assert riemann_component(space, t, U, V, Z, W) == pytest.approx(-base, abs=1e-12)
        assert riemann_component(space, t, W, Z, U, V) == pytest.approx(base, abs=1e-12)


def test_sectional_curvature_of_space_forms() -> None:
    hyperbolic = WarpedSpace.catalog("geodesic_spherical", 2)
    radial = np.array([1.0, 0.0, 0.0])
    fiber = np.array([0.0, 1.0, 0.0])
    assert sectional_curvature(hyperbolic, 0.8, radial, fiber) == pytest.approx(-1.0, abs=1e-12)
    sphere = WarpedSpace.catalog("spherical", 3)
    for U, V in zip(_random_vectors(5, 4, seed=1), _random_vectors(5, 4, seed=2)):
        assert sectional_curvature(sphere, 1.1, U, V) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(DomainError, match="independent"):
        sectional_curvature(sphere, 1.1, radial.tolist() + [0.0], radial.tolist() + [0.0])


def test_ricci_radial_examples() -> None:
    horo = WarpedSpace.catalog("horospherical", 2)
    assert ricci_radial(horo, np.array([1.0, 0.0, 0.0]), 0.0) == pytest.approx(-2.0, abs=1e-12)
    assert ricci_radial(WarpedSpace.catalog("euclidean_cone", 2), np.array([0.3, 1.0, -2.0]), 1.5) == pytest.approx(
        0.0, abs=1e-12
    )
    cosh_space = WarpedSpace.catalog("equidistant", 3)
    assert ricci_radial(cosh_space, np.array([0.0, 1.0, 2.0, 0.5]), 0.4) == pytest.approx(0.0, abs=1e-12)


def test_ricci_radial_matches_closed_form() -> None:
    space = WarpedSpace.catalog("geodesic_spherical", 3)
    t = 0.9
    Z = np.array([0.7, -0.2, 0.4, 1.0])
    expected = -3.0 * Z[0] * math.sinh(t)
    assert ricci_radial(space, Z, t) == pytest.approx(expected, abs=1e-10)


def test_ricci_rejects_wrong_vector_size() -> None:
    space = WarpedSpace.catalog("product", 2)
    with pytest.raises(ConfigError, match="components"):
        ricci(space, 0.0, np.ones(2), np.ones(3))


def test_varkappa_examples() -> None:
    assert varkappa(WarpedSpace.catalog("euclidean_cone", 2), 2.0) == pytest.approx(0.0, abs=1e-14)
    assert varkappa(WarpedSpace.catalog("horospherical", 2), 0.7) == pytest.approx(-1.0, abs=1e-12)
    assert varkappa(WarpedSpace.catalog("spherical", 2), math.pi / 2) == pytest.approx(1.0, abs=1e-12)


def test_space_form_check_examples() -> None:
    assert space_form_check(WarpedSpace.catalog("geodesic_spherical", 2)).kappa_bar == pytest.approx(-1.0)
    flat = space_form_check(WarpedSpace.catalog("euclidean_cone", 2))
    assert flat.is_space_form
    assert flat.kappa_bar == 0.0
    report = space_form_check(WarpedSpace.catalog("horospherical", 2, fiber_curvature=1.0))
    assert report.kappa_bar is None
    assert report.to_dict()["space_form"] is False


@pytest.mark.parametrize(
    ("name", "t0"),
    [
        ("euclidean_cone", 1.0),
        ("horospherical", 0.0),
        ("geodesic_spherical", 1.0),
        ("spherical", 1.0),
        ("equidistant", 0.0),
        ("product", 0.0),
    ],
)
def test_chi_catalog_recovers_h_squared(name: str, t0: float) -> None:
    ctx = _ctx(name, t0=t0)
    t = 1.3
    chi = chi_catalog(ctx)
    assert float(chi(eta_hat(ctx, t))) == pytest.approx(ctx.profile.value(t) ** 2, rel=1e-10)


def test_chi_catalog_rejects_custom_profiles() -> None:
    profile = WarpingProfile.from_expressions("t^2 + 1", (0.0, 2.0))
    ctx = SolitonContext(WarpedSpace(profile, 0.0, 2), -1.0, 2, 0.0)
    with pytest.raises(UnsupportedProfileError):
        chi_catalog(ctx)
