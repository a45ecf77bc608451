from __future__ import annotations

import math

import numpy as np
import pytest

from warpsol.errors import ConfigError, DomainError
from warpsol.profiles import CATALOG_NAMES, WarpingProfile, derivative_consistency


def test_catalog_values_and_default_fiber_curvature() -> None:
    cone = WarpingProfile.catalog("euclidean_cone")
    assert cone.value(2.0) == 2.0
    assert cone.first(2.0) == 1.0
    assert cone.fiber_curvature == 1.0
    horo = WarpingProfile.catalog("horospherical")
    assert horo.first(0.0) == pytest.approx(1.0)
    spherical = WarpingProfile.catalog("spherical")
    assert spherical.second(math.pi / 2) == pytest.approx(-1.0)
    assert (spherical.interval_lo, spherical.interval_hi) == (0.0, math.pi)
    assert WarpingProfile.catalog("equidistant").fiber_curvature == -1.0


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_catalog_derivatives_match_centered_differences(name: str) -> None:
    report = derivative_consistency(WarpingProfile.catalog(name))
    assert report["h1"] <= 1e-6
    assert report["h2"] <= 1e-6


def test_require_rejects_points_outside_open_interval() -> None:
    cone = WarpingProfile.catalog("euclidean_cone")
    with pytest.raises(DomainError, match="outside the open interval"):
        cone.value(0.0)
    with pytest.raises(DomainError):
        WarpingProfile.catalog("spherical").require(math.pi)


def test_unknown_catalog_name_and_bad_subinterval() -> None:
    with pytest.raises(ConfigError, match="unknown catalog profile"):
        WarpingProfile.catalog("torus")
    with pytest.raises(ConfigError, match="not a subinterval"):
        WarpingProfile.catalog("spherical", (0.5, 4.0))
    narrowed = WarpingProfile.catalog("horospherical", (-1.0, 1.0))
    assert narrowed.contains(0.5)
    assert not narrowed.contains(1.5)


def test_custom_profile_differentiates_symbolically() -> None:
    profile = WarpingProfile.from_expressions("t^2", (0.5, 3.0))
    assert profile.name == "custom"
    assert profile.first(2.0) == 4.0
    assert profile.second(2.0) == 2.0
    assert profile.to_dict()["expressions"] == {"h": "t^2"}
    tanh = WarpingProfile.from_expressions("1 + tanh(t)**2", (-1.0, 1.0))
    assert tanh.first(0.5) == pytest.approx(2.0 * math.tanh(0.5) / math.cosh(0.5) ** 2, abs=1e-14)


def test_callable_profile_falls_back_to_five_point_differences() -> None:
    profile = WarpingProfile.from_callables(np.cosh, (-2.0, 2.0), fiber_curvature=-1.0)
    assert profile.first(1.5) == pytest.approx(math.sinh(1.5), abs=1e-9)
    assert profile.second(1.5) == pytest.approx(math.cosh(1.5), abs=1e-4)
    assert profile.to_dict()["fiber_curvature"] == -1.0
    assert "expressions" not in profile.to_dict()


def test_custom_profile_must_be_positive() -> None:
    with pytest.raises(DomainError, match="h must be positive"):
        WarpingProfile.from_expressions("t - 1", (0.0, 2.0))
    with pytest.raises(ConfigError, match="empty interval"):
        WarpingProfile.from_expressions("t", (1.0, 1.0))
