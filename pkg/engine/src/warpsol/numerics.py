from __future__ import annotations

"""Quadrature, root bracketing, scalar minimization and the RK4 step."""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import DomainError, NonConvergenceError


QUADRATURE_TOLERANCE = 1e-12
QUADRATURE_MAX_PANELS = 2**20
SCAN_SUBINTERVALS = 10_000
BISECTION_XTOL = 1e-10
TANGENCY_TOLERANCE = 1e-10
GOLDEN_TOLERANCE = 1e-10


def adaptive_simpson(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    tol: float = QUADRATURE_TOLERANCE,
    max_panels: int = QUADRATURE_MAX_PANELS,
) -> float:
    """Adaptive Simpson quadrature with absolute tolerance `tol`."""

    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(func, b, a, tol=tol, max_panels=max_panels)

    fa, fb = float(func(a)), float(func(b))
    mid = 0.5 * (a + b)
    fm = float(func(mid))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol)]
    pieces: list[float] = []
    panels = 1
    while stack:
        lo, hi, flo, fmid, fhi, estimate, eps = stack.pop()
        mid = 0.5 * (lo + hi)
        left_mid = 0.5 * (lo + mid)
        right_mid = 0.5 * (mid + hi)
        fl = float(func(left_mid))
        fr = float(func(right_mid))
        left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi)
        delta = left + right - estimate
        floor = 64.0 * np.finfo(float).eps * abs(left + right)
        if abs(delta) <= max(15.0 * eps, floor) or mid - lo <= 4.0 * np.spacing(abs(mid)):
            pieces.append(left + right + delta / 15.0)
            continue
        panels += 1
        if panels > max_panels:
            raise NonConvergenceError(
                "quadrature_panel_cap",
                f"adaptive Simpson exceeded {max_panels} panels on [{a}, {b}]",
                hint="the integrand is probably singular inside the interval",
            )
        stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * eps))
        stack.append((lo, mid, flo, fl, fmid, left, 0.5 * eps))
    return math.fsum(pieces)


def cumulative_integral(
    func: Callable[[float], float],
    start: float,
    points: np.ndarray,
    *,
    tol: float = QUADRATURE_TOLERANCE,
) -> np.ndarray:
    """Integrals of `func` from `start` to each of `points`.

    Points on either side of `start` are accumulated outward from it, so a
    point equal to `start` gets exactly 0.
    """

    points = np.asarray(points, dtype=float)
    result = np.zeros_like(points)
    for side in (points > start, points < start):
        indices = np.flatnonzero(side)
        anchor = start
        running = 0.0
        for index in indices[np.argsort(np.abs(points[indices] - start), kind="stable")]:
            target = float(points[index])
            running += adaptive_simpson(func, anchor, target, tol=tol)
            anchor = target
            result[index] = running
    return result


@dataclass(frozen=True)
class Root:
    t: float
    residual: float
    tangential: bool = False

    def to_dict(self) -> dict[str, float | bool]:
        return {"t_bar": self.t, "zeta_residual": abs(self.residual), "tangential": self.tangential}


def find_roots(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    *,
    derivative: Callable[[float], float] | None = None,
    subintervals: int = SCAN_SUBINTERVALS,
    xtol: float = BISECTION_XTOL,
) -> list[Root]:
    """All roots of `func` on [lo, hi]: scan for sign changes, bisect, polish once by Newton.

    Local minima of |func| without a sign change whose polished value is below
    the tangency tolerance are reported as tangential (even-multiplicity) roots.
    """

    if not lo < hi:
        raise DomainError("empty_bracket", f"bracket [{lo}, {hi}] is empty")

    def scalar(x: float) -> float:
        return float(func(np.asarray(x, dtype=float)))

    grid = np.linspace(lo, hi, subintervals + 1)
    values = np.asarray(func(grid), dtype=float)
    roots: list[Root] = []
    taken = np.zeros(grid.size, dtype=bool)

    for index in np.flatnonzero(values == 0.0):
        roots.append(Root(float(grid[index]), 0.0))
        taken[index] = True

    crossings = np.flatnonzero(values[:-1] * values[1:] < 0.0)
    for index in crossings:
        left, right = float(grid[index]), float(grid[index + 1])
        root = optimize.bisect(scalar, left, right, xtol=xtol)
        residual = scalar(root)
        if derivative is not None:
            slope = float(derivative(root))
            if slope != 0.0:
                polished = root - residual / slope
                polished_residual = scalar(polished)
                if left <= polished <= right and abs(polished_residual) <= abs(residual):
                    root, residual = polished, polished_residual
        roots.append(Root(root, residual))
        taken[index] = taken[index + 1] = True

    magnitude = np.abs(values)
    for index in range(1, grid.size - 1):
        if taken[index - 1] or taken[index] or taken[index + 1]:
            continue
        if not (magnitude[index] <= magnitude[index - 1] and magnitude[index] <= magnitude[index + 1]):
            continue
        if np.sign(values[index - 1]) != np.sign(values[index + 1]):
            continue
        # a double root within half a cell keeps |f| below the second difference
        curvature = abs(values[index + 1] - 2.0 * values[index] + values[index - 1])
        if magnitude[index] > curvature:
            continue
        best = optimize.minimize_scalar(
            lambda x: abs(scalar(x)),
            bounds=(float(grid[index - 1]), float(grid[index + 1])),
            method="bounded",
            options={"xatol": xtol},
        )
        if abs(scalar(best.x)) < TANGENCY_TOLERANCE:
            roots.append(Root(float(best.x), scalar(best.x), tangential=True))
            taken[index] = True
    return sorted(roots, key=lambda root: root.t)


def grid_minimum(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    *,
    points: int = SCAN_SUBINTERVALS,
    tol: float = GOLDEN_TOLERANCE,
) -> tuple[float, float]:
    """Minimum of `func` over [lo, hi]: grid search refined by golden section."""

    grid = np.linspace(lo, hi, points)
    values = np.asarray(func(grid), dtype=float)
    index = int(np.argmin(values))
    best_x, best_value = float(grid[index]), float(values[index])
    if 0 < index < points - 1:
        try:
            refined = optimize.minimize_scalar(
                lambda x: float(func(np.asarray(x, dtype=float))),
                bracket=(float(grid[index - 1]), best_x, float(grid[index + 1])),
                method="golden",
                tol=tol,
            )
        except ValueError:
            return best_x, best_value
        if lo <= refined.x <= hi and refined.fun <= best_value:
            return float(refined.x), float(refined.fun)
    return best_x, best_value


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], y: np.ndarray, step: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * step * k1)
    k3 = rhs(y + 0.5 * step * k2)
    k4 = rhs(y + step * k3)
    return y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def fourth_order_gradient(values: np.ndarray, spacing: float) -> np.ndarray:
    """d/ds of uniformly spaced samples: 5-point centered inside, 5-point one-sided at the ends."""

    f = np.asarray(values, dtype=float)
    if f.size < 5:
        return np.gradient(f, spacing)
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * spacing)
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * spacing)
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * spacing)
    out[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * spacing)
    out[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * spacing)
    return out


def observed_order(errors: list[float], spacings: list[float]) -> float | None:
    """Convergence order from the two finest (error, spacing) pairs."""

    if len(errors) < 2 or len(errors) != len(spacings):
        return None
    pairs = sorted(zip(spacings, errors), reverse=True)
    (h_coarse, e_coarse), (h_fine, e_fine) = pairs[-2], pairs[-1]
    if e_coarse <= 0.0 or e_fine <= 0.0 or h_coarse == h_fine:
        return None
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)
