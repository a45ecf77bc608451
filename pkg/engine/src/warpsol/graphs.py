from __future__ import annotations

"""Translating graphs over flat fibers: div(∇u/W) = c/W and the graph flow u_τ = W div(∇u/W).

Fluxes live on cell faces: the normal slope is the one-sided difference across
the face and, in 2-D, the tangential slope is the average of the centered
gradients of the two face nodes. W at a node uses centered gradients.
"""

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Literal

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import ConfigError, InfeasibleError, NonConvergenceError
from .numerics import observed_order


MIN_NODES = 8
NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_ITERATIONS = 50
MIN_DAMPING = 2.0**-20
ARMIJO_SLOPE = 1e-4
CFL_FACTOR = 0.2
GRIM_REAPER_MARGIN = 0.05

Topology = Literal["dirichlet", "periodic"]


@dataclass(frozen=True)
class GraphGrid:
    """Nodal values of u over an interval, square or torus with N nodes per axis.

    Dirichlet grids include the boundary nodes (Δx = L/(N - 1)); periodic
    grids do not repeat the seam node (Δx = L/N).
    """

    d: int
    topology: Topology
    n: int
    lo: float
    hi: float
    u: np.ndarray

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ConfigError("invalid_dimension", f"graph fibers are 1-D or 2-D, got d={self.d}")
        if self.n < MIN_NODES:
            raise ConfigError("too_few_nodes", f"need at least {MIN_NODES} nodes per axis, got {self.n}")
        if not self.lo < self.hi:
            raise ConfigError("invalid_interval", f"empty domain [{self.lo}, {self.hi}]")
        if self.topology not in ("dirichlet", "periodic"):
            raise ConfigError("invalid_topology", f"unknown topology {self.topology!r}")
        if self.u.shape != self.shape:
            raise ConfigError("invalid_values", f"u has shape {self.u.shape}, expected {self.shape}")

    @classmethod
    def dirichlet(cls, lo: float, hi: float, n: int, d: int = 1, u: np.ndarray | None = None) -> "GraphGrid":
        shape = (n,) * d
        values = np.zeros(shape) if u is None else np.asarray(u, dtype=float).reshape(shape)
        return cls(d, "dirichlet", n, float(lo), float(hi), values)

    @classmethod
    def periodic(cls, length: float, n: int, d: int = 1, u: np.ndarray | None = None, lo: float = 0.0) -> "GraphGrid":
        shape = (n,) * d
        values = np.zeros(shape) if u is None else np.asarray(u, dtype=float).reshape(shape)
        return cls(d, "periodic", n, float(lo), float(lo + length), values)

    @classmethod
    def grim_reaper(cls, n: int, d: int = 1, margin: float = GRIM_REAPER_MARGIN, fill: Literal["zero", "exact"] = "zero") -> "GraphGrid":
        """Dirichlet data of u = -log cos x on (-π/2 + margin, π/2 - margin), interior zero or exact."""

        half = math.pi / 2 - margin
        grid = cls.dirichlet(-half, half, n, d)
        exact = grim_reaper_values(grid)
        if fill == "exact":
            return grid.with_values(exact)
        values = np.zeros(grid.shape)
        boundary = ~grid.interior_mask()
        values[boundary] = exact[boundary]
        return grid.with_values(values)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def spacing(self) -> float:
        divisions = self.n - 1 if self.topology == "dirichlet" else self.n
        return (self.hi - self.lo) / divisions

    def axis(self) -> np.ndarray:
        return self.lo + self.spacing * np.arange(self.n)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        axis = self.axis()
        if self.d == 1:
            return (axis,)
        return tuple(np.meshgrid(axis, axis, indexing="ij"))

    def interior_mask(self) -> np.ndarray:
        """Nodes carrying unknowns: all nodes on a torus, non-boundary nodes otherwise."""

        mask = np.ones(self.shape, dtype=bool)
        if self.topology == "dirichlet":
            for axis in range(self.d):
                index = [slice(None)] * self.d
                index[axis] = 0
                mask[tuple(index)] = False
                index[axis] = -1
                mask[tuple(index)] = False
        return mask

    def with_values(self, u: np.ndarray) -> "GraphGrid":
        return GraphGrid(self.d, self.topology, self.n, self.lo, self.hi, np.asarray(u, dtype=float).reshape(self.shape))

    @cached_property
    def stencil(self) -> "Stencil":
        return Stencil.build(self)

    def to_frame(self, residual: np.ndarray | None = None) -> pd.DataFrame:
        columns: dict[str, np.ndarray] = {}
        for name, coordinate in zip(("x", "y"), self.coordinates()):
            columns[name] = coordinate.ravel()
        columns["u"] = self.u.ravel()
        if residual is not None:
            columns["residual"] = np.asarray(residual).ravel()
        return pd.DataFrame(columns)


def grim_reaper_values(grid: GraphGrid) -> np.ndarray:
    x = grid.coordinates()[0]
    return -np.log(np.cos(x))


@dataclass(frozen=True)
class _AxisOperators:
    normal: sparse.csr_matrix
    tangential: sparse.csr_matrix | None
    divergence: sparse.csr_matrix


@dataclass(frozen=True)
class Stencil:
    """Sparse difference operators acting on the flattened nodal vector."""

    axes: list[_AxisOperators]
    gradients: list[sparse.csr_matrix]
    free: np.ndarray
    size: int
    spacing: float

    @classmethod
    def build(cls, grid: GraphGrid) -> "Stencil":
        index = np.arange(grid.size).reshape(grid.shape)
        gradients = [_centered_gradient(grid, index, axis) for axis in range(grid.d)]
        axes = []
        for axis in range(grid.d):
            left, right = _face_nodes(grid, index, axis)
            faces = left.size
            rows = np.arange(faces)
            scale = 1.0 / grid.spacing
            pick_left = sparse.csr_matrix((np.ones(faces), (rows, left)), shape=(faces, grid.size))
            pick_right = sparse.csr_matrix((np.ones(faces), (rows, right)), shape=(faces, grid.size))
            normal = (pick_right - pick_left) * scale
            tangential = None
            if grid.d == 2:
                other = gradients[1 - axis]
                tangential = 0.5 * (pick_left + pick_right) @ other
            axes.append(_AxisOperators(normal.tocsr(), tangential, (-normal.T).tocsr()))
        free = np.flatnonzero(grid.interior_mask().ravel())
        return cls(axes, gradients, free, grid.size, grid.spacing)


def _face_nodes(grid: GraphGrid, index: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    if grid.topology == "periodic":
        return index.ravel(), np.roll(index, -1, axis=axis).ravel()
    left = np.take(index, np.arange(grid.n - 1), axis=axis)
    right = np.take(index, np.arange(1, grid.n), axis=axis)
    return left.ravel(), right.ravel()


def _centered_gradient(grid: GraphGrid, index: np.ndarray, axis: int) -> sparse.csr_matrix:
    if grid.topology == "periodic":
        ahead, behind = np.roll(index, -1, axis=axis), np.roll(index, 1, axis=axis)
        weight = np.full(grid.size, 1.0 / (2.0 * grid.spacing))
    else:
        positions = np.arange(grid.n)
        ahead = np.take(index, np.minimum(positions + 1, grid.n - 1), axis=axis)
        behind = np.take(index, np.maximum(positions - 1, 0), axis=axis)
        # one-sided at the boundary rows, which carry no unknowns
        steps = np.where((positions == 0) | (positions == grid.n - 1), 1.0, 2.0)
        shape = [1] * grid.d
        shape[axis] = grid.n
        weight = np.broadcast_to(1.0 / (steps.reshape(shape) * grid.spacing), grid.shape).ravel()
    rows = index.ravel()
    data = np.concatenate([weight, -weight])
    cols = np.concatenate([ahead.ravel(), behind.ravel()])
    return sparse.csr_matrix((data, (np.concatenate([rows, rows]), cols)), shape=(grid.size, grid.size))


@dataclass(frozen=True)
class _Evaluation:
    divergence: np.ndarray
    W: np.ndarray
    jacobian: sparse.csr_matrix | None = None


def _evaluate(stencil: Stencil, u: np.ndarray, c: float, jacobian: bool = False) -> _Evaluation:
    divergence = np.zeros(stencil.size)
    blocks = []
    for operators in stencil.axes:
        pn = operators.normal @ u
        pt = operators.tangential @ u if operators.tangential is not None else np.zeros_like(pn)
        root = np.sqrt(1.0 + pn**2 + pt**2)
        divergence += operators.divergence @ (pn / root)
        if jacobian:
            cubed = root**3
            flux = sparse.diags((1.0 + pt**2) / cubed) @ operators.normal
            if operators.tangential is not None:
                flux = flux + sparse.diags(-pn * pt / cubed) @ operators.tangential
            blocks.append(operators.divergence @ flux)
    slopes = [gradient @ u for gradient in stencil.gradients]
    W = np.sqrt(1.0 + sum(slope**2 for slope in slopes))
    matrix = None
    if jacobian:
        matrix = sum(blocks[1:], blocks[0])
        for slope, gradient in zip(slopes, stencil.gradients):
            matrix = matrix + sparse.diags(c * slope / W**3) @ gradient
        matrix = matrix.tocsr()
    return _Evaluation(divergence, W, matrix)


@dataclass(frozen=True)
class TranslatorResidual:
    values: np.ndarray
    sup: float

    def to_dict(self) -> dict[str, Any]:
        return {"sup": self.sup, "nodes": int(self.values.size)}


def translator_residual(grid: GraphGrid, c: float) -> TranslatorResidual:
    """div(∇u/W) - c/W at the unknown nodes; boundary nodes report 0."""

    stencil = grid.stencil
    evaluation = _evaluate(stencil, grid.u.ravel(), c)
    values = np.zeros(grid.size)
    values[stencil.free] = (evaluation.divergence - c / evaluation.W)[stencil.free]
    return TranslatorResidual(values.reshape(grid.shape), float(np.max(np.abs(values))))


@dataclass(frozen=True)
class TranslatorSolution:
    grid: GraphGrid
    c: float
    residual_sup: float
    newton_iters: int
    history: list[float] = field(default_factory=list)
    start: Literal["given", "linearized"] = "given"

    def to_dict(self) -> dict[str, Any]:
        return {
            "c": self.c,
            "d": self.grid.d,
            "N": self.grid.n,
            "topology": self.grid.topology,
            "spacing": self.grid.spacing,
            "iters": self.newton_iters,
            "residual_sup": self.residual_sup,
            "history": list(self.history),
            "start": self.start,
        }


def linearized_start(grid: GraphGrid, c: float) -> np.ndarray | None:
    """u = -log(w)/c, where w solves Δw + c²w = 0 with w = exp(-c u) on the boundary.

    In 1-D the substitution turns u'' = c(1 + u'²) into w'' + c²w = 0. Returns
    None for c = 0, on a torus, or when the discrete w is not positive.
    """

    if c == 0.0 or grid.topology == "periodic":
        return None
    stencil = grid.stencil
    blocks = [operators.divergence @ operators.normal for operators in stencil.axes]
    helmholtz = (sum(blocks[1:], blocks[0]) + c**2 * sparse.identity(grid.size)).tocsr()
    free = stencil.free
    fixed = np.setdiff1d(np.arange(grid.size), free)
    given = grid.u.ravel()
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        w = np.exp(-c * given)
        w[free] = spsolve(helmholtz[free][:, free].tocsc(), -(helmholtz[free][:, fixed] @ w[fixed]))
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            return None
        u = -np.log(w) / c
    u[fixed] = given[fixed]
    return u


def solve_translator(
    grid: GraphGrid,
    c: float,
    *,
    tol: float = NEWTON_TOLERANCE,
    max_iterations: int = NEWTON_MAX_ITERATIONS,
) -> TranslatorSolution:
    """Damped Newton on the discrete translator equation.

    The iteration starts from grid.u or from `linearized_start`, whichever has
    the smaller residual, and backtracks on ½‖F‖² with the Armijo rule; the
    stopping test is on the sup-norm. Dirichlet grids keep their boundary
    values. A torus only admits c = 0, and then the zero-mean representative
    is returned.
    """

    periodic = grid.topology == "periodic"
    if periodic and c != 0.0:
        raise InfeasibleError(
            "closed_fiber_translator",
            f"no translating graph with c={c} over a closed fiber",
            hint="integrating div(∇u/W) = c/W over a closed fiber forces ∫ c/W = 0, so c must vanish",
        )
    stencil = grid.stencil
    free = stencil.free
    u = grid.u.ravel().astype(float).copy()
    if periodic:
        u -= u.mean()

    def residual(values: np.ndarray) -> tuple[np.ndarray, _Evaluation]:
        with np.errstate(all="ignore"):
            evaluation = _evaluate(stencil, values, c, jacobian=True)
        return (evaluation.divergence - c / evaluation.W)[free], evaluation

    current, evaluation = residual(u)
    start: Literal["given", "linearized"] = "given"
    predicted = linearized_start(grid, c)
    if predicted is not None:
        candidate, candidate_evaluation = residual(predicted)
        if np.all(np.isfinite(candidate)) and (
            not np.all(np.isfinite(current)) or np.linalg.norm(candidate) < np.linalg.norm(current)
        ):
            u, current, evaluation, start = predicted, candidate, candidate_evaluation, "linearized"

    norm = float(np.max(np.abs(current)))
    merit = 0.5 * float(current @ current)
    history = [norm]
    iterations = 0
    while norm > tol:
        if iterations >= max_iterations:
            raise NonConvergenceError(
                "newton_iteration_cap",
                f"Newton stopped after {iterations} iterations at residual {norm:.3e}",
                residual_sup=norm,
                history=history,
            )
        jacobian = evaluation.jacobian[free][:, free]
        if periodic:
            ones = np.ones((free.size, 1))
            bordered = sparse.bmat([[jacobian, sparse.csr_matrix(ones)], [sparse.csr_matrix(ones.T), None]]).tocsc()
            rhs = np.concatenate([-current, [-u[free].sum()]])
            direction = spsolve(bordered, rhs)[:-1]
        else:
            direction = spsolve(jacobian.tocsc(), -current)
        if not np.all(np.isfinite(direction)):
            raise NonConvergenceError("singular_jacobian", "Newton direction is not finite", residual_sup=norm, history=history)

        damping = 1.0
        while True:
            trial = u.copy()
            trial[free] += damping * direction
            trial_residual, trial_evaluation = residual(trial)
            trial_merit = 0.5 * float(trial_residual @ trial_residual)
            sufficient = trial_merit <= (1.0 - 2.0 * ARMIJO_SLOPE * damping) * merit
            if np.isfinite(trial_merit) and (sufficient or float(np.max(np.abs(trial_residual))) <= tol):
                break
            damping *= 0.5
            if damping < MIN_DAMPING:
                raise NonConvergenceError(
                    "newton_stagnation",
                    f"line search damping fell below 2^-20 at residual {norm:.3e}",
                    residual_sup=norm,
                    history=history,
                    last_iterate=u.tolist() if u.size <= 64 else None,
                )
        u, current, evaluation, merit = trial, trial_residual, trial_evaluation, trial_merit
        norm = float(np.max(np.abs(current)))
        history.append(norm)
        iterations += 1

    return TranslatorSolution(grid.with_values(u), c, norm, iterations, history, start)


def _check_step(grid: GraphGrid, dtau: float) -> None:
    bound = CFL_FACTOR * grid.spacing**2
    if not 0.0 < dtau <= bound:
        raise ConfigError(
            "unstable_time_step",
            f"explicit graph flow needs 0 < dτ <= {CFL_FACTOR}·Δx² = {bound:.3e}, got {dtau}",
        )


def _velocity(stencil: Stencil, u: np.ndarray) -> np.ndarray:
    evaluation = _evaluate(stencil, u, 0.0)
    return evaluation.W * evaluation.divergence


def parabolic_step(grid: GraphGrid, dtau: float, boundary_velocity: float = 0.0) -> GraphGrid:
    """One explicit Euler step of u_τ = W div(∇u/W); Dirichlet data moves at boundary_velocity."""

    _check_step(grid, dtau)
    stencil = grid.stencil
    u = grid.u.ravel()
    updated = u + boundary_velocity * dtau
    updated[stencil.free] = u[stencil.free] + dtau * _velocity(stencil, u)[stencil.free]
    return grid.with_values(updated)


@dataclass(frozen=True)
class SelfSimilarityReport:
    c: float
    horizon: float
    dtau: float
    steps: int
    deviation: float

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.c, "horizon": self.horizon, "dtau": self.dtau, "steps": self.steps, "deviation": self.deviation}


def self_similarity_check(solution: TranslatorSolution, horizon: float, dtau: float) -> SelfSimilarityReport:
    """Flow the graph for `horizon` and report sup over τ of sup_x |u(τ) - u(0) - cτ|."""

    grid = solution.grid
    _check_step(grid, dtau)
    steps = max(1, int(round(horizon / dtau)))
    stencil = grid.stencil
    free = stencil.free
    start = grid.u.ravel().copy()
    u = start.copy()
    deviation = 0.0
    for index in range(1, steps + 1):
        velocity = _velocity(stencil, u)
        u = u + solution.c * dtau
        u[free] = u[free] - solution.c * dtau + dtau * velocity[free]
        deviation = max(deviation, float(np.max(np.abs(u - start - solution.c * index * dtau))))
    return SelfSimilarityReport(solution.c, steps * dtau, dtau, steps, deviation)


def flow_consistency(solution: TranslatorSolution) -> float:
    """sup_x |∂u/∂τ - c| at τ = 0 over the unknown nodes."""

    stencil = solution.grid.stencil
    velocity = _velocity(stencil, solution.grid.u.ravel())
    return float(np.max(np.abs(velocity[stencil.free] - solution.c)))


def divergence_sum(grid: GraphGrid) -> float:
    """Sum of the discrete div(∇u/W) over a torus; zero up to rounding."""

    evaluation = _evaluate(grid.stencil, grid.u.ravel(), 0.0)
    return float(evaluation.divergence.sum())


def shared_nodes(coarse: GraphGrid, fine: GraphGrid) -> np.ndarray:
    """Fine-grid values at the coarse nodes, for Dirichlet refinements N -> 2N - 1."""

    if fine.n != 2 * coarse.n - 1 or coarse.topology != "dirichlet" or fine.d != coarse.d:
        raise ConfigError("incompatible_grids", f"expected a refinement N={coarse.n} -> {2 * coarse.n - 1}, got {fine.n}")
    index = (slice(None, None, 2),) * fine.d
    return fine.u[index]


def grid_order(errors: list[float], grids: list[GraphGrid]) -> float | None:
    return observed_order(errors, [grid.spacing for grid in grids])
