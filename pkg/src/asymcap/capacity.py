"""Capacity of a channel decoded with a statistically perturbed codebook.

The decoder never sees the encoder's codeword symbol X, only its perturbed
copy U, so the relevant single-letter quantity is I(U; Y) under the joint
p(u, y) = sum_x p(x) p(y|x) p(u|x).  This module maximizes that quantity
over the input distribution p(x) three ways: a closed form for the binary
symmetric case, an exhaustive simplex-lattice search, and multi-start
projected gradient ascent.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .info import (
    DimensionMismatch,
    DomainError,
    Pmf,
    TransitionMatrix,
    _entropy_bits,
    binary_entropy,
)
from .rng import stream

__all__ = [
    "AlphabetLimitError",
    "SolverOptions",
    "CapacityResult",
    "capacity_closed_form_bsc",
    "capacity_grid",
    "capacity_optimize",
    "capacity_gap",
    "sweep_capacity_surface",
    "input_mutual_information",
    "mutual_information_gradient",
    "simplex_project",
]

SOLVER_CLOSED_FORM = "closed_form"
SOLVER_GRID = "grid"
SOLVER_GRADIENT = "gradient"

GRID_INPUT_LIMIT = 4          # exhaustive search refuses larger input alphabets
MAX_GRID_POINTS = 20_000_000  # lattice size guard
_LOG2E = float(np.log2(np.e))
_FIXED_STEP = 0.5
# Candidates whose objective is within this of the best are treated as tied;
# the uniform start then wins, which pins down the maximizer on flat
# objectives (p1 or p2 equal to 1/2) where every input distribution is optimal.
_TIE_TOL = 1e-12
# Fixed Philox key for restart sampling keeps the solver deterministic.
_RESTART_KEY = 0x243F6A8885A308D3


class AlphabetLimitError(ValueError):
    """Input alphabet too large for exhaustive grid search."""


@dataclass(frozen=True)
class SolverOptions:
    """Tuning knobs shared by the capacity solvers."""

    grid_resolution: float = 1e-3
    restarts: int = 8
    max_iterations: int = 300
    convergence_tol: float = 1e-9
    step_size_rule: str = "backtracking"

    def __post_init__(self):
        if not 0.0 < self.grid_resolution <= 1.0:
            raise DomainError("grid_resolution must lie in (0, 1]")
        if self.restarts < 1:
            raise DomainError("restarts must be at least 1")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be at least 1")
        if self.convergence_tol <= 0.0:
            raise DomainError("convergence_tol must be positive")
        if self.step_size_rule not in ("fixed", "backtracking"):
            raise DomainError(
                f"step_size_rule must be 'fixed' or 'backtracking', got {self.step_size_rule!r}"
            )


@dataclass(frozen=True)
class CapacityResult:
    """Solver output: value, maximizing input law, and convergence data.

    residual is the projected-gradient stationarity norm for the gradient
    solver, the lattice spacing for the grid solver, and 0 for the closed
    form.  Non-convergence of the gradient solver shows up as residual
    above the tolerance with iterations equal to max_iterations.
    """

    capacity: float
    argmax_px: np.ndarray
    solver: str
    iterations: int
    residual: float

    def __post_init__(self):
        arr = np.array(self.argmax_px, dtype=float, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "argmax_px", arr)


def capacity_closed_form_bsc(p1: float, p2: float) -> CapacityResult:
    """Closed form for a binary symmetric channel and perturbation.

    The two flips compose into one binary symmetric link of crossover
    q = p1 + p2 - 2 p1 p2, so the value is 1 - H(q), attained by the
    uniform input.
    """
    p1 = float(p1)
    p2 = float(p2)
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"{name}={p!r} outside [0, 1]")
    q = p1 + p2 - 2.0 * p1 * p2
    cap = 1.0 - binary_entropy(q)
    return CapacityResult(cap, np.array([0.5, 0.5]), SOLVER_CLOSED_FORM, 0, 0.0)


def _kernel(pyx: TransitionMatrix, pux: TransitionMatrix):
    """Flattened map from p(x) to p(u, y): q = p @ A with A (nx, nu*ny)."""
    if pyx.input_size != pux.input_size:
        raise DimensionMismatch(
            f"channel and perturbation input sizes disagree: "
            f"{pyx.input_size} vs {pux.input_size}"
        )
    nu = pux.output_size
    ny = pyx.output_size
    a = pux.matrix[:, :, None] * pyx.matrix[:, None, :]
    return a.reshape(pyx.input_size, nu * ny), nu, ny


def _mi_batch(q: np.ndarray, nu: int, ny: int) -> np.ndarray:
    """I(U;Y) in bits for each row of q (rows are flattened (u, y) tables)."""
    t = q.reshape(-1, nu, ny)
    qu = t.sum(axis=2)
    qy = t.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = t * (
            np.log2(t) - np.log2(qu)[:, :, None] - np.log2(qy)[:, None, :]
        )
    return np.where(t > 0, contrib, 0.0).sum(axis=(1, 2))


def input_mutual_information(
    p, pyx: TransitionMatrix, pux: TransitionMatrix
) -> float:
    """I(U;Y) induced by the (not necessarily normalized) input weights p.

    Accepting unnormalized weights keeps the function usable for
    finite-difference probes slightly off the simplex.
    """
    a, nu, ny = _kernel(pyx, pux)
    p = np.asarray(p, dtype=float)
    if p.shape != (a.shape[0],):
        raise DimensionMismatch(
            f"input weights must have shape ({a.shape[0]},), got {p.shape}"
        )
    return float(_mi_batch(p @ a, nu, ny)[0])


def mutual_information_gradient(
    p, pyx: TransitionMatrix, pux: TransitionMatrix
) -> np.ndarray:
    """Exact gradient of input_mutual_information at p.

    Component x is sum_{u,y} p(y|x) p(u|x) log2[q(u,y) / (q(u) q(y))]
    minus log2(e); cells with q(u,y) = 0 are skipped.
    """
    a, nu, ny = _kernel(pyx, pux)
    p = np.asarray(p, dtype=float)
    q = p @ a
    t = q.reshape(nu, ny)
    qu = t.sum(axis=1)
    qy = t.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log2(t) - np.log2(qu)[:, None] - np.log2(qy)[None, :]
    logs = np.where(t > 0, logs, 0.0)
    return a @ logs.ravel() - _LOG2E


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u * idx > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _composition_blocks(k: int, d: int):
    """Integer compositions of k into d parts, in lexicographic order.

    Yields int64 arrays block by block so grids never materialize at once.
    """
    if d == 1:
        yield np.array([[k]], dtype=np.int64)
        return
    if d == 2:
        a = np.arange(k + 1, dtype=np.int64)
        yield np.stack([a, k - a], axis=1)
        return
    for c0 in range(k + 1):
        for sub in _composition_blocks(k - c0, d - 1):
            pre = np.full((sub.shape[0], 1), c0, dtype=np.int64)
            yield np.hstack([pre, sub])


def capacity_grid(
    pyx: TransitionMatrix, pux: TransitionMatrix, resolution: float = 1e-3
) -> CapacityResult:
    """Exhaustive search over the simplex lattice with the given spacing.

    Ties are broken by the first lattice point in lexicographic order.
    Refuses input alphabets larger than GRID_INPUT_LIMIT.
    """
    nx = pyx.input_size
    if nx > GRID_INPUT_LIMIT:
        raise AlphabetLimitError(
            f"grid search supports input alphabets up to {GRID_INPUT_LIMIT}, got {nx}"
        )
    if not 0.0 < resolution <= 1.0:
        raise DomainError("resolution must lie in (0, 1]")
    k = max(1, round(1.0 / resolution))
    if comb(k + nx - 1, nx - 1) > MAX_GRID_POINTS:
        raise DomainError(
            f"lattice would exceed {MAX_GRID_POINTS} points; coarsen the resolution"
        )
    a, nu, ny = _kernel(pyx, pux)

    best_val = -np.inf
    best_p = None
    total = 0
    for blk in _composition_blocks(k, nx):
        pts = blk.astype(float) / k
        vals = _mi_batch(pts @ a, nu, ny)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_p = pts[i].copy()
        total += blk.shape[0]
    return CapacityResult(best_val, best_p, SOLVER_GRID, total, 1.0 / k)


def _ascend(p0: np.ndarray, a: np.ndarray, nu: int, ny: int, opts: SolverOptions):
    """One projected-gradient-ascent run; returns (p, value, steps, residual)."""

    def obj(p):
        return float(_mi_batch(p @ a, nu, ny)[0])

    def grad(p):
        t = (p @ a).reshape(nu, ny)
        qu = t.sum(axis=1)
        qy = t.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log2(t) - np.log2(qu)[:, None] - np.log2(qy)[None, :]
        logs = np.where(t > 0, logs, 0.0)
        return a @ logs.ravel() - _LOG2E

    p = p0.copy()
    steps = 0
    j0 = None
    t_init = 1.0  # warm start: the step accepted last pass, doubled
    for _ in range(opts.max_iterations):
        g = grad(p)
        if np.linalg.norm(simplex_project(p + g) - p) < opts.convergence_tol:
            break
        if opts.step_size_rule == "fixed":
            p = simplex_project(p + _FIXED_STEP * g)
            steps += 1
            continue
        if j0 is None:
            j0 = obj(p)
        t_step = t_init
        moved = False
        while t_step > 1e-14:
            cand = simplex_project(p + t_step * g)
            j_cand = obj(cand)
            if j_cand >= j0 + 1e-4 * float(g @ (cand - p)):
                p = cand
                j0 = j_cand
                t_init = min(1.0, 2.0 * t_step)
                moved = True
                break
            t_step *= 0.5
        if not moved:
            # No float-representable ascent step exists, and the state is
            # unchanged, so every remaining pass would stall identically;
            # account them without running them.
            steps = opts.max_iterations
            break
        steps += 1
    residual = float(np.linalg.norm(simplex_project(p + grad(p)) - p))
    return p, obj(p), steps, residual


def capacity_optimize(
    pyx: TransitionMatrix,
    pux: TransitionMatrix,
    options: SolverOptions | None = None,
) -> CapacityResult:
    """Multi-start projected gradient ascent over the input simplex.

    Runs from the uniform distribution plus `options.restarts` points
    sampled uniformly from the simplex (fixed internal key, so the result
    is a deterministic function of the inputs).  Among runs whose values
    tie within 1e-12 the uniform start wins, then earlier restarts.
    """
    opts = options or SolverOptions()
    a, nu, ny = _kernel(pyx, pux)
    nx = a.shape[0]

    rng = stream(_RESTART_KEY)
    starts = [np.full(nx, 1.0 / nx)]
    for _ in range(opts.restarts):
        e = -np.log1p(-rng.random(nx))  # unit exponentials -> flat Dirichlet
        starts.append(e / e.sum())

    runs = [_ascend(s, a, nu, ny, opts) for s in starts]
    best = max(r[1] for r in runs)
    winner = min(i for i, r in enumerate(runs) if r[1] >= best - _TIE_TOL)
    p, val, steps, residual = runs[winner]
    return CapacityResult(val, p, SOLVER_GRADIENT, steps, residual)


def capacity_gap(px: Pmf, pyx: TransitionMatrix, pux: TransitionMatrix) -> float:
    """Rate lost to the perturbation: I(X;Y) - I(U;Y) = I(X;Y|U), in bits.

    Computed exactly from the triple joint p(x, u, y) = p(x) p(y|x) p(u|x);
    nonnegative because U depends on (X, Y) only through X.
    """
    if not (px.size == pyx.input_size == pux.input_size):
        raise DimensionMismatch(
            f"input alphabets disagree: px has {px.size}, channel has "
            f"{pyx.input_size}, perturbation has {pux.input_size}"
        )
    triple = np.einsum("x,xy,xu->xuy", px.probs, pyx.matrix, pux.matrix)
    h_xu = _entropy_bits(triple.sum(axis=2))
    h_uy = _entropy_bits(triple.sum(axis=0))
    h_u = _entropy_bits(triple.sum(axis=(0, 2)))
    h_xuy = _entropy_bits(triple)
    gap = h_xu + h_uy - h_u - h_xuy
    if -1e-9 < gap < 0.0:  # roundoff below zero
        return 0.0
    return float(gap)


def sweep_capacity_surface(p1_grid, p2_grid) -> list[tuple[float, float, float, float]]:
    """Closed-form capacity and gap on a (p1, p2) grid, row-major.

    Both grids must lie within [0, 0.5].  Rows are
    (p1, p2, 1 - H(q), H(q) - H(p1)) with q = p1 + p2 - 2 p1 p2.
    """
    p1s = [float(p) for p in p1_grid]
    p2s = [float(p) for p in p2_grid]
    for p in p1s + p2s:
        if not 0.0 <= p <= 0.5:
            raise DomainError(f"grid value {p!r} outside [0, 0.5]")
    rows = []
    for p1 in p1s:
        for p2 in p2s:
            q = p1 + p2 - 2.0 * p1 * p2
            hq = binary_entropy(q)
            rows.append((p1, p2, 1.0 - hq, hq - binary_entropy(p1)))
    return rows
