"""Direct step-by-step integrator for linear problems with time-only order.

At node n the governing equation, with the history sum split into its known
part and the term carrying the unknown current velocity, is coupled to the
average-acceleration update relations. That yields one 3x3 linear system

    L_n x_n = R_n x_{n-1} + (g_n, 0, 0)

per step in x = (q, udot, u). The weight row of each step is fixed by the
order value at t_n, which is why the order must not depend on the state
here; anything else goes through the implicit solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linsolve import solve3
from .errors import OrderDomainError, StepFailureError
from .model import (
    AlphaKind,
    OscillatorProblem,
    SolutionTrace,
    StepState,
    initial_acceleration,
)
from .vo_core import CoefficientRow, VelocityHistory, coefficient_row

__all__ = [
    "StepMatrices",
    "step_matrices",
    "step_matrices_from_weights",
    "load_term",
    "build_step",
    "solve_step",
    "solve",
]

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class StepMatrices:
    """Left and right matrices plus the scalar load of one step system."""

    L: np.ndarray
    R: np.ndarray
    g: float


def step_matrices_from_weights(
    a1: float, a2: float, a3: float, h: float, c_nn: float, c_nm1: float
) -> tuple[np.ndarray, np.ndarray]:
    """Step matrices from raw coefficient values.

    c_nn is the weight of the current step, c_nm1 the one before it (zero
    for the first step). Rows two and three encode the average-acceleration
    update relations and depend only on h.
    """
    half_h2 = 0.25 * h * h
    half_h = 0.5 * h
    left = np.array(
        [
            [a1, 0.5 * a2 * c_nn, a3],
            [half_h2, -h, 1.0],
            [-half_h, 1.0, 0.0],
        ]
    )
    right = np.array(
        [
            [0.0, -0.5 * a2 * (c_nm1 + c_nn), 0.0],
            [-half_h2, 0.0, 1.0],
            [half_h, 1.0, 0.0],
        ]
    )
    return left, right


def step_matrices(
    problem: OscillatorProblem, n: int, row: CoefficientRow
) -> tuple[np.ndarray, np.ndarray]:
    """L and R of step n with coefficients evaluated at t_n."""
    if row.n != n:
        raise IndexError(f"weight row built for node {row.n}, requested node {n}")
    tn = n * problem.grid.h
    c_nm1 = float(row.c[n - 2]) if n >= 2 else 0.0
    return step_matrices_from_weights(
        float(problem.a1(tn)),
        float(problem.a2(tn)),
        float(problem.a3(tn)),
        problem.grid.h,
        float(row.c[n - 1]),
        c_nm1,
    )


def load_term(
    problem: OscillatorProblem, n: int, row: CoefficientRow, hist: VelocityHistory
) -> float:
    """Load g_n: the forcing minus the fully known part of the history sum.

    The known part covers the means of steps 1 .. n-2 plus the half of step
    n-1's mean contributed by the velocity at node n-2; the halves carrying
    udot_{n-1} and udot_n live in the R and L matrices. Empty for n <= 1.
    """
    if len(hist) < n - 1:
        raise IndexError(
            f"history holds {len(hist)} steps, load term of node {n} needs {n - 1}"
        )
    tn = n * problem.grid.h
    g = float(problem.p(tn))
    if n >= 2:
        known = 0.5 * float(row.c[n - 2]) * hist.endpoint(n - 2)
        if n > 2:
            known += float(row.c[: n - 2] @ hist.udot_mean[: n - 2])
        g -= float(problem.a2(tn)) * known
    return g


def build_step(
    n: int, problem: OscillatorProblem, row: CoefficientRow, hist: VelocityHistory
) -> StepMatrices:
    left, right = step_matrices(problem, n, row)
    return StepMatrices(L=left, R=right, g=load_term(problem, n, row, hist))


def solve_step(mats: StepMatrices, prev: StepState, step: int | None = None) -> StepState:
    """Advance one step by solving the 3x3 system."""
    rhs = mats.R @ np.asarray(prev, dtype=float)
    rhs[0] += mats.g
    x, cond = solve3(mats.L, rhs)
    if not np.all(np.isfinite(x)) or cond > _COND_LIMIT:
        raise StepFailureError(
            f"step system singular or ill-conditioned (estimate {cond:.3e})",
            step=step,
        )
    return StepState(q=float(x[0]), udot=float(x[1]), u=float(x[2]))


def _order_at_nodes(problem: OscillatorProblem) -> np.ndarray:
    """Order values at every node, evaluated without state.

    The state arguments are passed as nan to hold the time-only promise to
    account: an order function that actually reads them produces nan or
    raises, and either is reported as an order-domain failure. The node-0
    value is recorded but not range-checked; no weight row uses it.
    """
    N = problem.grid.N
    h = problem.grid.h
    out = np.empty(N + 1)
    nan = math.nan
    for n in range(N + 1):
        try:
            a = float(problem.alpha.eval(n * h, nan, nan))
        except OrderDomainError:
            raise
        except Exception as exc:
            raise OrderDomainError(
                f"order function raised at node {n} when evaluated without state; "
                f"a time-only order must ignore u and udot ({exc!r})",
                node=n,
            ) from exc
        if n >= 1 and not (0.0 < a < 1.0):
            raise OrderDomainError(
                f"fractional order {a!r} outside (0, 1) at node {n}; nan here "
                "usually means the order function reads the state despite being "
                "declared time-only",
                node=n,
            )
        out[n] = a
    return out


def solve(problem: OscillatorProblem, record_spectral_radius: bool = False) -> SolutionTrace:
    """Integrate the problem over its whole grid.

    Only linear problems with a TIME_ONLY order are accepted. With
    record_spectral_radius the per-step amplification matrix is formed and
    its spectral radius stored in the trace (None otherwise).
    """
    if problem.alpha.kind is not AlphaKind.TIME_ONLY:
        raise ValueError(
            "explicit stepping needs a time-only order; state-dependent orders "
            "require the implicit solver"
        )
    if problem.f_nl is not None:
        raise ValueError(
            "explicit stepping handles linear restoring only; use the implicit "
            "solver for nonlinear terms"
        )

    grid = problem.grid
    h, N = grid.h, grid.N
    alphas = _order_at_nodes(problem)

    q = np.empty(N + 1)
    ud = np.empty(N + 1)
    u = np.empty(N + 1)
    q[0] = initial_acceleration(problem)
    ud[0] = problem.v0
    u[0] = problem.u0

    rho = np.empty(N) if record_spectral_radius else None
    if record_spectral_radius:
        from .stability import amplification_from_matrices, spectral_radius

    hist = VelocityHistory(problem.v0, capacity=N)
    prev = StepState(q=float(q[0]), udot=float(ud[0]), u=float(u[0]))
    for n in range(1, N + 1):
        row = coefficient_row(n, h, float(alphas[n]))
        mats = build_step(n, problem, row, hist)
        state = solve_step(mats, prev, step=n)
        if rho is not None:
            rho[n - 1] = spectral_radius(
                amplification_from_matrices(mats.L, mats.R, step=n)
            )
        q[n], ud[n], u[n] = state.q, state.udot, state.u
        hist.append(state.udot)
        prev = state

    return SolutionTrace(
        t=grid.times(),
        u=u,
        udot=ud,
        uddot=q,
        alpha_used=alphas,
        udot_mean=hist.udot_mean.copy(),
        rho=rho,
    )
