"""Problem definitions and result containers shared by both solvers.

The governing equation is the single-degree-of-freedom oscillator

    a1(t) u'' + a2(t) D^alpha(t,u,u') u + a3(t) u + f_nl(u, u') = p(t)

with initial displacement u0 and velocity v0, where D^alpha is the
variable-order history derivative from vo_core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DegenerateProblemError, OrderDomainError
from .vo_core import Grid, coefficient_row

__all__ = [
    "AlphaKind",
    "AlphaSpec",
    "OscillatorProblem",
    "StepState",
    "SolutionTrace",
    "as_coefficient",
    "initial_acceleration",
    "discrete_residuals",
]


class AlphaKind(Enum):
    TIME_ONLY = "time-only"
    STATE_DEPENDENT = "state-dependent"


@dataclass(frozen=True)
class AlphaSpec:
    """Order function alpha(t, u, udot) with a declared dependence kind.

    TIME_ONLY promises that eval ignores the state arguments; the explicit
    solver relies on this to fix the weight row of each step up front,
    while STATE_DEPENDENT orders force the per-step root solve.
    """

    kind: AlphaKind
    eval: Callable[[float, float, float], float]

    @classmethod
    def of_time(cls, fn: Callable[[float], float]) -> "AlphaSpec":
        return cls(AlphaKind.TIME_ONLY, lambda t, u, udot: fn(t))

    @classmethod
    def of_state(cls, fn: Callable[[float, float, float], float]) -> "AlphaSpec":
        return cls(AlphaKind.STATE_DEPENDENT, fn)

    @classmethod
    def constant(cls, value: float) -> "AlphaSpec":
        v = float(value)
        return cls(AlphaKind.TIME_ONLY, lambda t, u, udot: v)

    def value_at(
        self,
        t: float,
        u: float,
        udot: float,
        node: int | None = None,
        trial_q: float | None = None,
    ) -> float:
        """Evaluate and range-check the order; (0, 1) is enforced strictly."""
        a = float(self.eval(t, u, udot))
        if not (0.0 < a < 1.0):
            where = f" at node {node}" if node is not None else f" at t={t}"
            raise OrderDomainError(
                f"fractional order {a!r} outside (0, 1){where}",
                node=node,
                trial_q=trial_q,
            )
        return a


def as_coefficient(c) -> Callable[[float], float]:
    """Promote a number to a constant function of time; pass callables through."""
    if callable(c):
        return c
    value = float(c)
    return lambda t: value


@dataclass(frozen=True)
class OscillatorProblem:
    """One fractional oscillator on its grid.

    Coefficient fields are functions of time; use as_coefficient (or the
    build classmethod) to wrap plain numbers. f_nl, when present, is a
    restoring term depending on displacement and velocity only.
    """

    a1: Callable[[float], float]
    a2: Callable[[float], float]
    a3: Callable[[float], float]
    p: Callable[[float], float]
    alpha: AlphaSpec
    u0: float
    v0: float
    grid: Grid
    f_nl: Optional[Callable[[float, float], float]] = None

    @classmethod
    def build(cls, a1, a2, a3, p, alpha, u0, v0, T, h, f_nl=None) -> "OscillatorProblem":
        return cls(
            a1=as_coefficient(a1),
            a2=as_coefficient(a2),
            a3=as_coefficient(a3),
            p=as_coefficient(p),
            alpha=alpha,
            u0=float(u0),
            v0=float(v0),
            grid=Grid.make(T, h),
            f_nl=f_nl,
        )

    def nonlinear_term(self, u: float, udot: float) -> float:
        return 0.0 if self.f_nl is None else float(self.f_nl(u, udot))


class StepState(NamedTuple):
    """Unknowns of one node: acceleration, velocity, displacement."""

    q: float
    udot: float
    u: float


@dataclass
class SolutionTrace:
    """Node-wise results of a solve.

    Arrays t, u, udot, uddot, alpha_used have length N+1; udot_mean has
    length N (entry r-1 is the mean velocity of step r). alpha_used[0] is
    recorded for reference only: the history term vanishes at t = 0, so no
    weight row is ever built from it and it is not range-checked. rho holds
    per-step spectral radii when stability recording was requested, and
    iterations the per-step root-solve evaluation counts of the implicit
    solver; both are None otherwise.
    """

    t: np.ndarray
    u: np.ndarray
    udot: np.ndarray
    uddot: np.ndarray
    alpha_used: np.ndarray
    udot_mean: np.ndarray
    rho: Optional[np.ndarray] = None
    iterations: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return self.t.size - 1


def initial_acceleration(problem: OscillatorProblem) -> float:
    """Acceleration at t = 0 consistent with the governing equation.

    The history integral of a continuous velocity vanishes at t = 0, so the
    fractional term drops out and

        q0 = (p(0) - a3(0) u0 - f_nl(u0, v0)) / a1(0).
    """
    a1_0 = float(problem.a1(0.0))
    if not math.isfinite(a1_0) or a1_0 == 0.0:
        raise DegenerateProblemError(
            f"leading coefficient a1(0) = {a1_0!r}; cannot form the initial acceleration"
        )
    return (
        float(problem.p(0.0))
        - float(problem.a3(0.0)) * problem.u0
        - problem.nonlinear_term(problem.u0, problem.v0)
    ) / a1_0


def discrete_residuals(problem: OscillatorProblem, trace: SolutionTrace) -> np.ndarray:
    """Re-verify the discrete equation at every node from the stored trace.

    The history sum is rebuilt from the trace's mean velocities and recorded
    order values, independently of whichever solver produced the trace. Each
    residual is scaled by max(1, |largest term|), so the result is a
    relative measure wherever the equation has size.
    """
    h = problem.grid.h
    N = trace.N
    out = np.empty(N + 1)
    for n in range(N + 1):
        tn = trace.t[n]
        if n == 0:
            deriv = 0.0
        else:
            row = coefficient_row(n, h, float(trace.alpha_used[n]))
            deriv = float(row.c @ trace.udot_mean[:n])
        inertia = float(problem.a1(tn)) * trace.uddot[n]
        damping = float(problem.a2(tn)) * deriv
        restoring = float(problem.a3(tn)) * trace.u[n]
        extra = problem.nonlinear_term(float(trace.u[n]), float(trace.udot[n]))
        load = float(problem.p(tn))
        res = inertia + damping + restoring + extra - load
        scale = max(1.0, abs(inertia), abs(damping), abs(restoring), abs(extra), abs(load))
        out[n] = res / scale
    return out
