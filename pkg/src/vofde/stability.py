"""Spectral-radius stability check of the step recursion.

Each step maps the state (q, udot, u) forward through x_n = A_n x_{n-1} + b_n
with A_n = L_n^{-1} R_n. The scheme is (conditionally) stable when no
amplification matrix magnifies the state, i.e. rho(A_n) <= 1 for every step.
Eigenvalues of the 3x3 matrices come from the closed-form cubic solution;
nothing iterative is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linsolve import inv3
from .errors import StepFailureError
from .explicit_solver import _order_at_nodes, step_matrices, step_matrices_from_weights
from .model import OscillatorProblem, SolutionTrace
from .vo_core import CoefficientRow, coefficient

__all__ = [
    "StabilityReport",
    "spectral_radius",
    "eigenvalues3",
    "amplification_matrix",
    "amplification_from_matrices",
    "stability_report",
    "stability_report_along_trace",
    "report_from_rho",
]

_COND_LIMIT = 1e14


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def eigenvalues3(a_mat) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3x3 matrix from the characteristic cubic.

    The cubic lambda^3 - tr lambda^2 + m lambda - det (m the sum of the
    principal 2x2 minors) is depressed and solved in closed form: the trig
    branch for three real roots, the Cardano branch otherwise.
    """
    a = np.asarray(a_mat, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")

    tr = a[0, 0] + a[1, 1] + a[2, 2]
    minors = (
        a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
        + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
        + a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    )
    det = (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )

    # depressed cubic y^3 + p y + q, lambda = y + tr/3
    shift = tr / 3.0
    p = minors - tr * tr / 3.0
    q = -2.0 * tr ** 3 / 27.0 + tr * minors / 3.0 - det
    disc = 0.25 * q * q + p ** 3 / 27.0

    if disc > 0.0:
        root = math.sqrt(disc)
        w = _cbrt(-0.5 * q + root)
        v = _cbrt(-0.5 * q - root)
        y_real = w + v
        re = -0.5 * y_real
        im = 0.5 * math.sqrt(3.0) * (w - v)
        return (
            complex(y_real + shift, 0.0),
            complex(re + shift, im),
            complex(re + shift, -im),
        )

    # disc <= 0 implies p <= 0; three real roots via the trig form
    m2 = 2.0 * math.sqrt(max(-p / 3.0, 0.0))
    if m2 == 0.0:
        lam = complex(shift, 0.0)
        return (lam, lam, lam)
    arg = 3.0 * q / (p * m2)
    arg = min(1.0, max(-1.0, arg))
    phi = math.acos(arg) / 3.0
    third = 2.0 * math.pi / 3.0
    return tuple(
        complex(m2 * math.cos(phi - k * third) + shift, 0.0) for k in range(3)
    )


def spectral_radius(a_mat) -> float:
    """Largest eigenvalue modulus of a real 3x3 matrix."""
    return max(abs(lam) for lam in eigenvalues3(a_mat))


def amplification_from_matrices(left, right, step: int | None = None) -> np.ndarray:
    """A = L^{-1} R, failing loudly on a singular or ill-conditioned L."""
    left_inv, cond = inv3(left)
    if not np.isfinite(left_inv).all() or cond > _COND_LIMIT:
        raise StepFailureError(
            f"left step matrix singular or ill-conditioned (estimate {cond:.3e})",
            step=step,
        )
    return left_inv @ np.asarray(right, dtype=float)


def amplification_matrix(
    n: int, problem: OscillatorProblem, row: CoefficientRow
) -> np.ndarray:
    """Amplification matrix of step n under the given weight row."""
    left, right = step_matrices(problem, n, row)
    return amplification_from_matrices(left, right, step=n)


@dataclass(frozen=True)
class StabilityReport:
    """Per-step spectral radii and the overall verdict.

    trace_conditional marks reports built along a solved trajectory, where
    the order values (and hence the verdict) hold for that trajectory only.
    """

    rho: np.ndarray
    max_rho: float
    satisfied: bool
    tol: float
    trace_conditional: bool = False


def report_from_rho(
    rho: np.ndarray, tol: float = 1e-12, trace_conditional: bool = False
) -> StabilityReport:
    rho = np.asarray(rho, dtype=float)
    max_rho = float(np.max(rho)) if rho.size else 0.0
    return StabilityReport(
        rho=rho,
        max_rho=max_rho,
        satisfied=bool(max_rho <= 1.0 + tol),
        tol=tol,
        trace_conditional=trace_conditional,
    )


def _rho_sweep(problem: OscillatorProblem, alphas: np.ndarray) -> np.ndarray:
    """Spectral radius of every step for the given per-node order values.

    Only the last two weights of each row enter the step matrices, so they
    are computed directly instead of building full O(n) rows; the sweep is
    O(N) overall.
    """
    h = problem.grid.h
    N = problem.grid.N
    rho = np.empty(N)
    for n in range(1, N + 1):
        tn = n * h
        a = float(alphas[n])
        c_nn = coefficient(n, n, h, a)
        c_nm1 = coefficient(n, n - 1, h, a) if n >= 2 else 0.0
        left, right = step_matrices_from_weights(
            float(problem.a1(tn)),
            float(problem.a2(tn)),
            float(problem.a3(tn)),
            h,
            c_nn,
            c_nm1,
        )
        rho[n - 1] = spectral_radius(amplification_from_matrices(left, right, step=n))
    return rho


def stability_report(problem: OscillatorProblem, tol: float = 1e-12) -> StabilityReport:
    """Check rho(A_n) <= 1 + tol over the whole grid of a time-only problem."""
    alphas = _order_at_nodes(problem)
    return report_from_rho(_rho_sweep(problem, alphas), tol=tol)


def stability_report_along_trace(
    problem: OscillatorProblem, trace: SolutionTrace, tol: float = 1e-12
) -> StabilityReport:
    """Stability along a solved trajectory's recorded order values.

    This is the only meaningful check for state-dependent orders; its
    verdict is conditional on the trajectory the trace came from.
    """
    if trace.N != problem.grid.N:
        raise IndexError(
            f"trace has {trace.N} steps but the problem grid has {problem.grid.N}"
        )
    return report_from_rho(
        _rho_sweep(problem, np.asarray(trace.alpha_used, dtype=float)),
        tol=tol,
        trace_conditional=True,
    )
