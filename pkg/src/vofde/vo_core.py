"""Discrete variable-order derivative of Caputo type on a uniform grid.

The derivative of order alpha(t) in (0, 1) of u is the weighted history
integral of the velocity,

    D^alpha u (t) = 1/Gamma(1 - alpha(t)) * int_0^t (t - x)^(-alpha(t)) u'(x) dx.

On the grid t_n = n h the integral over each past step [(r-1)h, rh] is
approximated by the mean velocity on that step times the exact integral of
the kernel, which gives the closed-form weights below. The module also
carries an adaptive-quadrature evaluation of the defining integral, used
only to cross-check the weights, never inside a solver loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, OrderDomainError
from .special_functions import gamma

__all__ = [
    "Grid",
    "CoefficientRow",
    "VelocityHistory",
    "coefficient",
    "coefficient_row",
    "vo_derivative_at",
    "vo_derivative_series",
    "caputo_quadrature_oracle",
]


@dataclass(frozen=True)
class Grid:
    """Uniform time grid t_n = n h for n = 0 .. N."""

    h: float
    N: int
    T: float

    @classmethod
    def make(cls, T: float, h: float) -> "Grid":
        """Grid covering [0, T] with step h and N = ceiling(T / h) steps.

        The ratio is nudged by one part in 1e12 before the ceiling so that
        horizons which are exact multiples of h up to float noise do not
        gain a spurious extra step.
        """
        if not (isinstance(h, (int, float)) and math.isfinite(h)) or h <= 0.0:
            raise ValueError(f"step size must be positive and finite, got {h!r}")
        if not (isinstance(T, (int, float)) and math.isfinite(T)) or T <= 0.0:
            raise ValueError(f"horizon must be positive and finite, got {T!r}")
        N = max(1, math.ceil((T / h) * (1.0 - 1e-12)))
        return cls(h=float(h), N=N, T=float(T))

    def times(self) -> np.ndarray:
        return np.arange(self.N + 1, dtype=float) * self.h


def _validate_order(alpha: float, node: int | None = None) -> float:
    a = float(alpha)
    if not (0.0 < a < 1.0):  # also rejects nan
        where = f" at node {node}" if node is not None else ""
        raise OrderDomainError(
            f"fractional order must lie in (0, 1), got {alpha!r}{where}",
            node=node,
        )
    return a


def _row_factor(h: float, alpha: float) -> float:
    # As alpha -> 1 the 1/Gamma(1-alpha) prefactor vanishes at exactly the
    # rate 1/(alpha-1) blows up; keeping them in one product (it equals
    # -h^(1-alpha)/Gamma(2-alpha)) makes the factor O(1) right up to the
    # boundary, so no series fallback is needed.
    return h ** (1.0 - alpha) / (gamma(1.0 - alpha) * (alpha - 1.0))


def coefficient(n: int, r: int, h: float, alpha: float) -> float:
    """Quadrature weight c_r^n for history subinterval [(r-1)h, rh].

    Closed form of the kernel integral over the subinterval:

        c_r^n = h^(1-alpha) / (Gamma(1-alpha) (alpha-1))
                * ((n-r)^(1-alpha) - (n-r+1)^(1-alpha)),

    valid for 0 < alpha < 1, 1 <= r <= n. Weights are positive and grow
    toward the current time because the kernel concentrates there.
    """
    a = _validate_order(alpha)
    if not isinstance(n, int) or n < 1:
        raise IndexError(f"row index n must be an integer >= 1, got {n!r}")
    if not isinstance(r, int) or not 1 <= r <= n:
        raise IndexError(f"subinterval index r must satisfy 1 <= r <= n={n}, got {r!r}")
    if not (isinstance(h, (int, float)) and math.isfinite(h)) or h <= 0.0:
        raise ValueError(f"step size must be positive and finite, got {h!r}")
    return _row_factor(float(h), a) * (_pow_1ma(n - r, a) - _pow_1ma(n - r + 1, a))


def _pow_1ma(m: int, alpha: float) -> float:
    # m^(1-alpha) for integer m >= 0 via exp/log; exact zero at m = 0
    if m == 0:
        return 0.0
    return math.exp((1.0 - alpha) * math.log(m))


@dataclass(frozen=True)
class CoefficientRow:
    """All weights c_r^n of one grid row, c[r-1] holding c_r^n."""

    n: int
    alpha_n: float
    c: np.ndarray

    def __post_init__(self):
        if self.c.shape != (self.n,):
            raise IndexError(
                f"row for n={self.n} must hold exactly n weights, got shape {self.c.shape}"
            )


def coefficient_row(n: int, h: float, alpha: float) -> CoefficientRow:
    """Vectorized evaluation of the full weight row for node n."""
    a = _validate_order(alpha)
    if not isinstance(n, int) or n < 1:
        raise IndexError(f"row index n must be an integer >= 1, got {n!r}")
    if not (isinstance(h, (int, float)) and math.isfinite(h)) or h <= 0.0:
        raise ValueError(f"step size must be positive and finite, got {h!r}")
    powers = np.empty(n + 1)
    powers[0] = 0.0
    powers[1:] = np.exp((1.0 - a) * np.log(np.arange(1, n + 1, dtype=float)))
    c = _row_factor(float(h), a) * (powers[n - 1::-1] - powers[n:0:-1])
    return CoefficientRow(n=n, alpha_n=a, c=c)


class VelocityHistory:
    """Endpoint velocities of completed steps and their per-step means.

    Means are always derived from the stored endpoints, never set on their
    own, so entry r is (udot_{r-1} + udot_r) / 2 by construction. len() is
    the number of completed steps.
    """

    def __init__(self, v0: float, capacity: int = 64):
        cap = max(int(capacity), 1)
        self._end = np.empty(cap + 1)
        self._mean = np.empty(cap)
        self._end[0] = float(v0)
        self._steps = 0

    def __len__(self) -> int:
        return self._steps

    @classmethod
    def from_endpoints(cls, endpoints) -> "VelocityHistory":
        """Build a history from a full array of endpoint velocities."""
        arr = np.asarray(endpoints, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("endpoints must be a 1-d array with at least one entry")
        hist = cls(arr[0], capacity=max(arr.size - 1, 1))
        for v in arr[1:]:
            hist.append(float(v))
        return hist

    def append(self, udot_end: float) -> None:
        """Record the endpoint velocity of the next completed step."""
        n = self._steps
        if n + 1 >= self._end.size:
            self._end = np.concatenate([self._end, np.empty(self._end.size)])
            self._mean = np.concatenate([self._mean, np.empty(self._mean.size)])
        v = float(udot_end)
        self._end[n + 1] = v
        self._mean[n] = 0.5 * (self._end[n] + v)
        self._steps = n + 1

    def endpoint(self, r: int) -> float:
        """Velocity at node r, 0 <= r <= len(self)."""
        if not 0 <= r <= self._steps:
            raise IndexError(f"node {r} outside recorded history 0..{self._steps}")
        return float(self._end[r])

    @property
    def endpoints(self) -> np.ndarray:
        return self._end[: self._steps + 1]

    @property
    def udot_mean(self) -> np.ndarray:
        """View of the step means, entry r-1 holding the mean of step r."""
        return self._mean[: self._steps]


def vo_derivative_at(n: int, row: CoefficientRow, hist: VelocityHistory) -> float:
    """Weighted history sum sum_r c_r^n udot_r^m at node n."""
    if row.n != n:
        raise IndexError(f"row built for node {row.n}, requested node {n}")
    if len(hist) < n:
        raise IndexError(f"history holds {len(hist)} steps, node {n} needs {n}")
    return float(row.c @ hist.udot_mean[:n])


def vo_derivative_series(
    udot_samples, alpha_fn: Callable[[float], float], grid: Grid
) -> np.ndarray:
    """Derivative at every interior node from sampled endpoint velocities.

    Parameters
    ----------
    udot_samples : array of length N+1, velocity at each grid node.
    alpha_fn : order as a function of time, evaluated at t_n for each row.
    grid : the uniform grid.

    Returns the derivative at nodes 1 .. N (the node-0 value is identically
    zero for a continuous integrand and is not included).
    """
    u = np.asarray(udot_samples, dtype=float)
    if u.shape != (grid.N + 1,):
        raise IndexError(
            f"expected {grid.N + 1} velocity samples for this grid, got shape {u.shape}"
        )
    means = 0.5 * (u[:-1] + u[1:])
    out = np.empty(grid.N)
    for n in range(1, grid.N + 1):
        a = _validate_order(alpha_fn(n * grid.h), node=n)
        row = coefficient_row(n, grid.h, a)
        out[n - 1] = row.c @ means[:n]
    return out


# 15-point Kronrod extension of 7-point Gauss, positive half of the rule.
# Odd node indices (and the centre) are the embedded Gauss points.
_KRONROD_NODES = (
    0.9914553711208126,
    0.9491079123427585,
    0.8648644233597691,
    0.7415311855993944,
    0.5860872354676911,
    0.4058451513773972,
    0.2077849550078985,
    0.0,
)
_KRONROD_WEIGHTS = (
    0.022935322010529224,
    0.06309209262997855,
    0.10479001032225018,
    0.14065325971552592,
    0.1690047266392679,
    0.19035057806478542,
    0.20443294007529889,
    0.20948214108472782,
)
_GAUSS_WEIGHTS = (
    0.12948496616886969,
    0.2797053914892767,
    0.3818300505051189,
    0.4179591836734694,
)

_MAX_DEPTH = 60
_MAX_PANELS = 200_000


def _gauss_kronrod_panel(f, a: float, b: float) -> tuple[float, float]:
    """Kronrod-15 and Gauss-7 estimates of the integral over [a, b]."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fc = f(mid)
    kron = _KRONROD_WEIGHTS[7] * fc
    gauss = _GAUSS_WEIGHTS[3] * fc
    for i in range(7):
        dx = half * _KRONROD_NODES[i]
        pair = f(mid - dx) + f(mid + dx)
        kron += _KRONROD_WEIGHTS[i] * pair
        if i % 2 == 1:
            gauss += _GAUSS_WEIGHTS[i // 2] * pair
    return kron * half, gauss * half


def _adaptive_quadrature(f, a: float, b: float, tol: float, depth: int, budget: list) -> float:
    budget[0] -= 1
    if budget[0] < 0:
        raise ConvergenceError(
            f"adaptive quadrature exhausted its panel budget of {_MAX_PANELS}; "
            "the integrand is too rough for the requested tolerance"
        )
    kron, gauss = _gauss_kronrod_panel(f, a, b)
    err = abs(kron - gauss)
    if err <= tol or err <= 1e-15 * abs(kron):
        return kron
    if depth >= _MAX_DEPTH:
        raise ConvergenceError(
            f"adaptive quadrature exceeded depth {_MAX_DEPTH} on [{a}, {b}], "
            f"panel error {err:.3e} vs tolerance {tol:.3e}"
        )
    mid = 0.5 * (a + b)
    return _adaptive_quadrature(
        f, a, mid, 0.5 * tol, depth + 1, budget
    ) + _adaptive_quadrature(f, mid, b, 0.5 * tol, depth + 1, budget)


def caputo_quadrature_oracle(
    u_dot: Callable[[float], float], alpha: float, t: float, tol: float = 1e-10
) -> float:
    """Direct evaluation of the defining history integral at fixed order.

    The endpoint singularity of the kernel is removed by substituting
    s = (t - x)^(1-alpha), after which

        D^alpha u(t) = 1/Gamma(2-alpha) * int_0^{t^(1-alpha)} u'(t - s^(1/(1-alpha))) ds

    has a bounded integrand, integrated by adaptive Gauss-Kronrod to the
    requested absolute tolerance. Intended as an independent check of the
    closed-form weights; too slow for use inside stepping loops.
    """
    a = _validate_order(alpha)
    if not (isinstance(t, (int, float)) and math.isfinite(t)) or t <= 0.0:
        raise ValueError(f"oracle needs t > 0, got {t!r}")
    if not (tol >= 1e-12):
        raise ValueError(f"tolerance must be at least 1e-12, got {tol!r}")
    one_m_a = 1.0 - a
    upper = t ** one_m_a
    expo = 1.0 / one_m_a

    def integrand(s: float) -> float:
        x = t - s ** expo
        if x < 0.0:  # round-off at the upper endpoint
            x = 0.0
        return u_dot(x)

    norm = gamma(2.0 - a)
    raw = _adaptive_quadrature(integrand, 0.0, upper, tol * norm, 0, [_MAX_PANELS])
    return raw / norm
