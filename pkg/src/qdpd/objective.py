"""Local cost functions, the built-in regression problem, and a centralized
reference solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PiecewiseQuadCost:
    """One-dimensional cost: a(x-b)^2 right of b, c(x+d)^2 left of -d, flat between."""

    a: float
    b: float
    c: float
    d: float

    def evaluate(self, x: float) -> float:
        if x >= self.b:
            return self.a * (x - self.b) ** 2
        if x <= -self.d:
            return self.c * (x + self.d) ** 2
        return 0.0

    def gradient(self, x: float) -> float:
        if x >= self.b:
            return 2.0 * self.a * (x - self.b)
        if x <= -self.d:
            return 2.0 * self.c * (x + self.d)
        return 0.0

    @property
    def smoothness(self) -> float:
        return 2.0 * max(self.a, self.c)


@dataclass(frozen=True)
class QuadraticCost:
    """n-dimensional cost a*||x - center||^2 (synthetic fixtures and sweeps)."""

    a: float
    center: np.ndarray

    def evaluate(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(self.a * np.sum((x - self.center) ** 2))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.a * (x - self.center)

    @property
    def smoothness(self) -> float:
        return 2.0 * self.a


@dataclass
class GlobalProblem:
    """Sum of per-agent costs over a shared decision variable of dimension n."""

    costs: list
    dimension: int = 1
    _pw: tuple = field(default=None, repr=False)

    def __post_init__(self):
        # Vectorized fast path when every cost is a piecewise quadratic.
        if self.dimension == 1 and all(
            isinstance(c, PiecewiseQuadCost) for c in self.costs
        ):
            self._pw = tuple(
                np.array([getattr(c, f) for c in self.costs]) for f in "abcd"
            )

    @property
    def agent_count(self) -> int:
        return len(self.costs)

    @property
    def m_f(self) -> float:
        return float(sum(c.smoothness for c in self.costs))

    def evaluate_stacked(self, x: np.ndarray) -> float:
        """f(x) = sum_i f_i(x_i) on a stacked (N, n) or (N*n,) state."""
        xs = np.asarray(x, dtype=float).reshape(self.agent_count, self.dimension)
        if self.dimension == 1:
            return float(sum(c.evaluate(float(v)) for c, v in zip(self.costs, xs[:, 0])))
        return float(sum(c.evaluate(v) for c, v in zip(self.costs, xs)))

    def gradient_stacked(self, x: np.ndarray) -> np.ndarray:
        """Stacked gradient [grad f_1(x_1); ...; grad f_N(x_N)]."""
        xv = np.asarray(x, dtype=float)
        xs = xv.reshape(self.agent_count, self.dimension)
        if self._pw is not None:
            a, b, c, d = self._pw
            v = xs[:, 0]
            g = np.where(
                v >= b, 2.0 * a * (v - b), np.where(v <= -d, 2.0 * c * (v + d), 0.0)
            )
            return g.reshape(xv.shape)
        out = np.empty_like(xs)
        for i, cost in enumerate(self.costs):
            out[i] = cost.gradient(xs[i] if self.dimension > 1 else float(xs[i, 0]))
        return out.reshape(xv.shape)


# Table of (a, b, c, d) coefficients for the built-in 12-agent regression problem.
_TABLE1 = [
    (0.1, 0.5, 1.0, 9.0),
    (0.3, 0.2, 3.0, 3.0),
    (0.8, 0.5, 3.0, 7.0),
    (0.0, 0.6, 7.0, 2.0),
    (0.9, 0.7, 1.0, 0.0),
    (0.7, 0.4, 7.0, 7.0),
    (0.5, 0.4, 1.0, 5.0),
    (0.6, 1.0, 7.0, 5.0),
    (0.2, 0.0, 5.0, 9.0),
    (0.5, 0.9, 8.0, 6.0),
    (1.0, 0.9, 7.0, 6.0),
    (0.5, 0.8, 9.0, 9.0),
]


def table1_problem() -> GlobalProblem:
    """The built-in 12-agent scalar piecewise-quadratic regression problem."""
    return GlobalProblem(costs=[PiecewiseQuadCost(*row) for row in _TABLE1])


@dataclass(frozen=True)
class CentralSolution:
    """Centralized reference optimum with the magnitude bounds the quantizer
    parameter engine needs."""

    x_star: np.ndarray
    interval_lo: float
    interval_hi: float
    M1: float
    M2: float
    f_star: float

    def distance_to_set(self, x: np.ndarray) -> float:
        """Euclidean distance of a stacked state to the stacked solution set."""
        xv = np.asarray(x, dtype=float)
        n = self.x_star.size
        if n == 1:
            clamped = np.clip(xv, self.interval_lo, self.interval_hi)
            return float(np.linalg.norm(xv - clamped))
        blocks = xv.reshape(-1, n)
        return float(np.linalg.norm(blocks - self.x_star[None, :]))


def _total_gradient(p: GlobalProblem, x: float) -> float:
    return float(sum(float(np.ravel(c.gradient(x))[0]) for c in p.costs))


def solve_centralized(p: GlobalProblem, tol: float = 1e-10) -> CentralSolution:
    """Minimize sum_i f_i by bisection on the (monotone) total gradient.

    The minimizer of a scalar convex problem may be an interval; both edges
    are located so distances can be measured against the full solution set.
    For n > 1 a gradient-descent reference run is used instead and the
    solution is treated as a single point.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if p.dimension == 1:
        lo, hi = -1.0, 1.0
        while _total_gradient(p, lo) > 0:
            lo *= 2.0
            if lo < -1e12:
                raise ValueError("could not bracket the minimizer from below")
        while _total_gradient(p, hi) < 0:
            hi *= 2.0
            if hi > 1e12:
                raise ValueError("could not bracket the minimizer from above")
        # Left edge: boundary between g < 0 and g >= 0.
        a, b = lo, hi
        while b - a > tol:
            m = 0.5 * (a + b)
            if _total_gradient(p, m) < 0:
                a = m
            else:
                b = m
        left = b
        # Right edge: boundary between g <= 0 and g > 0.
        a, b = lo, hi
        while b - a > tol:
            m = 0.5 * (a + b)
            if _total_gradient(p, m) > 0:
                b = m
            else:
                a = m
        right = a
        if right < left:
            left = right = 0.5 * (left + right)
        x_star = np.array([0.5 * (left + right)])
    else:
        x_star = _descend(p, tol)
        left = right = None
    f_star = float(sum(c.evaluate(x_star if p.dimension > 1 else float(x_star[0]))
                       for c in p.costs))
    if not np.isfinite(f_star):
        raise ValueError("non-finite cost at the computed minimizer")
    grads = [
        np.atleast_1d(c.gradient(x_star if p.dimension > 1 else float(x_star[0])))
        for c in p.costs
    ]
    M1 = float(np.max(np.abs(x_star)))
    M2 = float(max(np.max(np.abs(g)) for g in grads))
    if left is None:
        left = right = float(x_star[0]) if p.dimension == 1 else 0.0
    return CentralSolution(
        x_star=x_star, interval_lo=left, interval_hi=right, M1=M1, M2=M2, f_star=f_star
    )


def _descend(p: GlobalProblem, tol: float) -> np.ndarray:
    x = np.zeros(p.dimension)
    m = max(p.m_f, 1e-12)
    step = 1.0 / m
    for _ in range(200000):
        g = np.sum([np.atleast_1d(c.gradient(x)) for c in p.costs], axis=0)
        if np.linalg.norm(g) <= tol:
            break
        x = x - step * g
    return x
