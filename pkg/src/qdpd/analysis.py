"""Post-hoc diagnostics: first-order optimality residuals, the Lyapunov
value with its theoretical envelopes, dual references, and rate fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import TrajectoryRecord
from .graph import NetworkGraph, apply_laplacian
from .objective import CentralSolution, GlobalProblem
from .params import SIGMA_BAR, ParameterSet


class EnvelopeUnavailable(RuntimeError):
    """Envelopes need the derived-mode constants (kappa, eta, M0)."""


class RateUndetermined(RuntimeError):
    """Tracking error already at the numerical floor; no rate to fit."""


@dataclass(frozen=True)
class DiagnosticSample:
    t: float
    F_norm: float
    V: float
    e_norm: float
    consensus_residual: float
    dual_sum: float
    tracking_error: float
    J: float


def kkt_residual(problem: GlobalProblem, graph: NetworkGraph, x, lam):
    """Norms of the two optimality blocks and of their stacked vector.

    First block: grad f(x) + L x + L lam; second block: -L x.
    """
    n = problem.dimension
    x = np.asarray(x, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    first = (
        problem.gradient_stacked(x)
        + apply_laplacian(graph, x, n)
        + apply_laplacian(graph, lam, n)
    )
    second = -apply_laplacian(graph, x, n)
    n1 = float(np.linalg.norm(first))
    n2 = float(np.linalg.norm(second))
    return n1, n2, math.hypot(n1, n2)


def lyapunov(problem: GlobalProblem, graph: NetworkGraph, x, lam,
             x_star, lam_star) -> float:
    """V = 4*sigmaN*||z - z*||^2/2 + (f(x) - f(x*) + x'Lx/2 + lam'Lx)."""
    n = problem.dimension
    x = np.asarray(x, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    xs = np.asarray(x_star, dtype=float).reshape(-1)
    ls = np.asarray(lam_star, dtype=float).reshape(-1)
    sigmaN = graph.sigma_max
    v1 = 0.5 * (np.sum((x - xs) ** 2) + np.sum((lam - ls) ** 2))
    lap_x = apply_laplacian(graph, x, n)
    f_star = problem.evaluate_stacked(xs)
    v2 = (
        problem.evaluate_stacked(x) - f_star
        + 0.5 * float(x @ lap_x)
        + float(lam @ lap_x)
    )
    return float(4.0 * sigmaN * v1 + v2)


def dual_reference(problem: GlobalProblem, graph: NetworkGraph, x_star,
                   lambda0, tol: float = 1e-8) -> np.ndarray:
    """Stacked optimal dual variables consistent with the conserved dual sum.

    Solves L lam* = -grad f(x*) - L x* in least squares on the
    consensus-orthogonal subspace, then shifts the free consensus component
    so 1' lam* matches 1' lambda(0).
    """
    n = problem.dimension
    N = graph.node_count
    xs = np.asarray(x_star, dtype=float).reshape(-1)
    lam0 = np.asarray(lambda0, dtype=float).reshape(N, n)
    rhs_vec = -(problem.gradient_stacked(xs) + apply_laplacian(graph, xs, n))
    rhs_blocks = rhs_vec.reshape(N, n)
    lam = np.linalg.lstsq(graph.laplacian, rhs_blocks, rcond=None)[0]
    # Min-norm solution has zero consensus component; pin it to the run's.
    lam += (lam0.mean(axis=0) - lam.mean(axis=0))[None, :]
    residual = apply_laplacian(graph, lam, n).reshape(-1) - rhs_vec
    if np.linalg.norm(residual) > tol * max(1.0, np.linalg.norm(rhs_vec)):
        raise ValueError(
            f"inconsistent first-order system: residual {np.linalg.norm(residual):.3e}"
        )
    return lam.reshape(-1)


def dual_norm_bound(lambda0, M1: float, M2: float, sigma2: float,
                    N: int, n: int = 1) -> float:
    """Upper bound on ||lam*|| implied by the conserved sum and the bounds
    on the optimum and its gradients."""
    Nn = N * n
    s = float(np.sum(np.asarray(lambda0, dtype=float)))
    return s / math.sqrt(Nn) + math.sqrt(Nn) * (M1 / sigma2 + M2)


@dataclass(frozen=True)
class Envelope:
    """Theoretical decay envelopes: a(t) bounds V, b(t) bounds ||e(t)||."""

    m_f: float
    sigmaN: float
    M0: float
    eta: float
    kappa: float
    T: float

    def a(self, t: float) -> float:
        return (self.m_f + 6.0 * self.sigmaN) / 2.0 * self.M0 ** 2 * math.exp(
            -self.eta * t
        )

    def b(self, t: float) -> float:
        radicand = 3.0 - self.kappa ** 2 * (3.0 * self.eta + 4.0) * (
            self.m_f + 6.0 * self.sigmaN
        )
        k = math.floor(t / self.T)
        return (
            self.M0 / (self.kappa * self.sigmaN)
            * math.sqrt(radicand / (12.0 * self.sigmaN + 33.0))
            * math.exp(-self.eta / 2.0 * (k + 1) * self.T)
        )


def envelopes(p: ParameterSet) -> Envelope:
    if p.mode != "derived" or p.kappa is None or p.eta is None or p.M0 is None:
        raise EnvelopeUnavailable(
            "envelopes need kappa, eta, and M0 from a derived-mode ParameterSet"
        )
    return Envelope(
        m_f=p.m_f, sigmaN=p.sigmaN, M0=p.M0, eta=p.eta, kappa=p.kappa, T=p.T
    )


def tracking_errors(traj: TrajectoryRecord, solution: CentralSolution) -> np.ndarray:
    """Distance of the stacked primal state to the stacked solution set."""
    return np.array(
        [solution.distance_to_set(traj.x[k].reshape(-1)) for k in range(len(traj.times))]
    )


def fit_rate(times: np.ndarray, errors: np.ndarray, window=None,
             floor_factor: float = 100.0):
    """Least-squares exponential decay exponent of an error series.

    Fits the slope of log(error) against time on the window (default: the
    final 80% of the horizon), ignoring samples within `floor_factor` times
    the smallest positive error (the numerical floor).
    """
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if window is None:
        window = (times[0] + 0.2 * (times[-1] - times[0]), times[-1])
    t1, t2 = window
    floor = floor_factor * np.finfo(float).eps * max(errors.max(), 0.0)
    mask = (times >= t1) & (times <= t2) & (errors > floor)
    if mask.sum() < 2:
        raise RateUndetermined("fewer than two usable samples in the fit window")
    t = times[mask]
    y = np.log(errors[mask])
    slope, intercept = np.polyfit(t, y, 1)
    resid = float(np.sqrt(np.mean((slope * t + intercept - y) ** 2)))
    return -float(slope), resid


def diagnose(problem: GlobalProblem, graph: NetworkGraph, traj: TrajectoryRecord,
             solution: CentralSolution, lam_star=None, j_rate: float = 0.01):
    """Per-sample diagnostics for a whole trajectory."""
    n = problem.dimension
    if lam_star is None:
        lam_star = dual_reference(
            problem, graph, np.tile(solution.x_star, graph.node_count),
            traj.lam[0],
        )
    xs_stacked = np.tile(solution.x_star, graph.node_count)
    samples = []
    for k, t in enumerate(traj.times):
        x = traj.x[k].reshape(-1)
        lam = traj.lam[k].reshape(-1)
        n1, n2, f_norm = kkt_residual(problem, graph, x, lam)
        err = solution.distance_to_set(x)
        samples.append(DiagnosticSample(
            t=float(t),
            F_norm=f_norm,
            V=lyapunov(problem, graph, x, lam, xs_stacked, lam_star),
            e_norm=float(traj.e_norm[k]),
            consensus_residual=n2,
            dual_sum=float(np.sum(lam)),
            tracking_error=err,
            J=math.exp(j_rate * float(t)) * err,
        ))
    return samples
