"""Continuous-time quantized primal-dual flow between sampling instants.

Within each sampling interval the quantized neighbor values are held
constant (zero-order hold), so the Laplacian terms of the flow are fixed
vectors and only the local gradients vary. The interval is advanced with a
deterministic fixed-step RK4 integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codec
from .codec import Frame, LengthSchedule, RangeState
from .graph import NetworkGraph, apply_laplacian
from .objective import GlobalProblem
from .quantizer import QuantizerSpec

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _pw_grad(x, a, b, c, d):
    if x >= b:
        return 2.0 * a * (x - b)
    if x <= -d:
        return 2.0 * c * (x + d)
    return 0.0


@njit(cache=True)
def _rk4_pw_interval(x, drive, a, b, c, d, alpha, h, substeps):
    """Per-agent scalar RK4 over one hold interval; agents decouple because
    the Laplacian drive is frozen."""
    N = x.shape[0]
    out = np.empty(N)
    for i in range(N):
        xi = x[i]
        di = drive[i]
        ai, bi, ci, ddi = a[i], b[i], c[i], d[i]
        for _ in range(substeps):
            k1 = -alpha * _pw_grad(xi, ai, bi, ci, ddi) - di
            k2 = -alpha * _pw_grad(xi + 0.5 * h * k1, ai, bi, ci, ddi) - di
            k3 = -alpha * _pw_grad(xi + 0.5 * h * k2, ai, bi, ci, ddi) - di
            k4 = -alpha * _pw_grad(xi + h * k3, ai, bi, ci, ddi) - di
            xi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i] = xi
    return out


@njit(cache=True)
def _exact_rhs_pw(x, lam, a, b, c, d, adj, deg, alpha, ox, ol):
    N = x.shape[0]
    for i in range(N):
        lap_x = deg[i] * x[i]
        lap_l = deg[i] * lam[i]
        for j in range(N):
            if adj[i, j] > 0.0:
                lap_x -= x[j]
                lap_l -= lam[j]
        g = _pw_grad(x[i], a[i], b[i], c[i], d[i])
        ox[i] = alpha * (-g - lap_x - lap_l)
        ol[i] = alpha * lap_x


@njit(cache=True)
def _rk4_exact_pw(x, lam, a, b, c, d, adj, deg, alpha, h, substeps):
    N = x.shape[0]
    kx1 = np.empty(N); kl1 = np.empty(N)
    kx2 = np.empty(N); kl2 = np.empty(N)
    kx3 = np.empty(N); kl3 = np.empty(N)
    kx4 = np.empty(N); kl4 = np.empty(N)
    for _ in range(substeps):
        _exact_rhs_pw(x, lam, a, b, c, d, adj, deg, alpha, kx1, kl1)
        _exact_rhs_pw(x + 0.5 * h * kx1, lam + 0.5 * h * kl1,
                      a, b, c, d, adj, deg, alpha, kx2, kl2)
        _exact_rhs_pw(x + 0.5 * h * kx2, lam + 0.5 * h * kl2,
                      a, b, c, d, adj, deg, alpha, kx3, kl3)
        _exact_rhs_pw(x + h * kx3, lam + h * kl3,
                      a, b, c, d, adj, deg, alpha, kx4, kl4)
        x = x + (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4)
        lam = lam + (h / 6.0) * (kl1 + 2.0 * kl2 + 2.0 * kl3 + kl4)
    return x, lam


class DivergenceError(RuntimeError):
    """State norm exceeded the blow-up guard."""

    def __init__(self, message, step=None, agent_id=None):
        super().__init__(message)
        self.step = step
        self.agent_id = agent_id


@dataclass(frozen=True)
class IntegratorConfig:
    substeps_per_period: int = 50
    gain: float = 1.0
    blowup_guard: float = 1e9

    def __post_init__(self):
        if self.substeps_per_period < 1:
            raise ValueError("substeps_per_period must be >= 1")
        if self.gain <= 0:
            raise ValueError("gain must be positive")


def rhs(problem: GlobalProblem, graph: NetworkGraph, x, lam, q_x, q_lam,
        alpha: float = 1.0):
    """Time derivative of all (x_i, lambda_i) under held quantized inputs.

    xdot_i = alpha * (-grad f_i(x_i) - sum_j (qx_i - qx_j) - sum_j (qlam_i - qlam_j))
    lamdot_i = alpha * sum_j (qx_i - qx_j)
    """
    n = problem.dimension
    grad = problem.gradient_stacked(x)
    if not np.all(np.isfinite(grad)):
        bad = int(np.flatnonzero(~np.isfinite(np.asarray(grad).reshape(-1)))[0] // n)
        raise DivergenceError(f"non-finite gradient at agent {bad}", agent_id=bad)
    lap_qx = apply_laplacian(graph, q_x, n)
    lap_qlam = apply_laplacian(graph, q_lam, n)
    xdot = alpha * (-grad - lap_qx - lap_qlam)
    lamdot = alpha * lap_qx
    return xdot, lamdot


def integrate_interval(problem: GlobalProblem, graph: NetworkGraph, x, lam,
                       q_x, q_lam, cfg: IntegratorConfig, T: float,
                       step: int | None = None, dense: bool = False):
    """RK4 advance of (x, lam) over one period with held quantized inputs.

    The Laplacian terms are constant within the interval, so they are
    precomputed once; lamdot is constant and integrates exactly. With
    dense=True also returns (times, x samples, lam samples) at every
    substep boundary.
    """
    if T <= 0:
        raise ValueError("period must be positive")
    n = problem.dimension
    alpha = cfg.gain
    drive = alpha * (apply_laplacian(graph, q_x, n) + apply_laplacian(graph, q_lam, n))
    lamdot = alpha * apply_laplacian(graph, q_x, n)
    h = T / cfg.substeps_per_period
    x = np.asarray(x, dtype=float).copy()
    lam0 = np.asarray(lam, dtype=float)
    if dense:
        grad = problem.gradient_stacked
        times = np.empty(cfg.substeps_per_period + 1)
        xs = np.empty((cfg.substeps_per_period + 1,) + x.shape)
        times[0], xs[0] = 0.0, x
        for s in range(cfg.substeps_per_period):
            k1 = -alpha * grad(x) - drive
            k2 = -alpha * grad(x + 0.5 * h * k1) - drive
            k3 = -alpha * grad(x + 0.5 * h * k2) - drive
            k4 = -alpha * grad(x + h * k3) - drive
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            times[s + 1] = (s + 1) * h
            xs[s + 1] = x
        lams = lam0[None, ...] + times.reshape((-1,) + (1,) * lam0.ndim) * lamdot
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > cfg.blowup_guard:
            raise DivergenceError(
                f"state exceeded blow-up guard {cfg.blowup_guard}", step=step
            )
        return x, lam0 + T * lamdot, times, xs, lams
    if _HAVE_NUMBA and problem._pw is not None and n == 1:
        a, b, c, d = problem._pw
        flat = _rk4_pw_interval(
            x.reshape(-1), np.asarray(drive, dtype=float).reshape(-1),
            a, b, c, d, alpha, h, cfg.substeps_per_period,
        )
        x = flat.reshape(x.shape)
    else:
        grad = problem.gradient_stacked

        def f(xv):
            return -alpha * grad(xv) - drive

        for _ in range(cfg.substeps_per_period):
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    lam = np.asarray(lam, dtype=float) + T * lamdot
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > cfg.blowup_guard:
        raise DivergenceError(
            f"state exceeded blow-up guard {cfg.blowup_guard}", step=step
        )
    return x, lam


@dataclass
class TrajectoryRecord:
    """Sampled time series at the sampling instants of one run."""

    times: np.ndarray
    x: np.ndarray
    lam: np.ndarray
    q_x: np.ndarray
    q_lam: np.ndarray
    e_norm: np.ndarray
    bits_cum: np.ndarray
    period: float
    dimension: int = 1
    quantized: bool = True

    @property
    def steps(self) -> int:
        return len(self.times) - 1


def run(problem: GlobalProblem, graph: NetworkGraph, spec: QuantizerSpec,
        schedule: LengthSchedule, cfg: IntegratorConfig, horizon: int,
        x0: np.ndarray, bits_mode: str = "full") -> TrajectoryRecord:
    """Execute the full quantized protocol for `horizon` sampling periods.

    Initialization quantizes x(0), derives lambda(0) from the quantized
    neighbor differences, and quantizes it; each step then exchanges frames,
    holds the decoded values, integrates the flow, and shrinks the ranges.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least one period")
    N, n = graph.node_count, problem.dimension
    T = schedule.period
    x = np.asarray(x0, dtype=float).reshape(N, n).copy()

    enc = [RangeState.initial(2 * n, spec, schedule) for _ in range(N)]
    # One decoder per directed edge, mirrored from the same initial state.
    dec = {
        (i, j): RangeState.initial(2 * n, spec, schedule)
        for i in range(N)
        for j in graph.neighbors[i]
    }

    # Initialization: quantize x(0) alone (same symmetric range), derive
    # lambda(0) from quantized differences, then emit the joint z-frame.
    rs0 = enc[0]
    from .quantizer import dequantize_vector, quantize_vector

    qx0 = np.empty((N, n))
    for i in range(N):
        lo, hi = rs0.lower[:n], rs0.upper[:n]
        idx = quantize_vector(spec, lo, hi, x[i])
        qx0[i] = dequantize_vector(spec, lo, hi, idx)
    lam = apply_laplacian(graph, qx0, n).reshape(N, n)

    q = np.zeros((N, 2 * n))
    frames: list[Frame] = [None] * N
    for i in range(N):
        z_i = np.concatenate([x[i], lam[i]])
        frame, enc[i], q[i] = codec.encode(enc[i], schedule, spec, z_i, 0, agent_id=i)
        frames[i] = frame

    bits_per_agent = codec.bandwidth_per_step(spec, n, bits_mode)

    times = np.empty(horizon + 1)
    xs = np.empty((horizon + 1, N, n))
    lams = np.empty((horizon + 1, N, n))
    qxs = np.empty((horizon + 1, N, n))
    qlams = np.empty((horizon + 1, N, n))
    e_norms = np.empty(horizon + 1)
    bits = np.empty(horizon + 1)

    for k in range(horizon + 1):
        # Deliver step-k frames through the wire format and the decoders.
        for i in range(N):
            wire = codec.pack_bits(frames[i], spec)
            frame = codec.unpack_bits(wire, n, spec)
            for j in graph.neighbors[i]:
                q_seen, dec[(j, i)] = codec.decode(dec[(j, i)], schedule, spec, frame)
                # Lossless in-order delivery: decoder mirrors the encoder.

        q_x = q[:, :n].copy()
        q_lam = q[:, n:].copy()
        z = np.concatenate([x, lam], axis=1)
        times[k] = k * T
        xs[k], lams[k] = x, lam
        qxs[k], qlams[k] = q_x, q_lam
        e_norms[k] = float(np.linalg.norm(z - q))
        bits[k] = k * bits_per_agent * N

        if k == horizon:
            break

        x, lam = integrate_interval(
            problem, graph, x, lam, q_x, q_lam, cfg, T, step=k
        )
        x = x.reshape(N, n)
        lam = lam.reshape(N, n)
        for i in range(N):
            z_i = np.concatenate([x[i], lam[i]])
            frames[i], enc[i], q[i] = codec.encode(
                enc[i], schedule, spec, z_i, k + 1, agent_id=i
            )

    return TrajectoryRecord(
        times=times, x=xs, lam=lams, q_x=qxs, q_lam=qlams, e_norm=e_norms,
        bits_cum=bits, period=T, dimension=n, quantized=True,
    )


def run_exact(problem: GlobalProblem, graph: NetworkGraph, cfg: IntegratorConfig,
              horizon: int, x0: np.ndarray, T: float) -> TrajectoryRecord:
    """Reference primal-dual flow with exact (unquantized) communication."""
    N, n = graph.node_count, problem.dimension
    alpha = cfg.gain
    x = np.asarray(x0, dtype=float).reshape(N, n).copy()
    lam = apply_laplacian(graph, x, n).reshape(N, n)
    h = T / cfg.substeps_per_period
    grad = problem.gradient_stacked

    def f(state):
        xv, lv = state[:, :n], state[:, n:]
        lap_x = apply_laplacian(graph, xv, n).reshape(N, n)
        lap_l = apply_laplacian(graph, lv, n).reshape(N, n)
        return np.concatenate(
            [alpha * (-grad(xv) - lap_x - lap_l), alpha * lap_x], axis=1
        )

    times = np.empty(horizon + 1)
    xs = np.empty((horizon + 1, N, n))
    lams = np.empty((horizon + 1, N, n))
    state = np.concatenate([x, lam], axis=1)
    use_fast = _HAVE_NUMBA and problem._pw is not None and n == 1
    if use_fast:
        a, b, c, d = problem._pw
        adj = np.asarray(graph.adjacency, dtype=float)
        deg = np.asarray(graph.degree, dtype=float)
    for k in range(horizon + 1):
        times[k] = k * T
        xs[k], lams[k] = state[:, :n], state[:, n:]
        if k == horizon:
            break
        if use_fast:
            xv, lv = _rk4_exact_pw(
                state[:, 0].copy(), state[:, 1].copy(), a, b, c, d,
                adj, deg, alpha, h, cfg.substeps_per_period,
            )
            state = np.stack([xv, lv], axis=1)
        else:
            for _ in range(cfg.substeps_per_period):
                k1 = f(state)
                k2 = f(state + 0.5 * h * k1)
                k3 = f(state + 0.5 * h * k2)
                k4 = f(state + h * k3)
                state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > cfg.blowup_guard:
            raise DivergenceError("exact flow exceeded the blow-up guard", step=k)

    zeros = np.zeros(horizon + 1)
    return TrajectoryRecord(
        times=times, x=xs, lam=lams, q_x=xs.copy(), q_lam=lams.copy(),
        e_norm=zeros, bits_cum=zeros.copy(), period=T, dimension=n, quantized=False,
    )
