"""Derivation and validation of every scalar the quantized protocol needs:
the sampling-period predicate, range-length schedule, quantization level,
and the bandwidth/rate relation with its constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .codec import LengthSchedule

# Largest eigenvalue factor of the stacked error system: sqrt((3+sqrt(5))/2).
SIGMA_BAR = math.sqrt((3.0 + math.sqrt(5.0)) / 2.0)
# The same constant as it appears doubled inside the bandwidth schedule:
# sqrt(24+8*sqrt(5)) = 2*sqrt(6+2*sqrt(5)).
SQRT_24_8 = math.sqrt(24.0 + 8.0 * math.sqrt(5.0))


class InfeasibleParametersError(ValueError):
    """A derivation radicand or predicate failed; names the violated inequality."""

    def __init__(self, message, inequality=None, margin=None):
        super().__init__(message)
        self.inequality = inequality
        self.margin = margin


def _require_positive(**values):
    for name, v in values.items():
        if v is None or v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class ParameterSet:
    """All scalar constants of one run; manual mode leaves the derived-theory
    fields (kappa, eta, magnitude bounds, rho) unset."""

    T: float
    L: int
    l0: float
    alpha: float = 1.0
    mode: str = "derived"
    step_decay: float = None      # per-step range decay; eta*T/2 in derived mode
    eta: float = None
    kappa: float = None
    m_f: float = None
    beta: float = None
    c1: float = None
    c2: float = None
    sigma2: float = None
    sigmaN: float = None
    M: float = None
    Mprime: float = None
    M0: float = None
    M1: float = None
    M2: float = None
    rho: float = None
    rho0: float = None
    N: int = None
    n: int = 1

    def __post_init__(self):
        _require_positive(T=self.T, l0=self.l0, alpha=self.alpha)
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.step_decay is not None and self.step_decay <= 0:
            raise ValueError("step_decay must be positive")
        if self.mode == "derived":
            if not (self.beta is not None and 0.0 < self.beta < 1.0):
                raise ValueError(f"beta must lie in (0,1), got {self.beta}")
            if not (self.c1 is not None and 0.0 < self.c1 < 1.0):
                raise ValueError(f"c1 must lie in (0,1), got {self.c1}")
            if not (self.c2 is not None and 0.0 < self.c2 < 1.0 - self.c1):
                raise ValueError(f"c2 must lie in (0, 1-c1), got {self.c2}")
            if self.rho0 is not None and self.rho0 <= 1.0:
                raise ValueError(f"rho0 must exceed 1, got {self.rho0}")

    def schedule(self) -> LengthSchedule:
        decay = self.step_decay
        if decay is None:
            decay = self.alpha * self.eta / 2.0 * self.T
        return LengthSchedule.from_step_decay(self.l0, decay, self.T)


def derive_eta(beta: float, kappa: float, m_f: float, sigmaN: float) -> float:
    """Decay rate eta = beta / (kappa^2 (m_f + 6 sigmaN))."""
    _require_positive(beta=beta, kappa=kappa, m_f=m_f, sigmaN=sigmaN)
    if beta >= 1.0:
        raise ValueError(f"beta must lie in (0,1), got {beta}")
    return beta / (kappa ** 2 * (m_f + 6.0 * sigmaN))


def derive_rho(eta: float, kappa: float, m_f: float, sigmaN: float) -> float:
    _require_positive(eta=eta, kappa=kappa, m_f=m_f, sigmaN=sigmaN)
    radicand = sigmaN - sigmaN * kappa ** 2 * (eta + 4.0) * (m_f + 4.0 * sigmaN)
    if radicand <= 0.0:
        raise InfeasibleParametersError(
            "sigmaN - sigmaN*kappa^2*(eta+4)*(m_f+4*sigmaN) must be positive "
            f"(got {radicand:.6g}); decrease kappa",
            inequality="rho radicand",
            margin=radicand,
        )
    num = math.sqrt(2.0) * (6.0 * sigmaN + 2.0 * m_f) * kappa * math.sqrt(
        (m_f + 4.0 * sigmaN) * (4.0 * sigmaN + 11.0)
    )
    den = eta * math.sqrt(3.0 + math.sqrt(5.0)) * math.sqrt(radicand)
    return num / den


def check_T(T: float, p: ParameterSet):
    """Sampling-period predicate with gain folded in; returns (ok, slack)."""
    try:
        lhs = (
            (math.expm1(p.alpha * SIGMA_BAR * p.sigmaN * T))
            * (math.expm1(p.alpha * p.eta / 2.0 * T))
            * p.rho
            / p.alpha
        )
    except OverflowError:
        lhs = math.inf
    slack = p.c1 - lhs
    return slack >= 0.0, slack


def derive_l0(p: ParameterSet) -> float:
    """Initial range length from the theory's closed form."""
    radicand = 3.0 - p.kappa ** 2 * (3.0 * p.eta + 4.0) * (p.m_f + 6.0 * p.sigmaN)
    if radicand <= 0.0:
        raise InfeasibleParametersError(
            "3 - kappa^2*(3*eta+4)*(m_f+6*sigmaN) must be positive "
            f"(got {radicand:.6g}); decrease kappa or beta",
            inequality="l0 radicand",
            margin=radicand,
        )
    Nn = p.N * p.n
    return (
        math.sqrt(2.0) * p.c2 * p.M0 / (p.kappa * p.sigmaN)
        * math.sqrt(radicand / (Nn * (12.0 * p.sigmaN + 33.0)))
        * math.exp(
            -p.alpha * p.eta / 2.0 * p.T - p.alpha * SIGMA_BAR * p.sigmaN * p.T
        )
    )


def derive_L(p: ParameterSet) -> int:
    """Minimal admissible quantization level count minus one."""
    if p.l0 <= 0:
        raise ValueError("l0 must be positive")
    Nn = p.N * p.n
    second = (
        math.sqrt(2.0 * Nn) / p.c2
        * math.exp(p.alpha * p.eta / 2.0 * p.T + p.alpha * SIGMA_BAR * p.sigmaN * p.T)
    )
    return math.ceil(max(2.0 * p.M0 / p.l0, second))


def magnitude_bounds(z0_inf: float, lambda0_sum: float, sigma2: float,
                     M1: float, M2: float, N: int, n: int = 1):
    """(M, M', M0) from the initial condition and the centralized solution."""
    Nn = N * n
    M = max(z0_inf, 1e-12)
    Mprime = (
        lambda0_sum / math.sqrt(Nn)
        + (math.sqrt(Nn) / sigma2 + math.sqrt(Nn)) * M1
        + math.sqrt(Nn) * M2
    )
    M0 = math.sqrt(2.0 * Nn) * M + Mprime
    return M, Mprime, M0


def derive_parameters(*, kappa, beta, c1, c2, rho0, alpha, m_f, sigma2, sigmaN,
                      N, n, z0_inf, lambda0_sum, M1, M2,
                      T: float = None) -> ParameterSet:
    """Build a fully derived ParameterSet; T defaults to the bandwidth-optimal
    schedule for the requested gain."""
    eta = derive_eta(beta, kappa, m_f, sigmaN)
    rho = derive_rho(eta, kappa, m_f, sigmaN)
    M, Mprime, M0 = magnitude_bounds(z0_inf, lambda0_sum, sigma2, M1, M2, N, n)
    if T is None:
        gamma = math.exp(alpha * eta / 2.0)
        T = 1.0 / (
            (SQRT_24_8 * sigmaN + 2.0 * eta) / (2.0 * eta * math.log(rho0))
            * math.log(gamma)
            + 2.0 * c1 / (rho * rho0 * eta)
        )
    base = ParameterSet(
        T=T, L=1, l0=1.0, alpha=alpha, mode="derived", eta=eta, kappa=kappa,
        m_f=m_f, beta=beta, c1=c1, c2=c2, sigma2=sigma2, sigmaN=sigmaN,
        M=M, Mprime=Mprime, M0=M0, M1=M1, M2=M2, rho=rho, rho0=rho0, N=N, n=n,
    )
    ok, slack = check_T(T, base)
    if not ok:
        raise InfeasibleParametersError(
            f"sampling period {T} violates the rate predicate by {-slack:.6g}",
            inequality="period predicate",
            margin=slack,
        )
    l0 = derive_l0(base)
    base = replace(base, l0=l0)
    L = derive_L(base)
    return replace(base, L=L)


def manual_mode(*, T: float, l0: float, step_decay: float, L: int,
                alpha: float = 1.0, N: int = None, n: int = 1,
                m_f: float = None, sigma2: float = None,
                sigmaN: float = None) -> ParameterSet:
    """ParameterSet from user-supplied values, skipping feasibility derivation."""
    _require_positive(T=T, l0=l0, step_decay=step_decay)
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    return ParameterSet(
        T=T, L=L, l0=l0, alpha=alpha, mode="manual", step_decay=step_decay,
        N=N, n=n, m_f=m_f, sigma2=sigma2, sigmaN=sigmaN,
    )


@dataclass(frozen=True)
class BandwidthReport:
    alpha: float
    T_alpha: float
    L_alpha: int
    bandwidth: float
    rate: float
    bound: float
    C0: float
    C1: float
    holds: bool
    # The theory's constants mix the two split constants (c1 inside the
    # period schedule, c2 inside C1); kept as printed and flagged here.
    constant_mismatch_note: str = field(
        default="bound constant C1 uses c2 while the period schedule uses c1",
        repr=False,
    )


def bandwidth_relation(alpha: float, p: ParameterSet) -> BandwidthReport:
    """Bandwidth/rate relation at gain alpha for a feasible derived set."""
    if p.mode != "derived":
        raise InfeasibleParametersError(
            "bandwidth relation needs a derived-mode ParameterSet"
        )
    _require_positive(alpha=alpha)
    if p.rho0 is None or p.rho0 <= 1.0:
        raise ValueError("rho0 must exceed 1")
    eta, rho, rho0 = p.eta, p.rho, p.rho0
    gamma = math.exp(alpha * eta / 2.0)
    T_alpha = 1.0 / (
        (SQRT_24_8 * p.sigmaN + 2.0 * eta) / (2.0 * eta * math.log(rho0))
        * math.log(gamma)
        + 2.0 * p.c1 / (rho * rho0 * eta)
    )
    scaled = replace(p, T=T_alpha, alpha=alpha)
    l0 = derive_l0(scaled)
    scaled = replace(scaled, l0=l0)
    L_alpha = derive_L(scaled)
    bandwidth = math.log2(L_alpha) / T_alpha
    Nn = p.N * p.n
    log2e = math.log2(math.e)
    C0 = (
        log2e * (1.0 + math.sqrt(6.0 + math.sqrt(5.0)) * p.sigmaN / eta)
        + (SQRT_24_8 * p.sigmaN + 2.0 * eta) / (eta * math.log(rho0))
        * (math.log2(2.0 * Nn) - 2.0 * math.log2(p.c2))
    )
    C1 = (0.5 * math.log2(2.0 * Nn) - math.log2(p.c2)) * 2.0 * p.c2 / (rho * rho0 * eta)
    bound = C0 * math.log(gamma) + C1
    return BandwidthReport(
        alpha=alpha, T_alpha=T_alpha, L_alpha=L_alpha, bandwidth=bandwidth,
        rate=gamma, bound=bound, C0=C0, C1=C1, holds=bandwidth <= bound,
    )
