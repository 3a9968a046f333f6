"""Closed-form thermodynamics of the QREM in the thermodynamic limit."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError

LN2 = math.log(2.0)


class Phase(str, enum.Enum):
    REM_HIGH_T = "REM_HIGH_T"
    REM_FROZEN = "REM_FROZEN"
    PARAMAGNET = "PARAMAGNET"
    BOUNDARY = "BOUNDARY"


@dataclass(frozen=True)
class PhasePoint:
    beta: float
    gamma: float
    phase: Phase


def beta_c() -> float:
    """Freezing inverse temperature ``sqrt(2 ln 2)``."""
    return math.sqrt(2.0 * LN2)


def _nonneg(name, x):
    if not x >= 0:
        raise DomainError(f"{name} must be >= 0, got {x}")


def p_rem(beta: float) -> float:
    """Limiting REM pressure: ``beta^2/2`` below ``beta_c``, linear above."""
    _nonneg("beta", beta)
    bc = beta_c()
    if beta <= bc:
        return 0.5 * beta * beta
    return 0.5 * bc * bc + (beta - bc) * bc


def p_par(x: float) -> float:
    """Paramagnetic pressure ``ln cosh(x)`` with ``x = beta * gamma``."""
    ax = abs(x)
    if ax < 20.0:
        # cosh(x) - 1 = 2 sinh(x/2)^2 keeps full relative precision near 0
        return math.log1p(2.0 * math.sinh(0.5 * ax) ** 2)
    return ax + math.log1p(math.exp(-2.0 * ax)) - LN2


def goldschmidt_pressure(beta: float, gamma: float) -> float:
    _nonneg("beta", beta)
    _nonneg("gamma", gamma)
    return max(p_rem(beta), p_par(beta * gamma))


def _arcosh_exp(y: float) -> float:
    # arcosh(e^y) = y + ln(1 + sqrt(1 - e^{-2y})), stable for large and small y
    return y + math.log1p(math.sqrt(-math.expm1(-2.0 * y)))


def gamma_c(beta: float) -> float:
    """First-order transition field ``arcosh(exp(p_rem(beta))) / beta``.

    Extended continuously to 1 at ``beta = 0``.
    """
    _nonneg("beta", beta)
    if beta == 0:
        return 1.0
    return _arcosh_exp(p_rem(beta)) / beta


def gamma_c_bisect(beta: float, xtol: float = 1e-14) -> float:
    """Root of ``p_par(beta*G) = p_rem(beta)`` in ``G`` found by bisection."""
    if not beta > 0:
        raise DomainError("bisection needs beta > 0")
    target = p_rem(beta)
    # ln cosh(x) >= x - ln 2, so the root lies below (target + ln 2)/beta
    lo, hi = 0.0, (target + LN2) / beta + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p_par(beta * mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def magnetization_par(beta: float, gamma: float) -> float:
    """Transverse magnetization ``tanh(beta*gamma)`` of the paramagnetic phase."""
    _nonneg("beta", beta)
    _nonneg("gamma", gamma)
    return math.tanh(beta * gamma)


def rem_entropy(beta: float) -> float:
    """Entropy per spin ``p_rem - beta p_rem' + ln 2`` of the REM branch.

    Equals ``ln 2 - beta^2/2`` up to ``beta_c`` and vanishes beyond it.
    """
    _nonneg("beta", beta)
    if beta >= beta_c():
        return 0.0
    return LN2 - 0.5 * beta * beta


def hamming_ball_volume(n: int, r: int) -> int:
    if not 0 <= r <= n <= 64:
        raise DomainError(f"need 0 <= r <= N <= 64, got N={n}, r={r}")
    return sum(math.comb(n, j) for j in range(r + 1))


def ball_volume_bound(n: int, r: int) -> float:
    """Polynomial volume bound ``e * N**r``."""
    if n < 1 or r < 0:
        raise DomainError("need N >= 1 and r >= 0")
    return math.e * float(n) ** r


def k_epsilon(eps: float) -> int:
    """Cluster size threshold ``ceil(4 ln 2 / eps^2)``."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return math.ceil(4.0 * LN2 / (eps * eps))


def r_epsilon(eps: float) -> int:
    return 4 * k_epsilon(eps)


def ball_adjacency_norm_bound(n: int, rho: float) -> float:
    """Leading term ``2N sqrt(rho(1-rho))`` of the Hamming-ball adjacency norm."""
    if not 0 < rho < 0.5:
        raise DomainError(f"rho must lie in (0, 1/2), got {rho}")
    return 2.0 * n * math.sqrt(rho * (1.0 - rho))


def classify_phase(beta: float, gamma: float, tol: float = 1e-9) -> PhasePoint:
    if not tol > 0:
        raise DomainError("tol must be positive")
    diff = p_par(beta * gamma) - p_rem(beta)
    if abs(diff) <= tol:
        phase = Phase.BOUNDARY
    elif diff > 0:
        phase = Phase.PARAMAGNET
    elif beta > beta_c():
        phase = Phase.REM_FROZEN
    else:
        phase = Phase.REM_HIGH_T
    return PhasePoint(beta, gamma, phase)
