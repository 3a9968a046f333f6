"""Pressures, partition functions and ground-state energies of ``QremOperator``.

The pressure is ``p_N = N^-1 ln(2^-N Tr exp(-beta H))``. Every exponential
is shifted by the extremal eigenvalue (or Ritz value) before it is formed, so
nothing of order ``exp(N beta)`` is ever evaluated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import CapacityError, ConfigError, ConvergenceError, DomainError
from .model import (
    MAX_DENSE_SPINS,
    TAG_PROBE,
    DisorderField,
    QremOperator,
    _format_p,
    dense_hamiltonian,
    rng_stream,
)

MAX_SLQ_SPINS = 26
# budget (in float64 entries) for the stored Lanczos bases of one probe batch
_BASIS_BUDGET = 1 << 25


class Method(str, enum.Enum):
    EXACT_DENSE = "EXACT_DENSE"
    EXACT_CLASSICAL = "EXACT_CLASSICAL"
    SLQ = "SLQ"


@dataclass(frozen=True)
class PressureRecord:
    n: int
    beta: float
    gamma: float
    p: float | int
    seed: int | None
    value: float
    method: Method
    stderr: float = 0.0

    FIELDS = ("N", "p", "seed", "beta", "gamma", "method", "value", "stderr")

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"pressure is not finite: {self.value}")
        if not self.stderr >= 0:
            raise ValueError("stderr must be non-negative")
        if self.method is Method.EXACT_CLASSICAL and self.gamma != 0:
            raise ValueError("EXACT_CLASSICAL records require gamma = 0")

    def to_dict(self) -> dict:
        return {
            "N": self.n,
            "p": _format_p(self.p),
            "seed": self.seed,
            "beta": self.beta,
            "gamma": self.gamma,
            "method": self.method.value,
            "value": self.value,
            "stderr": self.stderr,
        }


@dataclass(frozen=True)
class SlqConfig:
    num_probes: int = 100
    lanczos_steps: int = 64
    probe_kind: str = "RADEMACHER"
    seed: int = 0

    def __post_init__(self):
        if self.num_probes < 1:
            raise ConfigError("num_probes must be >= 1")
        if self.lanczos_steps < 2:
            raise ConfigError("lanczos_steps must be >= 2")
        if self.probe_kind != "RADEMACHER":
            raise ConfigError(f"unsupported probe kind {self.probe_kind!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_beta(beta):
    if not beta >= 0:
        raise DomainError(f"beta must be >= 0, got {beta}")


def log_mean_exp_neg(beta: float, energies: np.ndarray) -> float:
    """``ln(mean(exp(-beta * E)))``, shifted by ``min(E)``.

    Exactly 0 at ``beta = 0``.
    """
    e_min = float(np.min(energies))
    return -beta * e_min + math.log(np.mean(np.exp(-beta * (energies - e_min))))


def pressure_from_spectrum(energies: np.ndarray, beta: float, n: int) -> float:
    """Pressure of a Hamiltonian on ``2**n`` states given its full spectrum."""
    _check_beta(beta)
    return log_mean_exp_neg(beta, np.asarray(energies)) / n


def dense_spectrum(op: QremOperator) -> np.ndarray:
    if op.n > MAX_DENSE_SPINS:
        raise CapacityError(f"dense diagonalization limited to N <= {MAX_DENSE_SPINS}")
    return np.linalg.eigvalsh(dense_hamiltonian(op))


def pressure_exact_dense(op: QremOperator, beta: float, spectrum=None) -> PressureRecord:
    """Pressure from all eigenvalues of the dense matrix (``N <= 14``).

    A precomputed ``spectrum`` may be passed to reuse one diagonalization over
    many temperatures.
    """
    _check_beta(beta)
    if spectrum is None:
        spectrum = dense_spectrum(op)
    return PressureRecord(
        op.n, beta, op.gamma, op.field.p, op.field.seed,
        pressure_from_spectrum(spectrum, beta, op.n), Method.EXACT_DENSE,
    )


def pressure_exact_classical(field: DisorderField, beta: float) -> PressureRecord:
    """Classical (``Gamma = 0``) pressure by direct summation over configurations."""
    _check_beta(beta)
    return PressureRecord(
        field.n, beta, 0.0, field.p, field.seed,
        pressure_from_spectrum(field.values, beta, field.n), Method.EXACT_CLASSICAL,
    )


def _project(basis, w):
    """Component of each row of ``w`` inside the span of its basis rows."""
    coef = np.matmul(basis, w[:, :, None])
    return np.matmul(coef.transpose(0, 2, 1), basis)[:, 0]


def lanczos_batch(op: QremOperator, q0: np.ndarray, steps: int, return_basis: bool = False):
    """Run independent Lanczos recursions for each row of ``q0``.

    Rows of ``q0`` must be unit vectors. After the three-term recurrence the
    residual is fully reorthogonalized by classical Gram-Schmidt, with a
    second pass for rows that lose more than 30% of their norm. Returns ``(alpha, beta, lengths)``
    where ``alpha`` has shape ``(k, steps)``, ``beta`` shape ``(k, steps)`` and
    ``lengths[i]`` is the Krylov dimension reached by row ``i`` before a
    breakdown. ``beta[i, lengths[i] - 1]`` is the final residual norm.

    All reductions run along the contiguous last axis, so each row's result
    is bitwise independent of how many rows share the batch. With
    ``return_basis`` the orthonormal Krylov bases of shape ``(k, steps, dim)``
    are returned as a fourth element.
    """
    k, dim = q0.shape
    steps = min(steps, dim)
    basis = np.empty((k, steps, dim))
    alpha = np.zeros((k, steps))
    beta = np.zeros((k, steps))
    lengths = np.full(k, steps)
    active = np.ones(k, dtype=bool)
    breakdown = 1e-12 * max(1.0, op.norm_bound())

    q = q0.copy()
    for s in range(steps):
        basis[:, s] = q
        w = op.apply(q)
        alpha[:, s] = np.sum(w * q, axis=-1)
        w -= alpha[:, s, None] * q
        if s > 0:
            w -= beta[:, s - 1, None] * basis[:, s - 1]
        before = np.sqrt(np.sum(w * w, axis=-1))
        w -= _project(basis[:, : s + 1], w)
        b = np.sqrt(np.sum(w * w, axis=-1))
        # second pass only for rows that lost most of their norm
        again = b < 0.7 * before
        if again.any():
            w[again] -= _project(basis[again, : s + 1], w[again])
            b[again] = np.sqrt(np.sum(w[again] * w[again], axis=-1))
        beta[:, s] = np.where(active, b, 0.0)
        stopped = active & (b <= breakdown)
        lengths[stopped] = s + 1
        active &= ~stopped
        if not active.any():
            break
        q = np.zeros_like(w)
        np.divide(w, b[:, None], out=q, where=active[:, None])
    if return_basis:
        return alpha, beta, lengths, basis
    return alpha, beta, lengths


@dataclass(frozen=True)
class SlqQuadrature:
    """Per-probe Gauss quadrature rules for ``z^T f(H) z / |z|^2``.

    Holds nodes (Ritz values) and weights (squared first eigenvector
    components) for each probe; any smooth spectral function can then be
    integrated without rerunning Lanczos.
    """

    n: int
    nodes: list
    weights: list

    def pressure(self, beta: float) -> tuple[float, float]:
        """Pressure estimate and its standard error at inverse temperature ``beta``."""
        _check_beta(beta)
        if beta == 0:
            return 0.0, 0.0
        shift = min(float(np.min(t)) for t in self.nodes)
        # per-probe estimates of exp(beta*shift) * 2^-N Tr exp(-beta H)
        est = np.array(
            [np.sum(w * np.exp(-beta * (t - shift))) for t, w in zip(self.nodes, self.weights)]
        )
        mean = float(np.mean(est))
        value = (-beta * shift + math.log(mean)) / self.n
        if len(est) < 2:
            return value, math.inf
        stderr = float(np.std(est, ddof=1)) / math.sqrt(len(est)) / mean / self.n
        return value, stderr


def slq_quadrature(op: QremOperator, cfg: SlqConfig) -> SlqQuadrature:
    """Lanczos quadrature rules for ``cfg.num_probes`` Rademacher probes.

    Probe ``i`` is drawn from the stream keyed by ``(cfg.seed, i)``, so the
    result does not depend on batching or scheduling.
    """
    if op.n > MAX_SLQ_SPINS:
        raise CapacityError(f"SLQ limited to N <= {MAX_SLQ_SPINS}")
    dim = op.dim
    steps = min(cfg.lanczos_steps, dim)
    batch = max(1, min(cfg.num_probes, _BASIS_BUDGET // (steps * dim)))
    scale = 1.0 / math.sqrt(dim)
    nodes, weights = [], []
    for start in range(0, cfg.num_probes, batch):
        ids = range(start, min(cfg.num_probes, start + batch))
        q0 = np.empty((len(ids), dim))
        for row, i in enumerate(ids):
            bits = rng_stream(cfg.seed, TAG_PROBE, i).integers(0, 2, dim)
            q0[row] = (1.0 - 2.0 * bits) * scale
        alpha, beta, lengths = lanczos_batch(op, q0, steps)
        for row in range(len(ids)):
            m = lengths[row]
            theta, vecs = eigh_tridiagonal(alpha[row, :m], beta[row, : m - 1])
            nodes.append(theta)
            weights.append(vecs[0] ** 2)
    return SlqQuadrature(op.n, nodes, weights)


def pressure_slq(op: QremOperator, beta: float, cfg: SlqConfig | None = None) -> PressureRecord:
    """Stochastic Lanczos quadrature estimate of the pressure (``N <= 26``)."""
    _check_beta(beta)
    cfg = cfg or SlqConfig()
    if beta == 0:
        value, stderr = 0.0, 0.0
    else:
        value, stderr = slq_quadrature(op, cfg).pressure(beta)
    return PressureRecord(op.n, beta, op.gamma, op.field.p, op.field.seed, value, Method.SLQ, stderr)


def ground_state_energy(
    op: QremOperator, tol: float = 1e-8, max_steps: int = 500, restart: int = 40
) -> float:
    """Smallest eigenvalue of ``H`` by restarted Lanczos on the matrix-free product.

    Converged when the Ritz residual norm, which bounds the eigenvalue error,
    drops below ``tol``. Starts from the uniform vector, which overlaps the
    positive Perron ground state of ``H`` whenever ``gamma > 0``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if op.gamma == 0:
        return float(np.min(op.field.values))
    v = np.full((1, op.dim), 1.0 / math.sqrt(op.dim))
    used = 0
    best = math.nan
    while used < max_steps:
        m = min(restart, max_steps - used, op.dim)
        alpha, beta, lengths, basis = lanczos_batch(op, v, m, return_basis=True)
        m = int(lengths[0])
        used += m
        theta, vecs = eigh_tridiagonal(alpha[0, :m], beta[0, : m - 1])
        best = float(theta[0])
        residual = beta[0, m - 1] * abs(vecs[-1, 0])
        if residual <= tol or m < min(restart, op.dim) or m == op.dim:
            return best
        # restart from the current Ritz vector
        ritz = vecs[:, 0] @ basis[0, :m]
        v = (ritz / np.linalg.norm(ritz))[None, :]
    raise ConvergenceError(
        f"ground state not converged to {tol} within {max_steps} Lanczos steps", best
    )

