"""Configurations, disorder fields and the QREM Hamiltonian ``H = Gamma*T + U``.

Configurations are bit-encoded: bit ``j`` of the index is 0 when spin ``j`` is
+1 and 1 when it is -1, so flipping spin ``j`` is an XOR with ``1 << j`` and
index 0 is the all-up configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, DimensionError, DomainError

INF = math.inf

MAX_SPINS = 30
MAX_DENSE_SPINS = 14
MAX_PSPIN_TUPLES = 10**8

# purpose tags for keyed random streams
TAG_REM = 1
TAG_PSPIN = 2
TAG_PROBE = 3

_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, tag, index)``.

    Streams with different keys are statistically independent, so ensembles
    can be generated in any order.
    """
    if not 0 <= seed <= _MASK64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def realization_seed(base_seed: int, index: int) -> int:
    """SplitMix64 mix of ``base_seed`` and a realization index."""
    z = (base_seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SpinConfiguration:
    index: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("need at least one spin")
        if not 0 <= self.index < (1 << self.n):
            raise DomainError(f"index {self.index} out of range for N={self.n}")

    @classmethod
    def from_spins(cls, spins) -> SpinConfiguration:
        spins = [int(s) for s in spins]
        if any(s not in (1, -1) for s in spins):
            raise DomainError("spins must be +1 or -1")
        index = sum(1 << j for j, s in enumerate(spins) if s == -1)
        return cls(index, len(spins))

    @property
    def spins(self) -> np.ndarray:
        bits = (self.index >> np.arange(self.n)) & 1
        return 1 - 2 * bits

    def flip(self, j: int) -> SpinConfiguration:
        return SpinConfiguration(self.index ^ (1 << j), self.n)


def _check_same_n(a: SpinConfiguration, b: SpinConfiguration):
    if a.n != b.n:
        raise DimensionError(f"spin counts differ: {a.n} vs {b.n}")


def hamming_distance(a: SpinConfiguration, b: SpinConfiguration) -> int:
    _check_same_n(a, b)
    return (a.index ^ b.index).bit_count()


def overlap(a: SpinConfiguration, b: SpinConfiguration) -> float:
    """Normalized overlap ``N^-1 sum_j a_j b_j``."""
    return (a.n - 2 * hamming_distance(a, b)) / a.n


def covariance_oracle(p, a: SpinConfiguration, b: SpinConfiguration) -> float:
    """Covariance ``N * overlap**p`` of the p-spin field (``p = INF`` is the REM)."""
    _check_same_n(a, b)
    if p == INF:
        return float(a.n) if a.index == b.index else 0.0
    return a.n * overlap(a, b) ** int(p)


def spin_matrix(n: int) -> np.ndarray:
    """All ``2**n`` configurations as rows of +-1 values."""
    idx = np.arange(1 << n)[:, None]
    return (1 - 2 * ((idx >> np.arange(n)) & 1)).astype(np.float64)


def _format_p(p):
    return "inf" if p == INF else int(p)


def _parse_p(p):
    if isinstance(p, str) and p.strip().lower() in ("inf", "infinity"):
        return INF
    if isinstance(p, float) and math.isinf(p):
        return INF
    p = int(p)
    if p < 1:
        raise DomainError(f"interaction order must be >= 1 or inf, got {p}")
    return p


@dataclass(frozen=True, eq=False)
class DisorderField:
    """Realized energies ``U(sigma)`` over all ``2**n`` configurations.

    ``seed`` is ``None`` for synthetic fields that cannot be regenerated.
    """

    n: int
    p: float | int
    seed: int | None
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (1 << self.n,):
            raise DimensionError(
                f"expected {1 << self.n} values for N={self.n}, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, n: int, c: float = 0.0) -> DisorderField:
        return cls(n, INF, None, np.full(1 << n, float(c)))

    @property
    def dim(self) -> int:
        return 1 << self.n

    def checksum(self) -> str:
        return hashlib.sha256(self.values.astype("<f8").tobytes()).hexdigest()

    def regenerate(self) -> DisorderField:
        if self.seed is None:
            raise DomainError("synthetic field has no seed")
        return sample_field(self.n, self.p, self.seed)

    def to_dict(self) -> dict:
        return {
            "N": self.n,
            "p": _format_p(self.p),
            "seed": self.seed,
            "checksum": self.checksum(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, verify: bool = True) -> DisorderField:
        field = cls(int(data["N"]), _parse_p(data["p"]), data.get("seed"), data["values"])
        if verify and "checksum" in data and data["checksum"] != field.checksum():
            raise ValueError("checksum mismatch: stored values are corrupted")
        return field

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path, verify: bool = True) -> DisorderField:
        return cls.from_dict(json.loads(Path(path).read_text()), verify=verify)


def sample_rem_field(n: int, seed: int) -> DisorderField:
    """REM energies ``sqrt(N) * g(sigma)`` with i.i.d. standard normal ``g``."""
    if not 1 <= n <= MAX_SPINS:
        raise CapacityError(f"N={n} outside supported range 1..{MAX_SPINS}")
    g = rng_stream(seed, TAG_REM).standard_normal(1 << n)
    return DisorderField(n, INF, seed, math.sqrt(n) * g)


def sample_pspin_field(n: int, p: int, seed: int) -> DisorderField:
    """Gaussian p-spin field with covariance ``N * overlap**p``.

    Realized through i.i.d. standard normal couplings on all ordered p-tuples
    (repeated indices included), scaled by ``N**((1 - p)/2)``.
    """
    if p == INF:
        raise DomainError("use sample_rem_field for p = inf")
    p = int(p)
    if p < 1 or n < 1:
        raise DomainError("need N >= 1 and p >= 1")
    if n > MAX_SPINS or n**p > MAX_PSPIN_TUPLES:
        raise CapacityError(f"N**p = {n}**{p} couplings is not feasible")
    couplings = rng_stream(seed, TAG_PSPIN).standard_normal(n**p)
    dim = 1 << n
    rest = n ** (p - 1)
    chunk = max(1, (1 << 24) // rest)
    values = np.empty(dim)
    for start in range(0, dim, chunk):
        idx = np.arange(start, min(dim, start + chunk))[:, None]
        s = (1 - 2 * ((idx >> np.arange(n)) & 1)).astype(np.float64)
        # contract one tuple index at a time; leading index first
        x = s @ couplings.reshape(n, rest)
        for k in range(p - 1, 0, -1):
            x = np.einsum("cn,cnr->cr", s, x.reshape(len(s), n, n ** (k - 1)))
        values[start : start + len(s)] = x[:, 0]
    return DisorderField(n, p, seed, values * n ** ((1 - p) / 2))


def sample_field(n: int, p, seed: int) -> DisorderField:
    p = _parse_p(p)
    if p == INF:
        return sample_rem_field(n, seed)
    return sample_pspin_field(n, p, seed)


def field_mean(field: DisorderField) -> float:
    return float(np.mean(field.values))


@dataclass(frozen=True)
class QremOperator:
    """``H = gamma * T + U`` with ``(T psi)(sigma) = -sum_j psi(F_j sigma)``."""

    gamma: float
    field: DisorderField

    def __post_init__(self):
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def n(self) -> int:
        return self.field.n

    @property
    def dim(self) -> int:
        return self.field.dim

    def norm_bound(self) -> float:
        """Cheap upper bound ``max|U| + gamma*N`` on the operator norm."""
        return float(np.max(np.abs(self.field.values))) + self.gamma * self.n

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply_hamiltonian(self, v)


def apply_hamiltonian(op: QremOperator, v: np.ndarray) -> np.ndarray:
    """Matrix-free ``H v``; ``v`` may carry leading batch axes.

    The last axis of ``v`` must have length ``2**N``. Cost is ``O(N 2**N)``
    per vector.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0 or v.shape[-1] != op.dim:
        raise DimensionError(f"vector length must be {op.dim}, got shape {v.shape}")
    out = op.field.values * v
    if op.gamma == 0:
        return out
    lead = v.shape[:-1]
    hop = np.zeros_like(out)
    for j in range(op.n):
        shape = lead + (op.dim >> (j + 1), 2, 1 << j)
        # flipping bit j reverses the middle axis of this view
        hop.reshape(shape)[...] += v.reshape(shape)[..., ::-1, :]
    out -= op.gamma * hop
    return out


def dense_hamiltonian(op: QremOperator) -> np.ndarray:
    if op.n > MAX_DENSE_SPINS:
        raise CapacityError(f"dense Hamiltonian limited to N <= {MAX_DENSE_SPINS}")
    idx = np.arange(op.dim)
    h = np.diag(op.field.values)
    for j in range(op.n):
        h[idx, idx ^ (1 << j)] = -op.gamma
    return h
