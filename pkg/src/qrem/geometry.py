"""Large-deviation geometry on the Hamming cube and the finite-N pressure bounds.

The pressure of every realization is sandwiched between two variational lower
bounds and a Golden-Thompson upper bound built from the split

    H = U_L (+) H_{L^c} - Gamma * A_L

where ``L`` collects configurations with ``U(sigma) <= -eps N`` and ``A_L`` is
the 0/1 matrix of hypercube edges touching ``L``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, fields

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .analytics import k_epsilon, p_par
from .errors import ConvergenceError, DomainError
from .model import DisorderField, QremOperator, field_mean
from .spectral import pressure_exact_classical, pressure_exact_dense


def _check_eps(eps):
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")


def _lookup(sorted_keys: np.ndarray, queries: np.ndarray):
    """Positions of ``queries`` in ``sorted_keys`` and a hit mask."""
    if len(sorted_keys) == 0:
        return np.zeros(len(queries), dtype=np.int64), np.zeros(len(queries), dtype=bool)
    pos = np.searchsorted(sorted_keys, queries)
    pos = np.minimum(pos, len(sorted_keys) - 1)
    return pos, sorted_keys[pos] == queries


@dataclass(frozen=True, eq=False)
class LargeDeviationSet:
    n: int
    eps: float
    members: np.ndarray

    def __len__(self):
        return len(self.members)

    def __contains__(self, index):
        return bool(_lookup(self.members, np.array([index]))[1][0])


def large_deviation_set(field: DisorderField, eps: float) -> LargeDeviationSet:
    """Configurations with ``U(sigma) <= -eps * N``."""
    _check_eps(eps)
    members = np.flatnonzero(field.values <= -eps * field.n).astype(np.int64)
    return LargeDeviationSet(field.n, eps, members)


def _close_masks(n: int) -> np.ndarray:
    """XOR masks of all displacements with Hamming weight 1 or 2."""
    singles = [1 << j for j in range(n)]
    doubles = [(1 << i) | (1 << j) for i, j in itertools.combinations(range(n), 2)]
    return np.array(singles + doubles, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class ClusterDecomposition:
    n: int
    eps: float
    components: list
    max_size: int
    k_eps: int

    def size_histogram(self) -> dict:
        return dict(sorted(Counter(len(c) for c in self.components).items()))


def cluster_decomposition(ldset: LargeDeviationSet) -> ClusterDecomposition:
    """Split ``L`` into maximal components under distance-<=2 adjacency.

    Distinct components end up more than Hamming distance 2 apart.
    Components are sorted and listed in order of their smallest member.
    """
    members = ldset.members
    k_eps = k_epsilon(ldset.eps)
    if len(members) == 0:
        return ClusterDecomposition(ldset.n, ldset.eps, [], 0, k_eps)
    rows, cols = [], []
    for mask in _close_masks(ldset.n):
        pos, hit = _lookup(members, members ^ mask)
        rows.append(np.flatnonzero(hit))
        cols.append(pos[hit])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    graph = sp.coo_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(len(members),) * 2
    )
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    components = sorted((members[g] for g in np.split(order, splits)), key=lambda c: c[0])
    return ClusterDecomposition(
        ldset.n, ldset.eps, components, max(len(c) for c in components), k_eps
    )


def set_distance(a, b) -> int:
    """Minimum Hamming distance between two sets of configuration indices."""
    x = np.bitwise_xor.outer(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
    return int(np.min(np.bitwise_count(x)))


@dataclass(frozen=True, eq=False)
class RemainderOperator:
    """Hypercube edges ``(u, v)``, ``u < v``, with at least one endpoint in ``L``."""

    n: int
    edges: np.ndarray

    @property
    def dim(self) -> int:
        return 1 << self.n

    def touched(self) -> np.ndarray:
        return np.unique(self.edges)

    def restricted_matrix(self):
        """Symmetric 0/1 matrix on the touched vertices, with their indices."""
        verts = self.touched()
        u = np.searchsorted(verts, self.edges[:, 0])
        v = np.searchsorted(verts, self.edges[:, 1])
        data = np.ones(2 * len(u))
        m = sp.csr_matrix(
            (data, (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(len(verts),) * 2
        )
        return verts, m

    def to_sparse(self):
        e = self.edges
        data = np.ones(2 * len(e))
        return sp.csr_matrix(
            (data, (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(self.dim, self.dim),
        )


def build_remainder(ldset: LargeDeviationSet) -> RemainderOperator:
    m = ldset.members
    if len(m) == 0:
        return RemainderOperator(ldset.n, np.zeros((0, 2), dtype=np.int64))
    nb = m[:, None] ^ (np.int64(1) << np.arange(ldset.n, dtype=np.int64))
    ends = np.broadcast_to(m[:, None], nb.shape)
    edges = np.stack([np.minimum(ends, nb).ravel(), np.maximum(ends, nb).ravel()], axis=1)
    return RemainderOperator(ldset.n, np.unique(edges, axis=0))


def remainder_norm_exact(rem: RemainderOperator, tol: float = 1e-12) -> float:
    """Operator norm of ``A_L``, the largest eigenvalue of the edge graph.

    Hypercube subgraphs are bipartite, so the spectrum is symmetric and the
    largest algebraic eigenvalue is the norm. Each connected piece of the edge
    graph is handled separately: small pieces exactly, larger ones by
    implicitly restarted Lanczos. Leading eigenvalues within a piece can be
    separated by less than 1e-4 relative, which rules out power iteration.
    """
    if len(rem.edges) == 0:
        return 0.0
    _, a = rem.restricted_matrix()
    _, labels = connected_components(a, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    return max(_top_eigenvalue(a[v][:, v], tol) for v in np.split(order, splits))


_DENSE_BLOCK = 600


def _top_eigenvalue(block, tol):
    if block.shape[0] <= _DENSE_BLOCK:
        return float(np.linalg.eigvalsh(block.toarray())[-1])
    try:
        val = eigsh(block, k=1, which="LA", tol=tol, v0=np.ones(block.shape[0]))[0]
    except ArpackNoConvergence as exc:
        best = float(exc.eigenvalues[0]) if len(exc.eigenvalues) else math.nan
        raise ConvergenceError("Lanczos for remainder norm did not converge", best) from None
    return float(val[0])


def remainder_norm_bound(decomp: ClusterDecomposition, n: int | None = None) -> float:
    """Frobenius-type bound ``sqrt(2 N max|C|)``."""
    n = decomp.n if n is None else n
    return math.sqrt(2.0 * n * decomp.max_size)


@dataclass(frozen=True, eq=False)
class HamiltonianSplit:
    """Pieces of ``H = U_L (+) H_{L^c} - gamma * A``."""

    n: int
    gamma: float
    ldset: LargeDeviationSet
    u_block: np.ndarray
    complement: np.ndarray
    h_complement: sp.csr_matrix
    remainder: RemainderOperator

    def to_sparse(self) -> sp.csr_matrix:
        """Reassemble the full ``2**N x 2**N`` Hamiltonian."""
        dim = 1 << self.n
        members = self.ldset.members
        diag_l = sp.csr_matrix((self.u_block, (members, members)), shape=(dim, dim))
        embed = sp.csr_matrix(
            (np.ones(len(self.complement)), (self.complement, np.arange(len(self.complement)))),
            shape=(dim, len(self.complement)),
        )
        return (
            diag_l + embed @ self.h_complement @ embed.T - self.gamma * self.remainder.to_sparse()
        ).tocsr()


def decompose_hamiltonian(op: QremOperator, eps: float) -> HamiltonianSplit:
    _check_eps(eps)
    ldset = large_deviation_set(op.field, eps)
    in_l = np.zeros(op.dim, dtype=bool)
    in_l[ldset.members] = True
    comp = np.flatnonzero(~in_l).astype(np.int64)

    rows, cols = [np.arange(len(comp))], [np.arange(len(comp))]
    data = [op.field.values[comp]]
    for j in range(op.n):
        pos, hit = _lookup(comp, comp ^ (1 << j))
        rows.append(np.flatnonzero(hit))
        cols.append(pos[hit])
        data.append(np.full(int(hit.sum()), -op.gamma))
    h_comp = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(comp), len(comp)),
    )
    return HamiltonianSplit(
        op.n, op.gamma, ldset, op.field.values[ldset.members].copy(), comp, h_comp,
        build_remainder(ldset),
    )


def gibbs_lower_bounds(op: QremOperator, beta: float) -> tuple[float, float]:
    """Variational lower bounds on ``p_N`` from the two Gibbs trial states.

    ``classical`` uses the classical Gibbs state of ``U`` (off-diagonal ``T``
    has zero expectation there); ``para`` uses the Gibbs state of
    ``gamma*T``, under which ``U`` averages to its configuration mean.
    """
    classical = pressure_exact_classical(op.field, beta).value
    para = p_par(beta * op.gamma) - beta / op.n * field_mean(op.field)
    return classical, para


def golden_thompson_upper(
    op: QremOperator, beta: float, eps: float, a_norm: float | None = None,
    classical: float | None = None,
) -> float:
    """Rigorous per-realization upper bound on ``p_N``.

    ``max(p_N(beta, 0), beta*eps + ln cosh(beta*gamma)) +
    (beta*gamma*||A_L|| + ln 2)/N``. The remainder enters ``H`` with weight
    ``gamma``, hence the ``beta*gamma`` prefactor.
    """
    _check_eps(eps)
    if a_norm is None:
        a_norm = remainder_norm_exact(build_remainder(large_deviation_set(op.field, eps)))
    if classical is None:
        classical = pressure_exact_classical(op.field, beta).value
    n = op.n
    return max(classical, beta * eps + p_par(beta * op.gamma)) + (
        beta * op.gamma * a_norm + math.log(2.0)
    ) / n


@dataclass(frozen=True)
class BoundReport:
    n: int
    p: object
    seed: int | None
    beta: float
    gamma: float
    eps: float
    exact_pressure: float
    classical_lower: float
    para_lower: float
    gt_upper: float
    gt_upper_unweighted: float
    a_norm_exact: float
    a_norm_bound: float
    slack_classical: float
    slack_para: float
    slack_upper: float

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["N"] = out.pop("n")
        if out["p"] == math.inf:
            out["p"] = "inf"
        return out

    def min_slack(self) -> float:
        return min(self.slack_classical, self.slack_para, self.slack_upper)


def bound_report(
    op: QremOperator, beta: float, eps: float, exact_pressure: float | None = None
) -> BoundReport:
    """Evaluate every side of the finite-N sandwich on one realization.

    ``gt_upper_unweighted`` is the variant that multiplies ``||A_L||`` by
    ``beta`` alone; it is reported for comparison, the rigorous bound is
    ``gt_upper``.
    """
    _check_eps(eps)
    if exact_pressure is None:
        exact_pressure = pressure_exact_dense(op, beta).value
    classical, para = gibbs_lower_bounds(op, beta)
    ldset = large_deviation_set(op.field, eps)
    a_norm = remainder_norm_exact(build_remainder(ldset))
    a_bound = remainder_norm_bound(cluster_decomposition(ldset), op.n)
    upper = golden_thompson_upper(op, beta, eps, a_norm=a_norm, classical=classical)
    unweighted = max(classical, beta * eps + p_par(beta * op.gamma)) + (
        beta * a_norm + math.log(2.0)
    ) / op.n
    return BoundReport(
        op.n, op.field.p, op.field.seed, beta, op.gamma, eps, exact_pressure,
        classical, para, upper, unweighted, a_norm, a_bound,
        exact_pressure - classical, exact_pressure - para, upper - exact_pressure,
    )


def omega_event(field: DisorderField, eps: float) -> bool:
    """True when every cluster of ``L`` is smaller than ``K_eps``."""
    decomp = cluster_decomposition(large_deviation_set(field, eps))
    return decomp.max_size < decomp.k_eps
