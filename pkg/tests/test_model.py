import json
import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrem.errors import CapacityError, DimensionError
from qrem.model import (
    INF,
    DisorderField,
    QremOperator,
    SpinConfiguration,
    apply_hamiltonian,
    covariance_oracle,
    dense_hamiltonian,
    field_mean,
    hamming_distance,
    realization_seed,
    sample_field,
    sample_pspin_field,
    sample_rem_field,
)


def test_spin_encoding_all_up_is_zero():
    assert list(SpinConfiguration(0, 4).spins) == [1, 1, 1, 1]
    assert list(SpinConfiguration(0b0101, 4).spins) == [-1, 1, -1, 1]
    assert SpinConfiguration.from_spins([-1, 1, -1, 1]).index == 0b0101
    assert SpinConfiguration(0, 3).flip(2).index == 4


def test_hamming_distance_examples():
    a = SpinConfiguration(0b0011, 4)
    assert hamming_distance(a, a) == 0
    assert hamming_distance(a, SpinConfiguration(0b1100, 4)) == 4
    assert hamming_distance(a, SpinConfiguration(0b0101, 4)) == 2
    with pytest.raises(DimensionError):
        hamming_distance(a, SpinConfiguration(0, 5))


@given(st.integers(1, 20).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1), st.integers(0, 2**n - 1))))
def test_hamming_distance_matches_spin_comparison(args):
    n, i, j = args
    a, b = SpinConfiguration(i, n), SpinConfiguration(j, n)
    assert hamming_distance(a, b) == int(np.sum(a.spins != b.spins))


def test_covariance_oracle_examples():
    s = SpinConfiguration(0, 10)
    assert covariance_oracle(INF, s, s) == 10
    assert covariance_oracle(INF, s, s.flip(3)) == 0
    # N=4, distance 1 -> overlap 1/2
    a = SpinConfiguration(0, 4)
    assert covariance_oracle(2, a, a.flip(0)) == pytest.approx(1.0)
    assert covariance_oracle(1, a, a) == 4
    assert covariance_oracle(1, a, SpinConfiguration(15, 4)) == -4
    with pytest.raises(DimensionError):
        covariance_oracle(2, a, SpinConfiguration(0, 5))


def test_rem_field_determinism_and_scale():
    a = sample_rem_field(16, 42)
    b = sample_rem_field(16, 42)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.checksum() == b.checksum()
    assert not np.array_equal(a.values, sample_rem_field(16, 43).values)
    assert abs(np.var(a.values) / 16 - 1) < 0.05
    assert len(sample_rem_field(1, 7).values) == 2


def test_rem_field_capacity():
    with pytest.raises(CapacityError):
        sample_rem_field(31, 0)
    with pytest.raises(CapacityError):
        sample_rem_field(0, 0)


def test_rem_n1_variance_over_seeds():
    vals = np.array([sample_rem_field(1, s).values for s in range(4000)])
    # two independent unit-variance entries
    assert np.var(vals[:, 0]) == pytest.approx(1.0, abs=0.1)
    assert abs(np.corrcoef(vals.T)[0, 1]) < 0.06


def test_pspin_covariance_diagonal_and_antipodal_exact():
    # p = 1: U(sigma) = sum_j J_j sigma_j, so U(-sigma) = -U(sigma) exactly
    f = sample_pspin_field(6, 1, 3)
    assert np.allclose(f.values[np.arange(64) ^ 63], -f.values)


def test_pspin_capacity_guard():
    with pytest.raises(CapacityError):
        sample_pspin_field(30, 6, 0)


def test_pspin_matches_explicit_tensor_contraction():
    n, p, seed = 5, 3, 11
    f = sample_pspin_field(n, p, seed)
    from qrem.model import TAG_PSPIN, rng_stream

    j = rng_stream(seed, TAG_PSPIN).standard_normal(n**p).reshape((n,) * p)
    for idx in (0, 7, 19, 31):
        s = SpinConfiguration(idx, n).spins.astype(float)
        direct = np.einsum("abc,a,b,c->", j, s, s, s) * n ** ((1 - p) / 2)
        assert f.values[idx] == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_pspin_empirical_covariance():
    n, p = 8, 2
    a, b = 0, 0b11  # distance 2 -> overlap 1/2 -> Cov = 8 * 1/4 = 2
    reps = 100_000
    x = np.empty(reps)
    y = np.empty(reps)
    for r in range(reps):
        v = sample_pspin_field(n, p, r).values
        x[r], y[r] = v[a], v[b]
    cov = np.mean(x * y)
    target = covariance_oracle(p, SpinConfiguration(a, n), SpinConfiguration(b, n))
    assert target == pytest.approx(2.0)
    se = np.std(x * y) / math.sqrt(reps)
    assert abs(cov - target) <= 3 * se
    assert abs(np.mean(x * x) - n) <= 3 * np.std(x * x) / math.sqrt(reps)


def test_field_mean():
    assert field_mean(DisorderField.constant(5, 0.0)) == 0.0
    assert field_mean(DisorderField.constant(5, 2.5)) == 2.5
    n = 16
    bound = 5 * math.sqrt(n / 2**n)
    hits = [abs(field_mean(sample_rem_field(n, realization_seed(9, i)))) <= bound for i in range(200)]
    assert np.mean(hits) >= 0.99


def test_field_serialization_roundtrip(tmp_path):
    f = sample_field(6, "inf", 5)
    path = tmp_path / "field.json"
    f.save(path)
    g = DisorderField.load(path)
    assert g.values.tobytes() == f.values.tobytes()
    assert g.regenerate().checksum() == json.loads(path.read_text())["checksum"]
    data = json.loads(path.read_text())
    data["values"][0] += 1.0
    with pytest.raises(ValueError):
        DisorderField.from_dict(data)


def test_pspin_field_regenerates():
    f = sample_field(5, 2, 9)
    assert f.regenerate().checksum() == f.checksum()
    assert DisorderField.from_dict(f.to_dict()).p == 2


@pytest.mark.parametrize("n", [1, 3, 6, 10])
@pytest.mark.parametrize("gamma", [0.0, 0.7, 2.0])
def test_apply_matches_dense(n, gamma):
    op = QremOperator(gamma, sample_rem_field(n, n))
    rng = np.random.default_rng(n)
    v = rng.standard_normal(op.dim)
    dense = dense_hamiltonian(op) @ v
    got = apply_hamiltonian(op, v)
    assert np.linalg.norm(got - dense) <= 1e-12 * max(1.0, np.linalg.norm(dense))


def test_apply_batched_rows_match_single():
    op = QremOperator(1.3, sample_rem_field(7, 2))
    v = np.random.default_rng(0).standard_normal((3, op.dim))
    batched = op.apply(v)
    for k in range(3):
        assert np.array_equal(batched[k], op.apply(v[k]))


def test_apply_special_cases():
    f = sample_rem_field(6, 1)
    v = np.random.default_rng(1).standard_normal(64)
    assert np.array_equal(apply_hamiltonian(QremOperator(0.0, f), v), f.values * v)
    ones = np.ones(64)
    out = apply_hamiltonian(QremOperator(0.8, DisorderField.constant(6)), ones)
    assert np.allclose(out, -0.8 * 6 * ones)
    with pytest.raises(DimensionError):
        apply_hamiltonian(QremOperator(1.0, f), np.ones(63))


def test_dense_hamiltonian_structure():
    f = sample_rem_field(1, 3)
    h = dense_hamiltonian(QremOperator(0.5, f))
    assert np.array_equal(h, [[f.values[0], -0.5], [-0.5, f.values[1]]])
    op = QremOperator(1.5, sample_rem_field(8, 3))
    h = dense_hamiltonian(op)
    assert np.array_equal(h, h.T)
    off = np.abs(h - np.diag(np.diag(h))).sum(axis=1)
    assert np.allclose(off, 1.5 * 8)
    with pytest.raises(CapacityError):
        dense_hamiltonian(QremOperator(1.0, DisorderField.constant(15)))


@pytest.mark.parametrize("n", [4, 8, 12])
def test_hopping_spectrum_is_binomial(n):
    gamma = 0.75
    evals = np.linalg.eigvalsh(dense_hamiltonian(QremOperator(gamma, DisorderField.constant(n))))
    expected = np.sort(np.concatenate([
        np.full(comb(n, k), gamma * (-n + 2 * k)) for k in range(n + 1)
    ]))
    assert np.allclose(evals, expected, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.floats(0, 5), st.integers(0, 2**32))
def test_operator_is_self_adjoint(n, gamma, seed):
    op = QremOperator(gamma, sample_rem_field(n, seed))
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, op.dim))
    assert x @ op.apply(y) == pytest.approx(y @ op.apply(x), rel=1e-10, abs=1e-9)
