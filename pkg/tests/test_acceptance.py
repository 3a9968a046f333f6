"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION k: PASS|FAIL`` line with the measured
quantities. Run ``pytest tests/test_acceptance.py -v`` or execute this file
directly with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
from math import comb

import numpy as np
import pytest

from qrem.analytics import beta_c, gamma_c, gamma_c_bisect, p_rem
from qrem.experiments import (
    SweepConfig,
    run_bound_sandwich,
    run_cluster_study,
    run_phase_diagram,
    run_self_averaging,
)
from qrem.model import DisorderField, QremOperator, dense_hamiltonian, realization_seed, sample_rem_field
from qrem.spectral import SlqConfig, dense_spectrum, pressure_exact_dense, pressure_slq

GRID = (0.5, 1.0, 2.0)
SLACK_TOL = -1e-9


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def test_criterion_1_paramagnet_exact(report):
    worst = 0.0
    for n in range(1, 13):
        fld = DisorderField.constant(n)
        for gamma in GRID:
            op = QremOperator(gamma, fld)
            spec = dense_spectrum(op)
            for beta in GRID:
                err = abs(pressure_exact_dense(op, beta, spectrum=spec).value - math.log(math.cosh(beta * gamma)))
                worst = max(worst, err)
    assert report(1, worst <= 1e-10, f"max |p_N - ln cosh(beta*gamma)| = {worst:.2e} (tol 1e-10)")


def test_criterion_2_hopping_spectrum(report):
    n = 10
    worst = 0.0
    for gamma in GRID:
        evals = np.linalg.eigvalsh(dense_hamiltonian(QremOperator(gamma, DisorderField.constant(n))))
        expected = np.sort(np.concatenate([
            np.full(comb(n, k), gamma * (-n + 2 * k)) for k in range(n + 1)
        ]))
        worst = max(worst, float(np.max(np.abs(evals - expected))))
    assert report(2, worst <= 1e-10, f"max eigenvalue deviation = {worst:.2e}")


def test_criterion_3_bound_sandwich(report):
    cfg = SweepConfig(
        n_list=(10,), beta_grid=GRID, gamma_grid=GRID, eps_grid=(0.4, 0.8),
        num_realizations=100, base_seed=2024,
    )
    ex = run_bound_sandwich(cfg).extras
    mins = {k: ex[f"min_slack_{k}"] for k in ("classical", "para", "upper")}
    ok = all(v >= SLACK_TOL for v in mins.values()) and ex["pass_fraction"] == 1.0
    detail = (
        f"rows={ex['rows']} pass={ex['pass_fraction']:.3f} "
        + " ".join(f"min_{k}={v:.3e}" for k, v in mins.items())
        + f" (beta*||A|| variant min={ex['min_slack_upper_unweighted']:.3e})"
    )
    assert report(3, ok, detail)


def test_criterion_4_convergence_trend(report):
    cfg = SweepConfig(
        n_list=(8, 12, 16), beta_grid=(0.8, 1.0), gamma_grid=(2.0, 0.2),
        num_realizations=30, base_seed=7, dense_cutoff=10, slq=SlqConfig(30, 20),
    )
    s = run_phase_diagram(cfg)
    hot = [s.point(N=n, beta=0.8, gamma=2.0)["gap"] for n in cfg.n_list]
    cold = [abs(s.point(N=n, beta=1.0, gamma=0.2)["mean"] - p_rem(1.0)) for n in cfg.n_list]
    ok = hot[0] > hot[1] > hot[2] and hot[2] <= 0.05 and cold[0] > cold[1] > cold[2]
    detail = (
        "gap(0.8,2.0) N=8,12,16: " + ", ".join(f"{g:.4f}" for g in hot)
        + " | gap(1.0,0.2): " + ", ".join(f"{g:.4f}" for g in cold)
    )
    assert report(4, ok, detail)


def test_criterion_5_slq_vs_dense(report):
    n, beta, gamma, runs = 10, 1.0, 1.0, 100
    hits = 0
    for i in range(runs):
        op = QremOperator(gamma, sample_rem_field(n, realization_seed(55, i)))
        exact = pressure_exact_dense(op, beta).value
        est = pressure_slq(op, beta, SlqConfig(100, 64, seed=i))
        hits += abs(est.value - exact) <= 3 * est.stderr
    assert report(5, hits >= 95, f"{hits}/{runs} runs within 3 stderr (need >= 95)")


def test_criterion_6_cluster_sizes(report):
    cfg = SweepConfig(n_list=(16,), eps_grid=(1.0,), num_realizations=200, base_seed=11)
    c = run_cluster_study(cfg).clusters[0]
    ok = c["k_eps"] == 3 and c["omega_frequency"] >= 0.95 and c["norm_ok_frequency"] == 1.0
    detail = (
        f"K_eps={c['k_eps']} omega frequency={c['omega_frequency']:.3f} (need >= 0.95) "
        f"norm exact<=bound in {c['norm_ok_frequency']:.0%}"
    )
    assert report(6, ok, detail)


def test_criterion_7_closed_forms(report):
    bc = beta_c()
    checks = {
        "beta_c": abs(bc - 1.1774100225154747),
        "p_rem(beta_c)-ln2": abs(p_rem(bc) - math.log(2)),
        "gamma_c(0+)-1": abs(gamma_c(1e-9) - 1.0),
        "gamma_c(beta_c)-acosh(2)/beta_c": abs(gamma_c(bc) - math.acosh(2) / bc),
    }
    bis = max(abs(gamma_c(b) - gamma_c_bisect(b)) for b in np.linspace(0.05, 5.0, 200))
    ok = all(v <= 1e-9 for v in checks.values()) and bis <= 1e-10
    detail = " ".join(f"{k}:{v:.1e}" for k, v in checks.items()) + f" bisection:{bis:.1e}"
    detail += f" gamma_c(beta_c)={gamma_c(bc):.10f}"
    assert report(7, ok, detail)


def test_criterion_8_self_averaging(report):
    cfg = SweepConfig(
        n_list=(8, 16), beta_grid=(1.0,), gamma_grid=(1.0,),
        num_realizations=100, base_seed=99, slq=SlqConfig(20, 20),
    )
    s = run_self_averaging(cfg)
    lo, hi = s.point(N=8)["std"], s.point(N=16)["std"]
    assert report(8, hi < lo, f"std N=8: {lo:.5f}  N=16: {hi:.5f}")


def test_criterion_9_determinism(report, tmp_path):
    base = dict(
        n_list=(6, 10), beta_grid=(0.5, 1.0), gamma_grid=(0.0, 1.0), eps_grid=(0.4, 0.8),
        num_realizations=12, base_seed=5, dense_cutoff=8, slq=SlqConfig(10, 20),
    )
    snaps = []
    for workers in (1, 8):
        d = tmp_path / f"w{workers}"
        cfg = SweepConfig(**base, workers=workers, out=str(d))
        run_phase_diagram(cfg)
        run_cluster_study(cfg)
        run_bound_sandwich(SweepConfig(**{**base, "n_list": (6, 8)}, workers=workers, out=str(d)))
        snaps.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    same = snaps[0] == snaps[1]
    assert report(9, same, f"{len(snaps[0])} files byte-identical for 8 vs 1 workers: {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
