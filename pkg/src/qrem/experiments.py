"""Disorder-ensemble sweeps over (N, beta, gamma, eps) grids.

Every realization is generated from ``realization_seed(base_seed, i)`` and
recorded per row, so any row can be regenerated on its own. Tasks run on a
thread pool; results are collected in submission order, which makes the
written files independent of the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    beta_c,
    classify_phase,
    gamma_c,
    gamma_c_bisect,
    goldschmidt_pressure,
    k_epsilon,
)
from .errors import CapacityError, ConfigError
from .geometry import (
    bound_report,
    build_remainder,
    cluster_decomposition,
    large_deviation_set,
    remainder_norm_bound,
    remainder_norm_exact,
)
from .model import INF, MAX_DENSE_SPINS, QremOperator, _format_p, _parse_p, realization_seed, sample_field
from .spectral import (
    Method,
    SlqConfig,
    dense_spectrum,
    pressure_from_spectrum,
    slq_quadrature,
)

METHODS = ("auto", "dense", "classical", "slq")
FORMATS = ("csv", "json")


def _floats(values, name):
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None
    if not out:
        raise ConfigError(f"{name} must be nonempty")
    return out


@dataclass(frozen=True)
class SweepConfig:
    n_list: tuple = (8,)
    p: object = INF
    beta_grid: tuple = (1.0,)
    gamma_grid: tuple = (1.0,)
    eps_grid: tuple = (0.2, 0.4, 0.6, 0.8, 1.0)
    num_realizations: int = 10
    base_seed: int = 0
    method: str = "auto"
    dense_cutoff: int = 12
    slq: SlqConfig = field(default_factory=SlqConfig)
    workers: int = 1
    out: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        try:
            n_list = tuple(int(n) for n in self.n_list)
            p = _parse_p(self.p)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if not n_list or min(n_list) < 1:
            raise ConfigError("n_list must be nonempty with N >= 1")
        object.__setattr__(self, "n_list", n_list)
        object.__setattr__(self, "p", p)
        for name in ("beta_grid", "gamma_grid", "eps_grid"):
            object.__setattr__(self, name, _floats(getattr(self, name), name))
        if min(self.beta_grid) < 0 or min(self.gamma_grid) < 0:
            raise ConfigError("beta and gamma grids must be nonnegative")
        if min(self.eps_grid) <= 0:
            raise ConfigError("eps grid must be positive")
        if self.num_realizations < 1:
            raise ConfigError("num_realizations must be >= 1")
        if not 1 <= self.dense_cutoff <= MAX_DENSE_SPINS:
            raise ConfigError(f"dense_cutoff must lie in 1..{MAX_DENSE_SPINS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if isinstance(self.slq, dict):
            object.__setattr__(self, "slq", SlqConfig(**self.slq))

    @classmethod
    def from_mapping(cls, data: dict) -> SweepConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = _format_p(self.p)
        return d

    def digest(self) -> str:
        """Hash of everything that affects results (not workers or output path)."""
        d = self.to_dict()
        for key in ("workers", "out", "fmt"):
            d.pop(key)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def load_config(path) -> SweepConfig:
    """Read a JSON or TOML document mirroring ``SweepConfig``."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return SweepConfig.from_mapping(data)


@dataclass
class EnsembleSummary:
    kind: str
    config_digest: str
    points: list = field(default_factory=list)
    clusters: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def point(self, **key) -> dict:
        for pt in self.points:
            if all(pt[k] == v for k, v in key.items()):
                return pt
        raise KeyError(key)


def _run(cfg: SweepConfig, fn, tasks):
    if cfg.workers == 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, tasks))


def _tasks(cfg: SweepConfig):
    return [
        (n, i, realization_seed(cfg.base_seed, i))
        for n in cfg.n_list
        for i in range(cfg.num_realizations)
    ]


def _choose_method(cfg: SweepConfig, n: int, gamma: float) -> Method:
    if cfg.method == "classical" or (cfg.method == "auto" and gamma == 0):
        if gamma != 0:
            raise ConfigError("classical method requires gamma = 0")
        return Method.EXACT_CLASSICAL
    if cfg.method == "dense" or (cfg.method == "auto" and n <= cfg.dense_cutoff):
        if n > MAX_DENSE_SPINS:
            raise CapacityError(f"dense method at N={n} exceeds N <= {MAX_DENSE_SPINS}")
        return Method.EXACT_DENSE
    return Method.SLQ


def realization_pressures(cfg: SweepConfig, n: int, seed: int, betas=None, gammas=None):
    """Pressures of one realization over a (beta, gamma) grid.

    Returns ``{(beta, gamma): (value, stderr, method)}``. One diagonalization
    or one set of Lanczos quadratures per gamma is shared by all betas.
    """
    betas = cfg.beta_grid if betas is None else betas
    gammas = cfg.gamma_grid if gammas is None else gammas
    fld = sample_field(n, cfg.p, seed)
    out = {}
    for gamma in gammas:
        op = QremOperator(gamma, fld)
        try:
            method = _choose_method(cfg, n, gamma)
        except CapacityError as exc:
            raise CapacityError(f"{exc} (grid point N={n}, gamma={gamma})") from None
        if method is Method.EXACT_CLASSICAL:
            evals = [(pressure_from_spectrum(fld.values, b, n), 0.0) for b in betas]
        elif method is Method.EXACT_DENSE:
            spec = dense_spectrum(op)
            evals = [(pressure_from_spectrum(spec, b, n), 0.0) for b in betas]
        else:
            slq_cfg = replace(cfg.slq, seed=realization_seed(seed, cfg.slq.seed))
            quad = slq_quadrature(op, slq_cfg) if any(b > 0 for b in betas) else None
            evals = [quad.pressure(b) if b > 0 else (0.0, 0.0) for b in betas]
        for b, (value, err) in zip(betas, evals):
            out[(b, gamma)] = (value, err, method)
    return out


def _std(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def _pressure_rows(cfg: SweepConfig):
    def task(t):
        n, i, seed = t
        res = realization_pressures(cfg, n, seed)
        rows = []
        for (b, g), (value, err, method) in res.items():
            rows.append({
                "N": n, "p": _format_p(cfg.p), "realization": i, "seed": seed,
                "beta": b, "gamma": g, "method": method.value,
                "value": value, "stderr": err,
            })
        return rows

    return [row for rows in _run(cfg, task, _tasks(cfg)) for row in rows]


def _grouped(rows, keys):
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    return groups


def run_phase_diagram(cfg: SweepConfig) -> EnsembleSummary:
    """Finite-N pressures over the grid against the limiting envelope."""
    rows = _pressure_rows(cfg)
    summary = EnsembleSummary("phase-diagram", cfg.digest())
    for (n, b, g), grp in sorted(_grouped(rows, ("N", "beta", "gamma")).items()):
        vals = [r["value"] for r in grp]
        ref = goldschmidt_pressure(b, g)
        mean = float(np.mean(vals))
        summary.points.append({
            "N": n, "beta": b, "gamma": g, "count": len(vals),
            "mean": mean, "std": _std(vals), "reference": ref, "gap": abs(mean - ref),
            "phase": classify_phase(b, g).phase.value,
        })
    for row in rows:
        row["reference"] = goldschmidt_pressure(row["beta"], row["gamma"])
    _write(cfg, "phase_diagram", rows, summary)
    return summary


DEFAULT_T_GRID = tuple(0.25 * k for k in range(17))


def run_self_averaging(cfg: SweepConfig, t_grid=DEFAULT_T_GRID) -> EnsembleSummary:
    """Sample fluctuations of ``p_N`` per N and their empirical tail."""
    if cfg.num_realizations < 50:
        raise ConfigError("self-averaging study needs at least 50 realizations per N")
    rows = _pressure_rows(cfg)
    summary = EnsembleSummary("self-averaging", cfg.digest())
    for (n, b, g), grp in sorted(_grouped(rows, ("N", "beta", "gamma")).items()):
        vals = np.array([r["value"] for r in grp])
        mean = float(np.mean(vals))
        dev = np.abs(vals - mean)
        tail = [
            {"t": t, "prob": float(np.mean(dev > t * b / math.sqrt(n)))} for t in t_grid
        ]
        summary.points.append({
            "N": n, "beta": b, "gamma": g, "count": len(vals),
            "mean": mean, "std": _std(vals), "tail": tail,
        })
    n_lo, n_hi = min(cfg.n_list), max(cfg.n_list)
    ratios = []
    for b in cfg.beta_grid:
        for g in cfg.gamma_grid:
            lo = summary.point(N=n_lo, beta=b, gamma=g)["std"]
            hi = summary.point(N=n_hi, beta=b, gamma=g)["std"]
            ratios.append({
                "beta": b, "gamma": g, "N_small": n_lo, "N_large": n_hi,
                "ratio": hi / lo if lo > 0 else None,
            })
    summary.extras["std_ratios"] = ratios
    _write(cfg, "self_averaging", rows, summary)
    return summary


def run_cluster_study(cfg: SweepConfig) -> EnsembleSummary:
    """Cluster sizes of large-deviation sets and remainder norms per realization."""

    def task(t):
        n, i, seed = t
        fld = sample_field(n, cfg.p, seed)
        rows = []
        for eps in cfg.eps_grid:
            ldset = large_deviation_set(fld, eps)
            decomp = cluster_decomposition(ldset)
            a_exact = remainder_norm_exact(build_remainder(ldset))
            a_bound = remainder_norm_bound(decomp, n)
            rows.append({
                "N": n, "p": _format_p(cfg.p), "realization": i, "seed": seed, "eps": eps,
                "set_size": len(ldset), "num_components": len(decomp.components),
                "max_size": decomp.max_size, "k_eps": decomp.k_eps,
                "omega": decomp.max_size < decomp.k_eps,
                "a_norm_exact": a_exact, "a_norm_bound": a_bound,
                "norm_ok": a_exact <= a_bound + 1e-9,
            })
        return rows

    rows = [r for rs in _run(cfg, task, _tasks(cfg)) for r in rs]
    summary = EnsembleSummary("clusters", cfg.digest())
    for (n, eps), grp in sorted(_grouped(rows, ("N", "eps")).items()):
        hist = {}
        for r in grp:
            hist[r["max_size"]] = hist.get(r["max_size"], 0) + 1
        summary.clusters.append({
            "N": n, "eps": eps, "count": len(grp), "k_eps": k_epsilon(eps),
            "omega_frequency": float(np.mean([r["omega"] for r in grp])),
            "norm_ok_frequency": float(np.mean([r["norm_ok"] for r in grp])),
            "max_size_histogram": {str(k): v for k, v in sorted(hist.items())},
        })
    _write(cfg, "clusters", rows, summary)
    return summary


def run_bound_sandwich(cfg: SweepConfig) -> EnsembleSummary:
    """Both variational lower bounds and the Golden-Thompson upper bound per row."""
    too_big = [n for n in cfg.n_list if n > cfg.dense_cutoff]
    if too_big:
        raise CapacityError(f"bound sandwich needs exact pressures; N={too_big} > cutoff")

    def task(t):
        n, i, seed = t
        fld = sample_field(n, cfg.p, seed)
        rows = []
        for g in cfg.gamma_grid:
            op = QremOperator(g, fld)
            spec = dense_spectrum(op)
            for b in cfg.beta_grid:
                exact = pressure_from_spectrum(spec, b, n)
                for eps in cfg.eps_grid:
                    row = bound_report(op, b, eps, exact_pressure=exact).to_dict()
                    row["realization"] = i
                    rows.append(row)
        return rows

    rows = [r for rs in _run(cfg, task, _tasks(cfg)) for r in rs]
    summary = EnsembleSummary("bounds", cfg.digest())
    for key in ("slack_classical", "slack_para", "slack_upper"):
        summary.extras[f"min_{key}"] = min(r[key] for r in rows)
    summary.extras["min_slack_upper_unweighted"] = min(
        r["gt_upper_unweighted"] - r["exact_pressure"] for r in rows
    )
    summary.extras["rows"] = len(rows)
    summary.extras["pass_fraction"] = float(
        np.mean([min(r["slack_classical"], r["slack_para"], r["slack_upper"]) >= -1e-9 for r in rows])
    )
    _write(cfg, "bounds", rows, summary)
    return summary


def trace_phase_boundary(beta_grid, out=None, freezing_points: int = 11, fmt: str = "csv"):
    """Transition line ``(beta, gamma_c)`` with a bisection cross-check column.

    Also returns the freezing line ``beta = beta_c`` for ``gamma`` below
    ``gamma_c(beta_c)``.
    """
    betas = _floats(beta_grid, "beta_grid")
    if min(betas) <= 0:
        raise ConfigError("beta grid must be positive")
    rows = []
    for b in betas:
        closed, root = gamma_c(b), gamma_c_bisect(b)
        rows.append({
            "line": "first_order", "beta": b, "gamma": closed,
            "gamma_bisect": root, "abs_diff": abs(closed - root),
        })
    bc = beta_c()
    top = gamma_c(bc)
    for k in range(freezing_points):
        rows.append({
            "line": "freezing", "beta": bc, "gamma": top * k / (freezing_points - 1),
            "gamma_bisect": None, "abs_diff": None,
        })
    if out is not None:
        digest = hashlib.sha256(json.dumps(list(betas)).encode()).hexdigest()[:16]
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        _write_rows(path / f"boundary.{fmt}", rows, fmt, _header(digest))
    return rows


def _header(digest: str) -> str:
    return f"qrem {__version__} schema=1 config={digest}"


def _format_value(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def rows_to_csv(rows, header: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {header}\n")
    if rows:
        cols = list(rows[0])
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_format_value(row.get(c)) for c in cols])
    return buf.getvalue()


def _write_rows(path: Path, rows, fmt: str, header: str):
    if fmt == "csv":
        path.write_text(rows_to_csv(rows, header))
    else:
        path.write_text(json.dumps({"header": header, "rows": rows}, indent=1) + "\n")


def _write(cfg: SweepConfig, name: str, rows, summary: EnsembleSummary):
    if cfg.out is None:
        return
    path = Path(cfg.out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    _write_rows(path / f"{name}.{cfg.fmt}", rows, cfg.fmt, _header(cfg.digest()))
    config = cfg.to_dict()
    for key in ("workers", "out"):
        config.pop(key)
    payload = {"header": _header(cfg.digest()), "config": config, "summary": summary.to_dict()}
    (path / f"{name}_summary.json").write_text(json.dumps(payload, indent=1) + "\n")
