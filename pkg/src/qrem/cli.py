"""Command line entry point: ``qrem <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 capacity error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import experiments
from .errors import CapacityError, ConfigError, DomainError
from .experiments import SweepConfig, load_config, rows_to_csv, _header
from .model import QremOperator, sample_field
from .spectral import (
    SlqConfig,
    pressure_exact_classical,
    pressure_exact_dense,
    pressure_slq,
)

EXIT_CONFIG, EXIT_CAPACITY, EXIT_IO = 2, 3, 4


def _list(conv):
    def parse(text):
        try:
            return tuple(conv(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON or TOML sweep config")
    p.add_argument("--n", type=_list(int), help="spin counts, comma separated")
    p.add_argument("--p", help="interaction order: integer or 'inf'")
    p.add_argument("--beta", type=_list(float), help="inverse temperatures")
    p.add_argument("--gamma", type=_list(float), help="transverse fields")
    p.add_argument("--eps", type=_list(float), help="large-deviation levels")
    p.add_argument("--realizations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=experiments.METHODS)
    p.add_argument("--dense-cutoff", type=int)
    p.add_argument("--probes", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory (file for 'pressure')")
    p.add_argument("--format", choices=experiments.FORMATS)


_FLAG_TO_FIELD = {
    "n": "n_list", "p": "p", "beta": "beta_grid", "gamma": "gamma_grid",
    "eps": "eps_grid", "realizations": "num_realizations", "seed": "base_seed",
    "method": "method", "dense_cutoff": "dense_cutoff", "workers": "workers",
    "out": "out", "format": "fmt",
}


def build_config(args) -> SweepConfig:
    cfg = load_config(args.config) if args.config else SweepConfig()
    updates = {
        fld: getattr(args, flag)
        for flag, fld in _FLAG_TO_FIELD.items()
        if getattr(args, flag, None) is not None
    }
    slq = {}
    if args.probes is not None:
        slq["num_probes"] = args.probes
    if args.steps is not None:
        slq["lanczos_steps"] = args.steps
    if slq:
        updates["slq"] = dataclasses.replace(cfg.slq, **slq)
    return dataclasses.replace(cfg, **updates)


def _cmd_pressure(args):
    cfg = build_config(args)
    seed = cfg.base_seed
    records = []
    for n in cfg.n_list:
        fld = sample_field(n, cfg.p, seed)
        for g in cfg.gamma_grid:
            op = QremOperator(g, fld)
            method = experiments._choose_method(cfg, n, g)
            for b in cfg.beta_grid:
                if method.value == "EXACT_CLASSICAL":
                    rec = pressure_exact_classical(fld, b)
                elif method.value == "EXACT_DENSE":
                    rec = pressure_exact_dense(op, b)
                else:
                    rec = pressure_slq(op, b, dataclasses.replace(cfg.slq, seed=seed))
                records.append(rec.to_dict())
    if cfg.fmt == "csv":
        text = rows_to_csv(records, _header(cfg.digest()))
    else:
        text = json.dumps(records, indent=1) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _sweep(fn):
    def run(args):
        summary = fn(build_config(args))
        json.dump(summary.to_dict(), sys.stdout, indent=1)
        sys.stdout.write("\n")

    return run


def _cmd_boundary(args):
    betas = args.beta or tuple(0.05 * k for k in range(1, 101))
    rows = experiments.trace_phase_boundary(betas, out=args.out, fmt=args.format or "csv")
    if args.out is None:
        sys.stdout.write(rows_to_csv(rows, "qrem boundary"))


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "pressure": (_cmd_pressure, "finite-N pressure at single points"),
        "phase-diagram": (_sweep(experiments.run_phase_diagram), "ensemble pressures on a grid"),
        "self-averaging": (_sweep(experiments.run_self_averaging), "fluctuations of p_N vs N"),
        "clusters": (_sweep(experiments.run_cluster_study), "large-deviation cluster statistics"),
        "bounds": (_sweep(experiments.run_bound_sandwich), "lower/upper bound sandwich"),
        "boundary": (_cmd_boundary, "first-order and freezing transition lines"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"qrem: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"qrem: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"qrem: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
