"""Command-line entry point: ``mmpflow <subcommand> [options]``.

Exit codes: 0 clean, 2 configuration error, 3 blow-up, 4 I/O error.
Physics values come only from the ``--config`` file; ``--seed`` overrides
the configured seed and ``--out`` chooses the artifact directory.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config
from .experiments import (
    ExitStatus,
    audit_convergence,
    run_decay_study,
    run_simulation,
    run_stability_sweep,
)


def _load(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required for this subcommand", "--config")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc}", "--config") from exc
    cfg = parse_config(text)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    result = run_simulation(_load(args), _out(args))
    last = result.series[-1]
    print(f"status={result.status.name} samples={len(result.series)} steps={result.n_steps} "
          f"t={last.t!r} l2_U={last.l2_U!r} max_audit={result.max_audit_residual!r}")
    if result.failure_time is not None:
        print(f"failure_time={result.failure_time!r}")
    return int(result.status)


def _cmd_decay(args) -> int:
    window = tuple(args.window) if args.window else None
    report = run_decay_study(_load(args), window, _out(args))
    sys.stdout.write(report.to_text())
    return int(report.run.status)


def _cmd_sweep(args) -> int:
    report = run_stability_sweep(_load(args), args.eps, _out(args))
    sys.stdout.write(report.to_text())
    return 0


def _cmd_audit(args) -> int:
    study = audit_convergence(_load(args), args.levels, args.dt0)
    text = study.to_text()
    (_out(args) / "energy_audit.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def _cmd_ineq(args) -> int:
    from .inequalities import suite
    from .spectral import GridSpec

    grid = GridSpec.cube(args.n)
    seed = 0 if args.seed is None else args.seed
    q = math.inf if args.q.lower() in ("inf", "infinity") else float(args.q)
    report = suite(args.kind, grid, args.samples, seed, args.slope, args.k_peak, q, args.s)
    out = _out(args)
    (out / f"{args.kind}_summary.txt").write_text(report.to_text())
    (out / f"{args.kind}_samples.csv").write_text(report.samples_csv())
    print(report.summary_line())
    return 0


def _cmd_mms(args) -> int:
    from .dynamics import PhysParams
    from .mms import mms_convergence
    from .spectral import GridSpec

    params = PhysParams(*args.params)
    result = mms_convergence(GridSpec.cube(args.n), params, args.base_dt, args.levels, args.t_end)
    text = result.summary()
    (_out(args) / "mms.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def _cmd_ode(args) -> int:
    from .reduced_ode import LedgerConfig, decay_ode_closed_form, exponent_table, integrate_decay_ode

    cfg = LedgerConfig(args.sigma, args.c, args.x0, args.t_end, args.dt)
    t, x = integrate_decay_ode(cfg)
    exact = decay_ode_closed_form(cfg, t)
    scale = max(abs(float(exact.max())), 1e-300)
    err = float(abs(x - exact).max()) / scale
    out = _out(args)
    with open(out / "decay_ode.csv", "w") as fh:
        fh.write("t,X,closed_form\n")
        stride = max(1, len(t) // 1000)
        for i in list(range(0, len(t), stride)) + ([len(t) - 1] if (len(t) - 1) % stride else []):
            fh.write(f"{float(t[i])!r},{float(x[i])!r},{float(exact[i])!r}\n")
    table = exponent_table(args.sigma, args.n)
    (out / "exponents.csv").write_text(table)
    print(f"max_relative_error={err!r}")
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", default=".", help="artifact directory (default: current)")

    parser = argparse.ArgumentParser(prog="mmpflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="single run with series and checkpoints")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("decay-study", parents=[common], help="run and fit decay exponents")
    p.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"))
    p.set_defaults(func=_cmd_decay)

    p = sub.add_parser("stability-sweep", parents=[common], help="rescale initial data over eps values")
    p.add_argument("--eps", type=float, nargs="+", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("energy-audit", parents=[common], help="audit defect under step halving")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--dt0", type=float, help="largest step (default: time.dt_max)")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("ineq-suite", parents=[common], help="randomized inequality constants")
    p.add_argument("--kind", choices=("lemma21_a", "lemma21_b", "lemma22"), required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--n", type=int, default=32, help="points per axis")
    p.add_argument("--slope", type=float, default=0.0)
    p.add_argument("--k-peak", type=float, default=4.0)
    p.add_argument("--q", default="inf")
    p.add_argument("--s", type=float, default=1.0)
    p.set_defaults(func=_cmd_ineq)

    p = sub.add_parser("mms-convergence", parents=[common], help="manufactured-solution time order")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--base-dt", type=float, default=0.25)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--params", type=float, nargs=5, default=[0.3, 0.2, 0.25, 0.15, 0.4],
                   metavar=("MU", "NU", "GAMMA", "KAPPA", "CHI"))
    p.set_defaults(func=_cmd_mms)

    p = sub.add_parser("ode-ledger", parents=[common], help="reduced decay ODE and exponent iteration")
    p.add_argument("--sigma", type=float, default=0.8)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--n", type=int, default=30)
    p.set_defaults(func=_cmd_ode)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return int(ExitStatus.CONFIG_ERROR)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return int(ExitStatus.IO_ERROR)
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return int(ExitStatus.CONFIG_ERROR)


if __name__ == "__main__":
    sys.exit(main())
