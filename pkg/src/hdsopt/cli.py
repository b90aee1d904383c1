"""Command-line entry point: ``hdsopt <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 runtime or numerical error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

from .bench import BENCHMARKS
from .harness import (
    ConfigError,
    ExperimentConfig,
    grid_search_thresholds,
    read_config,
    run_experiment,
    summarize,
    sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _print_summary(results, out=None):
    out = out or sys.stdout
    s = summarize(results)
    print(f"trials={s['trials']} accuracy={s['accuracy_mean']:.3f}±{s['accuracy_se']:.3f} "
          f"selection_samples={s['samples_mean']:.1f}±{s['samples_se']:.1f} errors={s['errors']}",
          file=out)
    regrets = [r.avg_regret_final for r in results if r.regret_trace is not None]
    if regrets:
        print(f"avg_regret_final mean={sum(regrets) / len(regrets):.4g}", file=out)
    for r in results:
        if r.error:
            print(f"trial {r.trial}: {r.error}", file=sys.stderr)
    return results


def _load(args) -> ExperimentConfig:
    cfg = read_config(args.config)
    over = {}
    if getattr(args, "seed", None) is not None:
        over["base_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        over["output_path"] = args.out
    return replace(cfg, **over) if over else cfg


def cmd_select(args):
    cfg = replace(_load(args), horizon=0)
    return _print_summary(run_experiment(cfg))


def cmd_optimize(args):
    cfg = _load(args)
    if args.horizon is not None:
        cfg = replace(cfg, horizon=args.horizon)
    elif cfg.horizon == 0:
        cfg = replace(cfg, horizon=300)
    return _print_summary(run_experiment(cfg))


def cmd_bench(args):
    kw = dict(benchmark=args.suite, method=args.method, trials=args.trials,
              base_seed=args.seed, output_path=args.out)
    for k in ("D", "d", "noise_var", "budget", "theta1", "theta0"):
        v = getattr(args, k)
        if v is not None:
            kw[k] = v
    if args.suite in ("branin", "beale"):
        kw.setdefault("d", 2)
    return _print_summary(run_experiment(ExperimentConfig(**kw)))


def _parse_values(param, text):
    conv = float if param == "noise_var" else int if param in ("D", "d") else str
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"values: cannot parse {text!r} for {param}") from exc


def _write_rows(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_sweep(args):
    cfg = read_config(args.config) if args.config else ExperimentConfig()
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    rows = sweep(cfg, args.param, _parse_values(args.param, args.values))
    print(f"{args.param:>10} {'accuracy':>16} {'samples':>18}")
    for r in rows:
        print(f"{r[args.param]!s:>10} {r['accuracy_mean']:8.3f}±{r['accuracy_se']:.3f} "
              f"{r['samples_mean']:10.1f}±{r['samples_se']:.1f}")
    if args.out:
        _write_rows(rows, args.out)


def cmd_tune(args):
    cfg = read_config(args.config)
    t1, t0, table = grid_search_thresholds(cfg)
    for r in table:
        print(f"theta1={r['theta1']:g} theta0={r['theta0']:g} "
              f"accuracy={r['accuracy_mean']:.3f} samples={r['samples_mean']:.1f}")
    print(f"best theta1={t1:g} theta0={t0:g}")
    if args.out:
        _write_rows(table, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hdsopt", description="Sparse variable selection (HDS) and GP-UCB experiments.",
        epilog="exit codes: 0 success, 2 configuration error, 3 runtime or numerical error")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("select", help="run variable selection only")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("optimize", help="selection followed by GP-UCB")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--horizon", type=int)
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("bench", help="selection on a named benchmark")
    s.add_argument("--suite", required=True, choices=BENCHMARKS)
    s.add_argument("--method", required=True, choices=("hds_fdt", "hds_gpt", "hds_fdt_fixed", "cws"))
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--D", type=int)
    s.add_argument("--d", type=int)
    s.add_argument("--noise-var", dest="noise_var", type=float)
    s.add_argument("--budget", type=int)
    s.add_argument("--theta1", type=float)
    s.add_argument("--theta0", type=float)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("sweep", help="aggregate accuracy and samples over one parameter")
    s.add_argument("--param", required=True, choices=("D", "noise_var", "method", "d"))
    s.add_argument("--values", required=True, help="comma-separated list")
    s.add_argument("--config")
    s.add_argument("--trials", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("tune-thresholds", help="grid search over (theta1, theta0)")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_tune)
    return p


def main(argv=None) -> int:
    """Run one subcommand; trials that recorded an error make the exit code 3."""
    args = build_parser().parse_args(argv)
    try:
        results = args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if results and any(r.error for r in results):
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
