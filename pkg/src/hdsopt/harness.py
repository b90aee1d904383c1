"""Experiment orchestration: seeded trials, sweeps, threshold tuning and CSV output."""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .bench import BENCHMARKS, BenchmarkSpec, cws_run, make_oracle
from .gp_core import KernelSpec
from .gpucb import RegretTrace, UcbConfig, gpucb_run
from .hds import HdsConfig, draw_background, hds_run

__all__ = [
    "METHODS",
    "CSV_COLUMNS",
    "THETA1_GRID",
    "THETA0_GRID",
    "ConfigError",
    "ExperimentConfig",
    "RunResult",
    "run_trial",
    "run_experiment",
    "summarize",
    "sweep",
    "grid_search_thresholds",
    "write_csv",
    "read_csv",
    "read_config",
    "write_config",
]

METHODS = ("hds_fdt", "hds_gpt", "hds_fdt_fixed", "cws", "full")
_TESTER = {"hds_fdt": "fdt_sequential", "hds_gpt": "gpt", "hds_fdt_fixed": "fdt_fixed"}
SWEEP_PARAMS = ("D", "noise_var", "method", "d")
THETA1_GRID = (5.0, 10.0, 20.0)
THETA0_GRID = (-5.0, -10.0, -20.0)

CSV_COLUMNS = (
    "trial", "seed", "method", "D", "d", "noise_var", "theta1", "theta0", "accuracy",
    "selection_samples", "optimization_samples", "avg_regret_final", "min_regret_final",
    "wall_ms",
)
_EXTRA_COLUMNS = ("recovered", "active_dims", "error")


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of a batch of trials.

    ``method="full"`` skips selection and hands every coordinate to GP-UCB.
    ``horizon=0`` skips optimization. ``active_dims=None`` places the ``d``
    active coordinates at random per trial. ``offset_var`` is the
    unknown-mean prior variance used by the GP tester.
    """

    benchmark: str = "gp"
    method: str = "hds_fdt"
    D: int = 200
    d: int = 2
    active_dims: tuple[int, ...] | None = None
    noise_var: float = 0.1
    sigma_s2: float = 1.0
    bandwidth: float = 0.1
    budget: int = 2000
    theta1: float = 10.0
    theta0: float = -10.0
    offset_var: float = 1e4
    fixed_pairs: int | None = None
    cws_n_per_dim: int | None = None
    horizon: int = 0
    delta_o: float = 0.05
    trials: int = 20
    base_seed: int = 0
    output_path: str | None = None

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"benchmark: unknown value {self.benchmark!r}; choose from {BENCHMARKS}")
        if self.method not in METHODS:
            raise ConfigError(f"method: unknown value {self.method!r}; choose from {METHODS}")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.horizon < 0:
            raise ConfigError(f"horizon: must be >= 0, got {self.horizon}")
        if self.active_dims is not None:
            object.__setattr__(self, "active_dims", tuple(int(i) for i in self.active_dims))
        try:
            self.benchmark_spec()
            if self.method in _TESTER:
                self.hds_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec(self.sigma_s2, self.bandwidth, (0,))

    def benchmark_spec(self) -> BenchmarkSpec:
        return BenchmarkSpec(self.benchmark, self.D, self.d, self.active_dims,
                             self.noise_var, self.kernel)

    def hds_config(self) -> HdsConfig:
        return HdsConfig(self.budget, self.theta1, self.theta0,
                         _TESTER.get(self.method, "fdt_sequential"), self.kernel,
                         self.noise_var, self.offset_var, self.fixed_pairs)

    def ucb_config(self, dims: Sequence[int]) -> UcbConfig:
        return UcbConfig(self.horizon, self.delta_o, tuple(dims), self.kernel, self.noise_var)

    def cws_pairs(self) -> int:
        return self.cws_n_per_dim or max(2, self.budget // (2 * self.D))


@dataclass
class RunResult:
    trial: int
    seed: int
    method: str
    D: int
    d: int
    noise_var: float
    theta1: float
    theta0: float
    accuracy: int
    selection_samples: int
    optimization_samples: int
    avg_regret_final: float
    min_regret_final: float
    wall_ms: int
    recovered: tuple[int, ...] = ()
    active_dims: tuple[int, ...] = ()
    error: str = ""
    regret_trace: RegretTrace | None = field(default=None, repr=False, compare=False)


def _idle_trace(oracle, background, horizon) -> RegretTrace:
    # nothing selected: every optimization step re-queries the background point
    r = []
    for _ in range(horizon):
        oracle.eval_noisy(background)
        r.append(oracle.optimum - oracle.eval_true(background))
    return RegretTrace.from_instantaneous(r)


def run_trial(cfg: ExperimentConfig, trial: int, timing: bool = True,
              tester_factory=None) -> RunResult:
    """One seeded select-then-optimize run. Seed is ``cfg.base_seed + trial``.

    ``tester_factory(oracle)``, if given, replaces the configured HDS testing
    block (useful for stub testers).
    """
    seed = cfg.base_seed + trial
    bench_seq, bg_seq, sel_seq, ucb_seq = np.random.SeedSequence(seed).spawn(4)
    t0 = time.perf_counter()
    oracle = make_oracle(cfg.benchmark_spec(), bench_seq)
    active = tuple(oracle.active_dims)
    background = draw_background(cfg.D, np.random.default_rng(bg_seq))
    result = RunResult(trial, seed, cfg.method, cfg.D, len(active), cfg.noise_var,
                       cfg.theta1, cfg.theta0, 0, 0, 0, math.nan, math.nan, 0,
                       active_dims=active)
    try:
        if cfg.method in _TESTER:
            tester = tester_factory(oracle) if tester_factory else None
            recovered = hds_run(oracle, cfg.hds_config(), sel_seq, tester=tester,
                                background=background).recovered
        elif cfg.method == "cws":
            recovered = cws_run(oracle, len(active), cfg.cws_pairs(), 3.0 * cfg.bandwidth,
                                sel_seq, background)
        else:
            recovered = tuple(range(cfg.D))
        result.recovered = tuple(recovered)
        result.accuracy = int(set(recovered) == set(active))
        result.selection_samples = oracle.eval_count
        if cfg.horizon:
            if recovered:
                trace = gpucb_run(oracle, recovered, cfg.ucb_config(recovered), background, ucb_seq)
            else:
                trace = _idle_trace(oracle, background, cfg.horizon)
            result.regret_trace = trace
            result.avg_regret_final = float(trace.average[-1])
            result.min_regret_final = float(trace.min_regret[-1])
            if trace.error:
                result.error = trace.error
        result.optimization_samples = oracle.eval_count - result.selection_samples
    except Exception as exc:  # recorded per trial; the batch goes on
        result.error = f"{type(exc).__name__}: {exc}"
        result.selection_samples = result.selection_samples or oracle.eval_count
        result.optimization_samples = oracle.eval_count - result.selection_samples
    if timing:
        result.wall_ms = int(round(1000 * (time.perf_counter() - t0)))
    return result


def run_experiment(cfg: ExperimentConfig, timing: bool = True,
                   tester_factory=None) -> list[RunResult]:
    """All ``cfg.trials`` runs, ordered by trial; writes ``cfg.output_path`` if set.

    ``timing=False`` zeroes ``wall_ms`` so that output is a pure function of the config.
    """
    results = [run_trial(cfg, t, timing, tester_factory) for t in range(cfg.trials)]
    if cfg.output_path:
        write_csv(results, cfg.output_path)
    return results


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def summarize(results: Sequence[RunResult]) -> dict[str, float]:
    acc, acc_se = _mean_se([r.accuracy for r in results])
    n, n_se = _mean_se([r.selection_samples for r in results])
    return {"trials": len(results), "accuracy_mean": acc, "accuracy_se": acc_se,
            "samples_mean": n, "samples_se": n_se,
            "errors": sum(bool(r.error) for r in results)}


def sweep(cfg_template: ExperimentConfig, param: str, values: Iterable[Any],
          timing: bool = True, tester_factory=None) -> list[dict[str, Any]]:
    """Run the template once per value of ``param`` and aggregate mean and standard error."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep param must be one of {SWEEP_PARAMS}, got {param!r}")
    rows = []
    for v in values:
        try:
            cfg = replace(cfg_template, **{param: v}, output_path=None)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{param}={v!r}: {exc}") from exc
        rows.append({param: v, **summarize(run_experiment(cfg, timing, tester_factory))})
    return rows


def grid_search_thresholds(cfg_template: ExperimentConfig,
                           theta1_grid: Sequence[float] = THETA1_GRID,
                           theta0_grid: Sequence[float] = THETA0_GRID
                           ) -> tuple[float, float, list[dict[str, Any]]]:
    """Pick the threshold pair with the best mean accuracy, then the fewest mean samples."""
    table = []
    for t1 in theta1_grid:
        for t0 in theta0_grid:
            cfg = replace(cfg_template, theta1=t1, theta0=t0, horizon=0, output_path=None)
            table.append({"theta1": t1, "theta0": t0, **summarize(run_experiment(cfg))})
    best = min(table, key=lambda r: (-r["accuracy_mean"], r["samples_mean"]))
    return best["theta1"], best["theta0"], table


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, tuple):
        return " ".join(str(i) for i in v)
    return str(v)


def write_csv(results: Sequence[RunResult], path) -> None:
    cols = CSV_COLUMNS + _EXTRA_COLUMNS
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in results:
            w.writerow([_fmt(getattr(r, c)) for c in cols])


def read_csv(path) -> list[RunResult]:
    types = {f.name: f.type for f in fields(RunResult)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                t = types[k]
                if k in ("recovered", "active_dims"):
                    kw[k] = tuple(int(i) for i in v.split())
                elif t in ("int", int):
                    kw[k] = int(v)
                elif t in ("float", float):
                    kw[k] = float(v)
                else:
                    kw[k] = v
            out.append(RunResult(**kw))
    return out


_REQUIRED = ("benchmark", "method")
_INT_KEYS = {"D", "d", "budget", "trials", "base_seed", "horizon"}
_OPT_INT_KEYS = {"fixed_pairs", "cws_n_per_dim"}
_FLOAT_KEYS = {"noise_var", "sigma_s2", "bandwidth", "theta1", "theta0", "offset_var", "delta_o"}


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    for k in raw:
        if k not in known:
            raise ConfigError(f"{k}: unknown config key")
    for k in _REQUIRED:
        if k not in raw:
            raise ConfigError(f"{k}: required config key is missing")
    kw = {}
    for k, v in raw.items():
        if k in _INT_KEYS or (k in _OPT_INT_KEYS and v is not None):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{k}: expected an integer, got {v!r}")
        elif k in _FLOAT_KEYS:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{k}: expected a number, got {v!r}")
            v = float(v)
        elif k == "active_dims" and v is not None:
            if not isinstance(v, list) or not all(isinstance(i, int) for i in v):
                raise ConfigError(f"{k}: expected a list of integers, got {v!r}")
            v = tuple(v)
        elif k in ("benchmark", "method") and not isinstance(v, str):
            raise ConfigError(f"{k}: expected a string, got {v!r}")
        kw[k] = v
    return ExperimentConfig(**kw)


def read_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def write_config(cfg: ExperimentConfig, path) -> None:
    d = asdict(cfg)
    if d["active_dims"] is not None:
        d["active_dims"] = list(d["active_dims"])
    Path(path).write_text(json.dumps(d, indent=2) + "\n")
