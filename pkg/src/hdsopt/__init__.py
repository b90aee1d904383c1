"""Sparse variable selection by hierarchical diagonal sampling, followed by GP-UCB."""
from .bench import BenchmarkSpec, cws_run, make_oracle
from .fdt import FixedFDT, SequentialFDT
from .gp_core import GPPosterior, KernelSpec, NumericalError
from .gpt import GPTester
from .gpucb import RegretTrace, UcbConfig, gpucb_run
from .harness import ConfigError, ExperimentConfig, RunResult, run_experiment, summarize, sweep
from .hds import HdsConfig, HdsResult, Oracle, hds_run

__all__ = [
    "BenchmarkSpec", "ConfigError", "ExperimentConfig", "FixedFDT", "GPPosterior", "GPTester",
    "HdsConfig", "HdsResult", "KernelSpec", "NumericalError", "Oracle", "RegretTrace",
    "RunResult", "SequentialFDT", "UcbConfig", "cws_run", "gpucb_run", "hds_run",
    "make_oracle", "run_experiment", "summarize", "sweep",
]
__version__ = "0.1.0"
