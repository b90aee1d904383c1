"""GP-UCB over a subset of coordinates, with regret bookkeeping.

Coordinates outside the selected set stay at the background vector. The
acquisition maximizes ``mu + sqrt(beta_t) * sd`` over a fixed candidate set:
a product grid when at most two coordinates are selected, otherwise seeded
uniform candidates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gp_core import GPPosterior, KernelSpec, NumericalError, OffsetKernel
from .hds import Oracle

__all__ = ["UcbConfig", "RegretTrace", "beta_t", "ucb_acquire", "candidate_set", "gpucb_run"]


@dataclass(frozen=True)
class UcbConfig:
    """GP-UCB settings.

    ``offset_var`` adds an unknown constant mean with that prior variance to
    the kernel. ``candidates_per_step`` sizes the random candidate set used
    beyond two dimensions (default ``1000 * len(dims)``).
    """

    horizon: int = 300
    delta_o: float = 0.05
    dims: tuple[int, ...] = (0,)
    spec: KernelSpec = field(default_factory=KernelSpec)
    noise_var: float = 0.1
    candidates_per_step: int | None = None
    grid_per_axis: int = 201
    offset_var: float = 0.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0 < self.delta_o < 1:
            raise ValueError(f"delta_o must be in (0, 1), got {self.delta_o}")
        dims = tuple(int(i) for i in self.dims)
        if not dims:
            raise ValueError("dims must be nonempty")
        object.__setattr__(self, "dims", dims)


@dataclass
class RegretTrace:
    instantaneous: np.ndarray
    cumulative: np.ndarray
    min_regret: np.ndarray
    points: np.ndarray | None = None
    error: str | None = None

    @classmethod
    def from_instantaneous(cls, r, points=None, error=None) -> RegretTrace:
        r = np.asarray(r, dtype=float)
        return cls(r, np.cumsum(r), np.minimum.accumulate(r) if r.size else r, points, error)

    @property
    def average(self) -> np.ndarray:
        return self.cumulative / np.arange(1, self.cumulative.size + 1)

    def __len__(self):
        return self.instantaneous.size


def beta_t(t: int, d: int, cfg: UcbConfig) -> float:
    """Exploration weight for step ``t`` over ``d`` selected coordinates (natural logs)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    sigma_s = math.sqrt(cfg.spec.sigma_s2)
    b = cfg.spec.bandwidth
    return (2.0 * math.log(t**2 * 2.0 * math.pi**2 / (3.0 * cfg.delta_o))
            + 2.0 * d * math.log(2.0 * t**2 * d * sigma_s / b
                                 * math.sqrt(math.log(4.0 * d / cfg.delta_o))))


def candidate_set(cfg: UcbConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Candidates in ``[-1, 1]^k`` sorted lexicographically (``k = len(cfg.dims)``)."""
    k = len(cfg.dims)
    if k <= 2:
        axis = np.linspace(-1.0, 1.0, cfg.grid_per_axis)
        mesh = np.meshgrid(*([axis] * k), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    m = cfg.candidates_per_step or 1000 * k
    C = np.random.default_rng(rng).uniform(-1.0, 1.0, size=(m, k))
    return C[np.lexsort(C.T[::-1])]


def ucb_acquire(posterior: GPPosterior, beta: float) -> np.ndarray:
    """Candidate maximizing ``mu + sqrt(beta) * sd``, with ``sd`` the noise-free posterior sd.

    Ties go to the first candidate, which is the lexicographically smallest
    for sets built by :func:`candidate_set`.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    mean, var = posterior.candidate_moments()
    sd = np.sqrt(np.maximum(var - posterior.noise_var, 0.0))
    return posterior.candidates[int(np.argmax(mean + math.sqrt(beta) * sd))]


def gpucb_run(oracle: Oracle, dims: Sequence[int], cfg: UcbConfig, background: np.ndarray,
              seed=None, optimum: float | None = None) -> RegretTrace:
    """Run ``cfg.horizon`` GP-UCB steps on the slice through ``background`` spanned by ``dims``.

    Regret is measured against ``optimum`` (default ``oracle.optimum``). A
    numerical failure stops the run and returns the partial trace with the
    error recorded.
    """
    dims = list(dims)
    if not dims or any(not 0 <= i < oracle.dim for i in dims):
        raise ValueError(f"dims {dims} must be a nonempty subset of 0..{oracle.dim - 1}")
    f_star = oracle.optimum if optimum is None else optimum
    if f_star is None:
        raise ValueError("regret needs the oracle's true maximum")
    k = len(dims)
    rng = np.random.default_rng(seed)
    kernel = OffsetKernel(KernelSpec(cfg.spec.sigma_s2, cfg.spec.bandwidth, tuple(range(k))),
                          cfg.offset_var)
    post = GPPosterior(kernel, cfg.noise_var, candidate_set(cfg, rng))
    base = np.asarray(background, dtype=float)
    regret, points = [], []
    error = None
    for t in range(1, cfg.horizon + 1):
        u = ucb_acquire(post, beta_t(t, k, cfg))
        x = base.copy()
        x[dims] = u
        y = oracle.eval_noisy(x)
        regret.append(f_star - oracle.eval_true(x))
        points.append(x)
        try:
            post.extend(u, y)
        except NumericalError as exc:
            error = str(exc)
            break
    return RegretTrace.from_instantaneous(regret, np.array(points), error)
