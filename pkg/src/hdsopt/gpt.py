"""GP sequential likelihood-ratio testing block.

Each node keeps two GP posteriors over its diagonal ``z in [-1, 1]``: one
under the projected kernel with no active coordinate (a random constant) and
one with a single active coordinate. Every new observation adds the exact
log predictive-density ratio to the node's LLR. The next sample goes where
the LLR increment has the largest optimistic value ``E + sqrt(V)`` under the
active hypothesis, and that value is also the node's priority.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .gp_core import GPPosterior, KernelSpec, OffsetKernel, PosteriorMoments
from .hds import Node, Oracle, project_point

__all__ = [
    "GptNodeState",
    "LlrPredictiveMoments",
    "gpt_llr_increment",
    "llr_predictive_moments",
    "llr_moment_arrays",
    "ucb_index",
    "gpt_step",
    "GPTester",
    "GRID_SIZE",
    "MAX_HISTORY",
]

GRID_SIZE = 101
MAX_HISTORY = 500
_DEGENERATE_RTOL = 1e-12


def gpt_llr_increment(y: float, m0: PosteriorMoments, m1: PosteriorMoments) -> float:
    """``log N(y | mu1, v1) - log N(y | mu0, v0)``."""
    if not (m0.variance > 0 and m1.variance > 0):
        raise ValueError("predictive variances must be positive")
    return (0.5 * math.log(m0.variance / m1.variance)
            - (y - m1.mean) ** 2 / (2.0 * m1.variance)
            + (y - m0.mean) ** 2 / (2.0 * m0.variance))


class LlrPredictiveMoments(NamedTuple):
    """Law of the next LLR increment under the active hypothesis.

    ``LLR ~ w2 * chi2(1, lam) + w0``. When the two predictive variances
    coincide the chi-squared form degenerates; ``lam`` and ``w0`` are then
    ``nan`` while ``mean`` and ``var`` remain exact.
    """

    w2: float
    w0: float
    lam: float
    mean: float
    var: float


def llr_moment_arrays(mu0, v0, mu1, v1) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance of the LLR increment for ``y ~ N(mu1, v1)``, vectorized.

    The mean is ``KL(N1 || N0)``. The variance ``2 w2^2 (1 + 2 lam)`` is
    rewritten as ``2 w2^2 + v1 (mu1 - mu0)^2 / v0^2``, which stays finite when
    ``v1 == v0``.
    """
    mu0, v0, mu1, v1 = (np.asarray(a, dtype=float) for a in (mu0, v0, mu1, v1))
    dmu2 = (mu1 - mu0) ** 2
    w2 = 0.5 * (v1 / v0 - 1.0)
    mean = 0.5 * np.log(v0 / v1) + (v1 + dmu2) / (2.0 * v0) - 0.5
    var = 2.0 * w2**2 + v1 * dmu2 / v0**2
    return mean, var


def llr_predictive_moments(m0: PosteriorMoments, m1: PosteriorMoments) -> LlrPredictiveMoments:
    v0, v1 = m0.variance, m1.variance
    if not (v0 > 0 and v1 > 0):
        raise ValueError("predictive variances must be positive")
    d = m1.mean - m0.mean
    w2 = 0.5 * (v1 / v0 - 1.0)
    mean, var = (float(a) for a in llr_moment_arrays(m0.mean, v0, m1.mean, v1))
    if abs(v1 - v0) <= _DEGENERATE_RTOL * max(v0, v1):
        return LlrPredictiveMoments(w2, math.nan, math.nan, mean, var)
    lam = (math.sqrt(v1) * d / (v1 - v0)) ** 2
    w0 = 0.5 * math.log(v0 / v1) - d**2 / (2.0 * (v1 - v0))
    return LlrPredictiveMoments(w2, w0, lam, mean, var)


def ucb_index(m0: PosteriorMoments, m1: PosteriorMoments) -> float:
    m = llr_predictive_moments(m0, m1)
    return m.mean + math.sqrt(max(m.var, 0.0))


@dataclass
class GptNodeState:
    posterior_h0: GPPosterior
    posterior_h1: GPPosterior
    llr: float = 0.0
    history: list[tuple[float, float]] = field(default_factory=list)
    increments: list[float] = field(default_factory=list)
    ucb: np.ndarray | None = None

    def refresh(self):
        m0, v0 = self.posterior_h0.candidate_moments()
        m1, v1 = self.posterior_h1.candidate_moments()
        mean, var = llr_moment_arrays(m0, v0, m1, v1)
        self.ucb = mean + np.sqrt(np.maximum(var, 0.0))

    @property
    def best(self) -> int:
        return int(np.argmax(self.ucb))


class GPTester:
    """GP likelihood-ratio tester over a fixed grid of ``grid_size`` points on the diagonal.

    Parameters
    ----------
    spec : KernelSpec
        Supplies ``sigma_s2`` and the bandwidth of the projected kernels.
    noise_var : float
        Observation noise variance.
    offset_var : float
        Prior variance of an unknown constant mean shared by both
        hypotheses. Zero reproduces the plain zero-mean model.
    """

    evals_per_step = 1

    def __init__(self, spec: KernelSpec, noise_var: float, offset_var: float = 0.0,
                 grid_size: int = GRID_SIZE, max_history: int = MAX_HISTORY):
        self.spec = spec
        self.noise_var = noise_var
        self.offset_var = offset_var
        self.grid = np.linspace(-1.0, 1.0, grid_size)
        self.max_history = max_history
        self.k0 = OffsetKernel(spec.projected(0), offset_var)
        self.k1 = OffsetKernel(spec.projected(1), offset_var)

    def new_state(self) -> GptNodeState:
        st = GptNodeState(
            GPPosterior(self.k0, self.noise_var, self.grid, self.max_history),
            GPPosterior(self.k1, self.noise_var, self.grid, self.max_history),
        )
        st.refresh()
        return st

    def reset(self, node, rng):
        node.tester_state = self.new_state()

    def index(self, node):
        return float(node.tester_state.ucb[node.tester_state.best])

    def step(self, node, oracle, background, rng):
        return gpt_step(node, oracle, background, self)


def gpt_step(node: Node, oracle: Oracle, background: np.ndarray, tester: GPTester) -> float:
    """Sample the node's diagonal at the UCB maximizer and return the LLR increment."""
    st = node.tester_state
    if st is None:
        st = node.tester_state = tester.new_state()
    i = st.best
    z = float(tester.grid[i])
    y = oracle.eval_noisy(project_point(node, z, background))
    m0, v0 = st.posterior_h0.candidate_moments()
    m1, v1 = st.posterior_h1.candidate_moments()
    inc = gpt_llr_increment(y, PosteriorMoments(m0[i], v0[i]), PosteriorMoments(m1[i], v1[i]))
    st.posterior_h0.extend([z], y)
    st.posterior_h1.extend([z], y)
    st.history.append((z, y))
    st.increments.append(inc)
    st.llr += inc
    st.refresh()
    return inc
