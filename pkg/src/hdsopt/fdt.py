"""Finite-difference testing block.

Under a squared-exponential GP prior the difference
``dy = y(z) - y(z + delta)`` of two noisy samples along a diagonal projection
with ``a`` active coordinates is ``N(0, fd_variance(a, delta))``. The
sequential test accumulates the Gaussian log-likelihood ratio of such pairs
between ``a = 1`` and ``a = 0``; the non-sequential test thresholds the
normalized sum of squared differences at a chi-squared quantile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .gp_core import KernelSpec
from .hds import Node, Oracle, project_point

__all__ = [
    "FdtHypothesisVariances",
    "FdtNodeState",
    "fd_variance",
    "fdt_llr_increment",
    "fdt_step",
    "fdt_statistic",
    "fdt_threshold",
    "fdt_sample_size",
    "theorem33_size",
    "hds_bound_eq4",
    "ceil_log2",
    "SequentialFDT",
    "FixedFDT",
    "SPACING_ATTEMPTS",
]

SPACING_ATTEMPTS = 20
# design lower bound on 1 - exp(-9), the H1 signal fraction at delta = 3b
H1_SIGNAL_FRACTION = 0.95


def ceil_log2(D: int) -> int:
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    return (int(D) - 1).bit_length()


def fd_variance(a: int, delta: float, spec: KernelSpec, noise_var: float) -> float:
    """Variance of a noisy finite difference at offset ``delta`` with ``a`` active coords."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    signal = -math.expm1(-a * delta**2 / spec.bandwidth**2)
    return 2.0 * (signal * spec.sigma_s2 + noise_var)


@dataclass(frozen=True)
class FdtHypothesisVariances:
    sigma0_sq: float
    sigma1_sq: float

    def __post_init__(self):
        if not 0 < self.sigma0_sq < self.sigma1_sq:
            raise ValueError(
                f"need 0 < sigma0_sq < sigma1_sq, got {self.sigma0_sq}, {self.sigma1_sq}"
            )

    @classmethod
    def design(cls, spec: KernelSpec, noise_var: float) -> FdtHypothesisVariances:
        """``sigma0^2 = 2 noise_var`` and the conservative ``sigma1^2 = 2(0.95 sigma_s2 + noise_var)``."""
        return cls(2.0 * noise_var, 2.0 * (H1_SIGNAL_FRACTION * spec.sigma_s2 + noise_var))


def fdt_llr_increment(dy, v: FdtHypothesisVariances):
    """``log N(dy | 0, sigma1^2) - log N(dy | 0, sigma0^2)``; vectorized over ``dy``."""
    slope = 0.5 / v.sigma0_sq - 0.5 / v.sigma1_sq
    return slope * np.square(dy) + 0.5 * math.log(v.sigma0_sq / v.sigma1_sq)


@dataclass
class FdtNodeState:
    llr: float = 0.0
    pair_count: int = 0
    last_z: float | None = None
    increments: list[float] = field(default_factory=list)
    diffs: list[float] = field(default_factory=list)


def _draw_z(rng: np.random.Generator, delta: float, last_z: float | None, spacing: float) -> float:
    hi = 1.0 - delta
    z = rng.uniform(-1.0, hi)
    if last_z is None:
        return z
    for _ in range(SPACING_ATTEMPTS - 1):
        if abs(z - last_z) >= spacing:
            break
        z = rng.uniform(-1.0, hi)
    return z


def fdt_step(node: Node, oracle: Oracle, background: np.ndarray, v: FdtHypothesisVariances,
             rng: np.random.Generator, delta: float) -> float:
    """Sample one pair ``f_I(z), f_I(z + delta)`` and return its LLR increment.

    ``z`` is uniform on ``[-1, 1 - delta]`` and is redrawn (up to 20 attempts in
    total) while it lies within ``delta`` of the previous pair's ``z``.
    """
    st = node.tester_state
    if st is None:
        st = node.tester_state = FdtNodeState()
    z = _draw_z(rng, delta, st.last_z, spacing=delta)
    y0 = oracle.eval_noisy(project_point(node, z, background))
    y1 = oracle.eval_noisy(project_point(node, z + delta, background))
    dy = y0 - y1
    inc = float(fdt_llr_increment(dy, v))
    st.llr += inc
    st.pair_count += 1
    st.last_z = z
    st.increments.append(inc)
    st.diffs.append(dy)
    return inc


def fdt_statistic(diffs, noise_var: float) -> float:
    """``X_n = sum(diffs^2) / (2 noise_var)``; chi-squared with ``n`` dof under pure noise."""
    diffs = np.asarray(diffs, dtype=float)
    if diffs.size < 1:
        raise ValueError("need at least one difference")
    return float(np.sum(diffs**2) / (2.0 * noise_var))


def fdt_threshold(n: int, alpha: float) -> float:
    """Upper ``alpha`` quantile of the central chi-squared law with ``n`` dof."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return float(stats.chi2.isf(alpha, n))


def fdt_sample_size(c: float, M: float, alpha: float, log=math.log) -> int:
    """Number of pairs for which the thresholded chi-squared test has both errors below ``alpha``.

    ``c`` lower-bounds the mean normalized squared signal difference and ``M``
    bounds its range.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if M < c:
        raise ValueError(f"M must be >= c, got M={M}, c={c}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    factor = max(2.0, 16.0 * (1.0 + math.sqrt(1.0 + c)) ** 2 / c**2, 2.0 * M**2 / c**2)
    return math.ceil(factor * log(2.0 / alpha))


def theorem33_size(epsilon: float, D: int, d: int, b: float, sigma_s2: float,
                   c1: float = 1.0, c2: float = 1.0, log=math.log,
                   bracket_log=math.log2) -> tuple[float, float, float]:
    """Per-node size factor and total-sample bound of HDS with the fixed-size test.

    Returns ``(alpha, A_eps, N_eps)``. ``log`` is used for the analytic terms
    (the bandwidth condition and ``B_eps``); ``bracket_log`` for the
    ``log 16 + log(1/eps) / ceil(log2 D)`` factor of the total.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if d < 1 or D < 1:
        raise ValueError(f"need D >= 1 and d >= 1, got D={D}, d={d}")
    L = ceil_log2(D)
    if L == 0:
        raise ValueError("D must be >= 2 so that ceil(log2 D) >= 1")
    delta = epsilon / (6.0 * d * L)
    alpha = (epsilon / (2.0 * D)) ** L
    if not alpha < 0.25:
        raise ValueError(f"alpha = (eps/(2D))^ceil(log2 D) = {alpha:g} must be < 1/4")
    b_max = 2.0 / log(1.0 / delta) ** 2
    if not b <= b_max:
        raise ValueError(f"bandwidth b = {b} must be <= 2/log(1/delta)^2 = {b_max:g}")
    B = sigma_s2 * b**2 / (4096.0 * c2**2 * log(4.0 * c1 / (b * delta)))
    A = max(2.0, 16.0 * (1.0 + math.sqrt(1.0 + B)) ** 2 / B**2, 8.0 / B**2)
    N = A * d * L * (bracket_log(16.0) + bracket_log(1.0 / epsilon) / L)
    return alpha, A, N


def hds_bound_eq4(alpha: float, d: int, D: int, T_max: float) -> float:
    """Bound on expected HDS samples given per-node error rate and per-node sample cap."""
    if not alpha < 0.5:
        raise ValueError(f"alpha must be < 1/2, got {alpha}")
    return 2.0 * (1.0 - alpha) / (1.0 - 2.0 * alpha) * d * ceil_log2(D) * T_max


class SequentialFDT:
    """Sequential likelihood-ratio test on finite differences at ``delta = 3b``.

    Node priority is the node's accumulated LLR.
    """

    evals_per_step = 2

    def __init__(self, spec: KernelSpec, noise_var: float, delta: float | None = None):
        self.spec = spec
        self.noise_var = noise_var
        self.delta = 3.0 * spec.bandwidth if delta is None else delta
        if not 0 < self.delta < 2:
            raise ValueError(f"delta must be in (0, 2), got {self.delta}")
        self.variances = FdtHypothesisVariances.design(spec, noise_var)

    def reset(self, node, rng):
        node.tester_state = FdtNodeState()

    def index(self, node):
        return node.llr

    def step(self, node, oracle, background, rng):
        return fdt_step(node, oracle, background, self.variances, rng, self.delta)


class FixedFDT:
    """Non-sequential test: ``n_pairs`` random pairs, then threshold ``X_n`` at ``tau_n``.

    Each step collects one pair of independent uniform points. The node's
    LLR stays at zero until the last pair, then jumps to ``+inf`` (active) or
    ``-inf`` (inactive). Nodes already in progress are finished first.

    By default ``n_pairs`` comes from :func:`fdt_sample_size` with
    ``c = 0.95 sigma_s2 / noise_var`` (the mean normalized squared difference
    for one active coordinate) and ``M = 8 sigma_s2 / (2 noise_var)``.
    """

    evals_per_step = 2

    def __init__(self, spec: KernelSpec, noise_var: float, n_pairs: int | None = None,
                 alpha: float = 0.05):
        self.spec = spec
        self.noise_var = noise_var
        self.alpha = alpha
        if n_pairs is None:
            c = H1_SIGNAL_FRACTION * spec.sigma_s2 / noise_var
            M = max(8.0 * spec.sigma_s2 / (2.0 * noise_var), c)
            n_pairs = fdt_sample_size(c, M, alpha)
        self.n_pairs = int(n_pairs)
        self.tau = fdt_threshold(self.n_pairs, alpha)

    def reset(self, node, rng):
        node.tester_state = FdtNodeState()

    def index(self, node):
        return node.tester_state.pair_count

    def step(self, node, oracle, background, rng):
        st = node.tester_state
        z0, z1 = rng.uniform(-1.0, 1.0, size=2)
        dy = (oracle.eval_noisy(project_point(node, z0, background))
              - oracle.eval_noisy(project_point(node, z1, background)))
        st.diffs.append(dy)
        st.pair_count += 1
        if st.pair_count < self.n_pairs:
            return 0.0
        X = fdt_statistic(st.diffs, self.noise_var)
        return math.inf if X > self.tau else -math.inf
