"""Benchmark oracles embedded in ``[-1, 1]^D`` and the coordinate-wise baseline.

Every oracle exposes the function to be *maximized*: cost benchmarks (Quad,
QuadMix, Branin, Beale) are negated. Selection statistics only look at
squared differences or sign-symmetric likelihoods, so the sign is irrelevant
to them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gp_core import KernelSpec, LatticeFunction, MAX_LATTICE_POINTS, sample_gp_lattice
from .hds import Oracle, draw_background

__all__ = [
    "BENCHMARKS",
    "BenchmarkSpec",
    "Benchmark",
    "build_benchmark",
    "make_oracle",
    "true_max",
    "quad_eval",
    "quadmix_eval",
    "branin_eval",
    "beale_eval",
    "branin_minima",
    "cws_run",
    "lattice_resolution",
    "BRANIN_MIN",
]

BENCHMARKS = ("gp", "quad", "quadmix", "branin", "beale")
BRANIN_MIN = 0.39788735772973816


@dataclass(frozen=True)
class BenchmarkSpec:
    """What to build. ``active_dims=None`` draws ``d`` distinct dimensions from the seed."""

    name: str = "gp"
    D: int = 200
    d: int = 2
    active_dims: tuple[int, ...] | None = None
    noise_var: float = 0.1
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if self.name not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.name!r}; choose from {BENCHMARKS}")
        if self.D < 1:
            raise ValueError(f"D must be >= 1, got {self.D}")
        if self.active_dims is not None:
            dims = tuple(int(i) for i in self.active_dims)
            if len(set(dims)) != len(dims) or any(not 0 <= i < self.D for i in dims):
                raise ValueError(f"active_dims {dims} must be distinct and within 0..{self.D - 1}")
            object.__setattr__(self, "active_dims", dims)
            object.__setattr__(self, "d", len(dims))
        if not 0 <= self.d <= self.D:
            raise ValueError(f"need 0 <= d <= D, got d={self.d}, D={self.D}")
        if self.name in ("branin", "beale") and self.d != 2:
            raise ValueError(f"{self.name} needs d = 2, got {self.d}")
        if self.name in ("quad", "quadmix", "gp") and self.d < 1:
            raise ValueError(f"{self.name} needs d >= 1")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")


def quad_eval(x, x_star, active, b: float) -> float:
    """``|P (x - x*)|^2`` with ``P_ii = 1/b`` on active coordinates and ``1/100`` elsewhere."""
    v = _scaled_offset(x, x_star, active, b)
    return float(v @ v)


def quadmix_eval(x, x_star, active, b: float, r_mix: float | None = None) -> float:
    """``|M P (x - x*)|^2`` with ``M = (1 - r) I + r J`` and ``r = 1/D`` by default."""
    v = _scaled_offset(x, x_star, active, b)
    r = 1.0 / v.size if r_mix is None else r_mix
    w = (1.0 - r) * v + r * v.sum()
    return float(w @ w)


def _scaled_offset(x, x_star, active, b):
    v = (np.asarray(x, dtype=float) - np.asarray(x_star, dtype=float)) / 100.0
    idx = list(active)
    v[idx] *= 100.0 / b
    return v


def _branin_std(x1, x2):
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    return (x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0


def branin_eval(u) -> float:
    """Branin on ``[-1, 1]^2`` via ``x1 = 2.5 + 7.5 u1``, ``x2 = 7.5 + 7.5 u2``."""
    u = np.asarray(u, dtype=float)
    return float(_branin_std(2.5 + 7.5 * u[0], 7.5 + 7.5 * u[1]))


def branin_minima() -> np.ndarray:
    """The three global minimizers of Branin in ``[-1, 1]^2`` coordinates."""
    std = np.array([[-math.pi, 12.275], [math.pi, 2.275], [9.42478, 2.475]])
    return (std - [2.5, 7.5]) / 7.5


def beale_eval(u) -> float:
    """Beale on ``[-1, 1]^2`` via ``x = 4.5 u``."""
    x, y = 4.5 * np.asarray(u, dtype=float)
    return float((1.5 - x + x * y) ** 2 + (2.25 - x + x * y**2) ** 2
                 + (2.625 - x + x * y**3) ** 2)


def lattice_resolution(d: int, cap: int = 1001) -> int:
    """Finest per-axis resolution whose lattice fits the size guard."""
    r = int(math.floor(MAX_LATTICE_POINTS ** (1.0 / d) + 1e-9))
    while (r + 1) ** d <= MAX_LATTICE_POINTS:
        r += 1
    while r**d > MAX_LATTICE_POINTS:
        r -= 1
    return min(r, cap)


@dataclass
class Benchmark:
    """A realized benchmark: the maximization objective and its known maximum."""

    spec: BenchmarkSpec
    active_dims: tuple[int, ...]
    objective: callable
    optimum_location: np.ndarray
    optimum_value: float
    x_star: np.ndarray | None = None
    lattice: LatticeFunction | None = None


def build_benchmark(spec: BenchmarkSpec, seed=None) -> Benchmark:
    """Realize random parts of a benchmark (active positions, ``x*``, GP sample) from ``seed``."""
    rng = np.random.default_rng(seed)
    if spec.active_dims is None:
        active = tuple(sorted(int(i) for i in rng.choice(spec.D, size=spec.d, replace=False)))
    else:
        active = spec.active_dims
    idx = list(active)
    b = spec.kernel.bandwidth

    if spec.name == "gp":
        lat = sample_gp_lattice(spec.kernel, spec.d, lattice_resolution(spec.d), rng)
        loc_a, val = lat.argmax()
        loc = np.zeros(spec.D)
        loc[idx] = loc_a

        def objective(x):
            return float(lat(x[idx])[0])

        return Benchmark(spec, active, objective, loc, val, lattice=lat)

    if spec.name in ("quad", "quadmix"):
        x_star = rng.uniform(-1.0, 1.0, size=spec.D)
        cost = quad_eval if spec.name == "quad" else quadmix_eval

        def objective(x):
            return -cost(x, x_star, idx, b)

        return Benchmark(spec, active, objective, x_star.copy(), 0.0, x_star=x_star)

    if spec.name == "branin":
        loc = np.zeros(spec.D)
        loc[idx] = branin_minima()[0]

        def objective(x):
            return -branin_eval(x[idx])

        return Benchmark(spec, active, objective, loc, -BRANIN_MIN)

    loc = np.zeros(spec.D)
    loc[idx] = [3.0 / 4.5, 0.5 / 4.5]

    def objective(x):
        return -beale_eval(x[idx])

    return Benchmark(spec, active, objective, loc, 0.0)


def make_oracle(spec: BenchmarkSpec, seed=None, noise_seed=None) -> Oracle:
    """Noisy oracle for a benchmark; ``noise_seed`` defaults to a stream derived from ``seed``."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    fn_seq, noise_seq = seed.spawn(2)
    bench = build_benchmark(spec, fn_seq)
    oracle = Oracle(bench.objective, spec.D, spec.noise_var,
                    seed=noise_seq if noise_seed is None else noise_seed,
                    optimum=bench.optimum_value, optimum_location=bench.optimum_location)
    oracle.active_dims = bench.active_dims
    oracle.benchmark = bench
    return oracle


def true_max(spec: BenchmarkSpec, seed=None) -> tuple[np.ndarray, float]:
    """Location and value of the maximum of the realized objective."""
    bench = build_benchmark(spec, seed)
    return bench.optimum_location, bench.optimum_value


def cws_run(oracle: Oracle, d_out: int, n_per_dim: int, delta: float, seed=None,
            background: np.ndarray | None = None) -> tuple[int, ...]:
    """Coordinate-wise sampling: keep the ``d_out`` dimensions with largest mean squared difference.

    For each dimension ``n_per_dim`` pairs ``(x, x + delta e_i)`` are drawn with
    ``x_i`` uniform on ``[-1, 1 - delta]`` and the other coordinates at the
    background. Uses exactly ``2 D n_per_dim`` evaluations.
    """
    if n_per_dim < 2:
        raise ValueError(f"n_per_dim must be >= 2, got {n_per_dim}")
    if not 0 < delta < 2:
        raise ValueError(f"delta must be in (0, 2), got {delta}")
    rng = np.random.default_rng(seed)
    D = oracle.dim
    if background is None:
        background = draw_background(D, rng)
    scores = np.zeros(D)
    for i in range(D):
        acc = 0.0
        for t in rng.uniform(-1.0, 1.0 - delta, size=n_per_dim):
            x = np.array(background, dtype=float)
            x[i] = t
            y0 = oracle.eval_noisy(x)
            x[i] = t + delta
            acc += (y0 - oracle.eval_noisy(x)) ** 2
        scores[i] = acc / n_per_dim
    order = np.lexsort((np.arange(D), -scores))
    return tuple(sorted(int(i) for i in order[:d_out]))
