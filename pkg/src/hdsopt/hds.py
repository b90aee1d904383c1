"""Hierarchical Diagonal Sampling.

The variable set is bisected recursively. Each node ``I`` is tested for
activity through the one-dimensional diagonal projection
``f_I(z) = f(x_I(z))``, where coordinates in ``I`` are set to ``z`` and the
rest are held at a random background vector. Active nodes are split, inactive
nodes are pruned with their whole subtree, and active singletons are emitted.

The testing block is pluggable: anything implementing :class:`Tester`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

import numpy as np

from .gp_core import KernelSpec

__all__ = [
    "NodeState",
    "Node",
    "Oracle",
    "HdsConfig",
    "HdsResult",
    "Tester",
    "StubTester",
    "FixedDeltaTester",
    "TESTERS",
    "draw_background",
    "project_point",
    "split_node",
    "make_tester",
    "hds_run",
]

TESTERS = ("fdt_sequential", "fdt_fixed", "gpt")


class NodeState(str, enum.Enum):
    UNDETERMINED = "undetermined"
    ACTIVE = "active"
    INACTIVE = "inactive"


@dataclass(eq=False)
class Node:
    dims: tuple[int, ...]
    depth: int = 0
    state: NodeState = NodeState.UNDETERMINED
    llr: float = 0.0
    samples_used: int = 0
    steps: int = 0
    tester_state: Any = None
    children: tuple[Node, ...] = ()

    def __post_init__(self):
        self.dims = tuple(int(i) for i in self.dims)
        if not self.dims:
            raise ValueError("a node must contain at least one dimension")

    @property
    def is_singleton(self) -> bool:
        return len(self.dims) == 1

    def __repr__(self):
        return f"Node({list(self.dims)}, {self.state.value}, llr={self.llr:.3g}, n={self.samples_used})"


class Oracle:
    """Noisy black-box access ``y = f(x) + eps`` with evaluation counting.

    Parameters
    ----------
    fn : callable
        Noise-free objective on a length-``dim`` vector.
    dim : int
        Ambient dimension ``D``.
    noise_var : float
        Variance of the Gaussian observation noise.
    seed : int or Generator, optional
        Source of the noise draws.
    optimum : float, optional
        Known maximum of ``fn``, used for regret.
    """

    def __init__(self, fn: Callable[[np.ndarray], float], dim: int, noise_var: float,
                 seed=None, optimum: float | None = None, optimum_location=None):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {noise_var}")
        self.fn = fn
        self.dim = int(dim)
        self.noise_var = float(noise_var)
        self.rng = np.random.default_rng(seed)
        self.optimum = optimum
        self.optimum_location = optimum_location
        self.eval_count = 0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"query has shape {x.shape}, expected ({self.dim},)")
        return x

    def eval_true(self, x) -> float:
        return float(self.fn(self._check(x)))

    def eval_noisy(self, x) -> float:
        y = self.eval_true(x)
        self.eval_count += 1
        if self.noise_var > 0:
            y += math.sqrt(self.noise_var) * self.rng.standard_normal()
        return y


@dataclass(frozen=True)
class HdsConfig:
    """Settings of one HDS run.

    ``offset_var`` is the prior variance of an unknown constant mean that the
    GP tester shares between both hypotheses; ``fixed_pairs``/``fixed_alpha``
    size the non-sequential finite-difference test.
    """

    budget: int = 2000
    theta1: float = 10.0
    theta0: float = -10.0
    tester: str = "fdt_sequential"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    noise_var: float = 0.1
    offset_var: float = 0.0
    fixed_pairs: int | None = None
    fixed_alpha: float = 0.05

    def __post_init__(self):
        if not self.theta0 < 0 < self.theta1:
            raise ValueError(f"need theta0 < 0 < theta1, got {self.theta0}, {self.theta1}")
        if self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")
        if self.tester not in TESTERS:
            raise ValueError(f"unknown tester {self.tester!r}; choose from {TESTERS}")
        if not self.noise_var > 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        if self.offset_var < 0:
            raise ValueError(f"offset_var must be >= 0, got {self.offset_var}")


@dataclass
class HdsResult:
    recovered: tuple[int, ...]
    nodes: list[Node]
    terminated_by: str
    samples: int
    background: np.ndarray

    @property
    def tested(self) -> list[Node]:
        return [n for n in self.nodes if n.steps > 0]

    @property
    def samples_per_node(self) -> dict[tuple[int, ...], int]:
        return {n.dims: n.samples_used for n in self.nodes}


class Tester(Protocol):
    """Testing block plugged into :func:`hds_run`.

    ``step`` spends at most ``evals_per_step`` oracle evaluations on the node
    and returns the LLR increment; ``index`` is the node's sampling priority.
    """

    evals_per_step: int

    def reset(self, node: Node, rng: np.random.Generator) -> None: ...

    def index(self, node: Node) -> float: ...

    def step(self, node: Node, oracle: Oracle, background: np.ndarray,
             rng: np.random.Generator) -> float: ...


def draw_background(D: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=D)


def project_point(node: Node | Sequence[int], z: float, background: np.ndarray) -> np.ndarray:
    """The point ``x_I(z)``: coordinates in the node set to ``z``, the rest to the background."""
    dims = node.dims if isinstance(node, Node) else tuple(node)
    if not dims:
        raise ValueError("cannot project onto an empty node")
    if not -1.0 - 1e-12 <= z <= 1.0 + 1e-12:
        raise ValueError(f"z must lie in [-1, 1], got {z}")
    x = np.array(background, dtype=float)
    x[list(dims)] = z
    return x


def split_node(node: Node) -> tuple[Node, Node]:
    """Halve a node in index order; the left child gets the extra element."""
    if node.is_singleton:
        raise ValueError(f"cannot split singleton node {list(node.dims)}")
    dims = sorted(node.dims)
    h = (len(dims) + 1) // 2
    return (Node(tuple(dims[:h]), node.depth + 1),
            Node(tuple(dims[h:]), node.depth + 1))


class FixedDeltaTester:
    """Returns the same LLR increment for every node; one evaluation per step."""

    evals_per_step = 1

    def __init__(self, delta: float):
        self.delta = delta

    def reset(self, node, rng):
        pass

    def index(self, node):
        return node.llr

    def step(self, node, oracle, background, rng):
        oracle.eval_noisy(project_point(node, 0.0, background))
        return self.delta


class StubTester:
    """Ground-truth tester with controllable error rate and sample usage.

    Each node is decided after a number of one-evaluation steps drawn
    uniformly from ``1..max_samples``; the verdict is correct with
    probability ``1 - error_rate``.
    """

    evals_per_step = 1

    def __init__(self, active: Sequence[int], error_rate: float = 0.0, max_samples: int = 1):
        if not 0 <= error_rate <= 1:
            raise ValueError(f"error_rate must be in [0, 1], got {error_rate}")
        if max_samples < 1:
            raise ValueError(f"max_samples must be >= 1, got {max_samples}")
        self.active = frozenset(active)
        self.error_rate = error_rate
        self.max_samples = max_samples
        self.errors = 0
        self.decisions = 0

    def reset(self, node, rng):
        truth = bool(self.active.intersection(node.dims))
        wrong = self.error_rate > 0 and rng.random() < self.error_rate
        length = int(rng.integers(1, self.max_samples + 1))
        node.tester_state = {"verdict": truth != wrong, "wrong": wrong, "length": length, "n": 0}

    def index(self, node):
        return node.llr

    def step(self, node, oracle, background, rng):
        st = node.tester_state
        oracle.eval_noisy(project_point(node, 0.0, background))
        st["n"] += 1
        if st["n"] < st["length"]:
            return 0.0
        self.decisions += 1
        self.errors += st["wrong"]
        return math.inf if st["verdict"] else -math.inf


def make_tester(cfg: HdsConfig) -> Tester:
    from .fdt import FixedFDT, SequentialFDT
    from .gpt import GPTester

    if cfg.tester == "fdt_sequential":
        return SequentialFDT(cfg.kernel, cfg.noise_var)
    if cfg.tester == "fdt_fixed":
        return FixedFDT(cfg.kernel, cfg.noise_var, n_pairs=cfg.fixed_pairs, alpha=cfg.fixed_alpha)
    return GPTester(cfg.kernel, cfg.noise_var, offset_var=cfg.offset_var)


def hds_run(oracle: Oracle, cfg: HdsConfig, seed=None, tester: Tester | None = None,
            background: np.ndarray | None = None) -> HdsResult:
    """Run Hierarchical Diagonal Sampling until the tree empties or the budget is spent.

    At each iteration the live node with the largest tester index is stepped
    (ties go to the lexicographically smallest dimension tuple). A step is
    never started if it could overrun the budget.
    """
    if tester is None:
        tester = make_tester(cfg)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    bg_seq, test_seq = seed.spawn(2)
    if background is None:
        background = draw_background(oracle.dim, np.random.default_rng(bg_seq))
    background = np.asarray(background, dtype=float)
    rng = np.random.default_rng(test_seq)

    root = Node(tuple(range(oracle.dim)))
    tester.reset(root, rng)
    nodes = [root]
    live = [root]
    recovered: list[int] = []
    start = oracle.eval_count
    terminated_by = "tree_empty"

    while live:
        used = oracle.eval_count - start
        if used + tester.evals_per_step > cfg.budget:
            terminated_by = "budget"
            break
        node = min(live, key=lambda n: (-tester.index(n), n.dims))
        before = oracle.eval_count
        delta = tester.step(node, oracle, background, rng)
        node.samples_used += oracle.eval_count - before
        node.steps += 1
        node.llr += delta
        if node.llr >= cfg.theta1:
            node.state = NodeState.ACTIVE
            live.remove(node)
            if node.is_singleton:
                recovered.append(node.dims[0])
            else:
                node.children = split_node(node)
                for child in node.children:
                    tester.reset(child, rng)
                    nodes.append(child)
                    live.append(child)
        elif node.llr <= cfg.theta0:
            node.state = NodeState.INACTIVE
            live.remove(node)

    return HdsResult(tuple(sorted(recovered)), nodes, terminated_by,
                     oracle.eval_count - start, background)
