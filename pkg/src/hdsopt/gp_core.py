"""Squared-exponential GP machinery.

Kernel evaluation, Gram matrices, posterior predictive moments with cheap
rank-one updates, and seeded GP sample paths realized on a lattice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import cho_solve, solve_triangular

__all__ = [
    "NumericalError",
    "KernelSpec",
    "OffsetKernel",
    "Dataset",
    "PosteriorMoments",
    "GPPosterior",
    "LatticeFunction",
    "se_kernel",
    "gram_matrix",
    "cholesky_jitter",
    "posterior_moments",
    "posterior_extend",
    "sample_gp_lattice",
    "MAX_LATTICE_POINTS",
]

MAX_LATTICE_POINTS = 20000

_JITTER_START = 1e-10
_JITTER_STOP = 1e-4


class NumericalError(np.linalg.LinAlgError):
    """A covariance matrix could not be factorized even with jitter."""


def _as_rows(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1)
    return x


@dataclass(frozen=True)
class KernelSpec:
    """Squared-exponential kernel restricted to a set of active coordinates.

    ``k(x, x') = sigma_s2 * exp(-sum_{i in active_dims} (x_i - x'_i)^2 / bandwidth^2)``

    Coordinates are 0-based. An empty ``active_dims`` gives the constant
    kernel ``sigma_s2``.
    """

    sigma_s2: float = 1.0
    bandwidth: float = 0.1
    active_dims: tuple[int, ...] = (0,)

    def __post_init__(self):
        if not self.sigma_s2 > 0:
            raise ValueError(f"sigma_s2 must be positive, got {self.sigma_s2}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        dims = tuple(int(i) for i in self.active_dims)
        if len(set(dims)) != len(dims):
            raise ValueError(f"active_dims has duplicates: {dims}")
        if any(i < 0 for i in dims):
            raise ValueError(f"active_dims must be nonnegative: {dims}")
        object.__setattr__(self, "active_dims", dims)

    def projected(self, a: int) -> KernelSpec:
        """Kernel of the one-dimensional diagonal projection with ``a`` active coords.

        Along the diagonal every active coordinate moves together, so the
        squared distance is multiplied by ``a``; equivalently the bandwidth
        shrinks by ``sqrt(a)``.
        """
        if a < 0:
            raise ValueError(f"active count must be >= 0, got {a}")
        if a == 0:
            return KernelSpec(self.sigma_s2, self.bandwidth, ())
        return KernelSpec(self.sigma_s2, self.bandwidth / np.sqrt(a), (0,))

    def _check(self, X: np.ndarray):
        if self.active_dims and X.shape[1] <= max(self.active_dims):
            raise ValueError(
                f"inputs have {X.shape[1]} coordinates but kernel uses "
                f"dimension {max(self.active_dims)}"
            )

    def __call__(self, X, Y) -> np.ndarray:
        X, Y = _as_rows(X), _as_rows(Y)
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        self._check(X)
        if not self.active_dims:
            return np.full((X.shape[0], Y.shape[0]), self.sigma_s2)
        idx = list(self.active_dims)
        A = X[:, idx] / self.bandwidth
        B = Y[:, idx] / self.bandwidth
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * A @ B.T
        )
        np.maximum(sq, 0.0, out=sq)
        return self.sigma_s2 * np.exp(-sq)

    def diag(self, X) -> np.ndarray:
        X = _as_rows(X)
        return np.full(X.shape[0], self.sigma_s2)

    @property
    def scale(self) -> float:
        return self.sigma_s2


@dataclass(frozen=True)
class OffsetKernel:
    """A base kernel plus an unknown constant offset with prior variance ``offset_var``.

    Integrating a Gaussian-distributed constant mean into the covariance is the
    standard way to drop the zero-mean assumption without changing the
    inference code.
    """

    base: KernelSpec
    offset_var: float = 0.0

    def __call__(self, X, Y) -> np.ndarray:
        return self.base(X, Y) + self.offset_var

    def diag(self, X) -> np.ndarray:
        return self.base.diag(X) + self.offset_var

    @property
    def scale(self) -> float:
        return self.base.sigma_s2 + self.offset_var


@dataclass
class Dataset:
    points: np.ndarray
    responses: np.ndarray
    noise_var: float

    def __post_init__(self):
        self.points = _as_rows(self.points) if len(self.points) else np.zeros((0, 1))
        self.responses = np.asarray(self.responses, dtype=float).ravel()
        if self.points.shape[0] != self.responses.shape[0]:
            raise ValueError(
                f"{self.points.shape[0]} points but {self.responses.shape[0]} responses"
            )
        if not self.noise_var > 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")


class PosteriorMoments(NamedTuple):
    """Predictive mean and variance of a noisy observation ``y`` (variance includes noise)."""

    mean: float
    variance: float


def se_kernel(x, x_prime, spec: KernelSpec) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x_prime = np.asarray(x_prime, dtype=float).ravel()
    if x.shape != x_prime.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {x_prime.shape[0]}")
    return float(spec(x[None, :], x_prime[None, :])[0, 0])


def gram_matrix(points, spec, noise_var: float) -> np.ndarray:
    """``K + noise_var * I`` over ``points``."""
    X = _as_rows(points)
    if X.shape[0] == 0:
        raise ValueError("gram_matrix needs at least one point")
    K = spec(X, X)
    K = 0.5 * (K + K.T)
    K[np.diag_indices_from(K)] += noise_var
    return K


def cholesky_jitter(K: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Lower Cholesky factor of ``K``, adding diagonal jitter if needed.

    Jitter starts at ``1e-10 * scale`` and doubles up to ``1e-4 * scale``.
    """
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        pass
    jitter = _JITTER_START * scale
    eye = np.eye(K.shape[0])
    while jitter <= _JITTER_STOP * scale:
        try:
            return np.linalg.cholesky(K + jitter * eye)
        except np.linalg.LinAlgError:
            jitter *= 2.0
    raise NumericalError(
        f"matrix of size {K.shape[0]} not positive definite with jitter up to "
        f"{_JITTER_STOP * scale:g}"
    )


def posterior_moments(data: Dataset, spec, x_query) -> PosteriorMoments:
    """Batch posterior predictive moments of ``y`` at a single query location."""
    xq = np.asarray(x_query, dtype=float).reshape(1, -1)
    prior = float(spec.diag(xq)[0]) + data.noise_var
    if data.responses.size == 0:
        return PosteriorMoments(0.0, prior)
    K = gram_matrix(data.points, spec, data.noise_var)
    L = cholesky_jitter(K, spec.scale)
    k = spec(data.points, xq)[:, 0]
    mean = float(k @ cho_solve((L, True), data.responses))
    var = prior - float(k @ cho_solve((L, True), k))
    return PosteriorMoments(mean, var)


class GPPosterior:
    """Incrementally updated GP posterior.

    Each :meth:`extend` appends one row to the Cholesky factor of
    ``K + noise_var * I`` in O(n^2). When ``candidates`` is given, the
    predictive moments on that fixed set are also maintained in O(n m) per
    update, which is what the sequential testers and GP-UCB query.

    Parameters
    ----------
    kernel : KernelSpec or OffsetKernel
        Covariance with ``__call__(X, Y)`` and ``diag(X)``.
    noise_var : float
        Observation noise variance.
    candidates : array_like, optional
        Fixed query set, shape ``(m,)`` or ``(m, p)``.
    max_points : int, optional
        Hard cap on the number of conditioning points.
    """

    def __init__(self, kernel, noise_var: float, candidates=None, max_points=None):
        if not noise_var > 0:
            raise ValueError(f"noise_var must be positive, got {noise_var}")
        self.kernel = kernel
        self.noise_var = float(noise_var)
        self.max_points = max_points
        self._n = 0
        self._cap = 16
        self._X = None
        self._L = np.zeros((self._cap, self._cap))
        self._alpha = np.zeros(self._cap)  # L^{-1} y
        self._y = np.zeros(self._cap)
        if candidates is not None:
            C = _as_rows(candidates)
            self.candidates = C
            self._V = np.zeros((self._cap, C.shape[0]))  # L^{-1} K(X, C)
            self._cmean = np.zeros(C.shape[0])
            self._cvar = kernel.diag(C) + self.noise_var
        else:
            self.candidates = None

    def __len__(self) -> int:
        return self._n

    @property
    def points(self) -> np.ndarray:
        return self._X[: self._n] if self._X is not None else np.zeros((0, 1))

    @property
    def responses(self) -> np.ndarray:
        return self._y[: self._n].copy()

    def _grow(self):
        cap = 2 * self._cap
        L = np.zeros((cap, cap))
        L[: self._n, : self._n] = self._L[: self._n, : self._n]
        self._L = L
        self._alpha = np.resize(self._alpha, cap)
        self._y = np.resize(self._y, cap)
        X = np.zeros((cap, self._X.shape[1]))
        X[: self._n] = self._X[: self._n]
        self._X = X
        if self.candidates is not None:
            V = np.zeros((cap, self._V.shape[1]))
            V[: self._n] = self._V[: self._n]
            self._V = V
        self._cap = cap

    def extend(self, x, y: float) -> GPPosterior:
        """Condition on one more observation ``y`` at ``x``; returns ``self``."""
        x = _as_rows(np.asarray(x, dtype=float).reshape(1, -1))
        if self.max_points is not None and self._n >= self.max_points:
            raise RuntimeError(f"posterior history cap of {self.max_points} points reached")
        if self._X is None:
            self._X = np.zeros((self._cap, x.shape[1]))
        elif x.shape[1] != self._X.shape[1]:
            raise ValueError(f"dimension mismatch: {x.shape[1]} vs {self._X.shape[1]}")
        if self._n == self._cap:
            self._grow()
        n = self._n
        kxx = float(self.kernel.diag(x)[0]) + self.noise_var
        if n:
            k = self.kernel(self._X[:n], x)[:, 0]
            l = solve_triangular(self._L[:n, :n], k, lower=True, check_finite=False)
            d2 = kxx - l @ l
        else:
            l = np.zeros(0)
            d2 = kxx
        scale = self.kernel.scale
        jitter = _JITTER_START * scale
        while d2 <= _JITTER_START * scale:
            if jitter > _JITTER_STOP * scale:
                raise NumericalError("rank-one update lost positive definiteness")
            d2 += jitter
            jitter *= 2.0
        d = np.sqrt(d2)
        self._X[n] = x[0]
        self._L[n, :n] = l
        self._L[n, n] = d
        self._y[n] = y
        a = (y - l @ self._alpha[:n]) / d
        self._alpha[n] = a
        if self.candidates is not None:
            kc = self.kernel(x, self.candidates)[0]
            v = (kc - l @ self._V[:n]) / d
            self._V[n] = v
            self._cmean += v * a
            self._cvar -= v * v
        self._n = n + 1
        return self

    def predict(self, Xq) -> tuple[np.ndarray, np.ndarray]:
        """Predictive mean and variance (including noise) at ``Xq``."""
        Xq = _as_rows(Xq)
        var = self.kernel.diag(Xq) + self.noise_var
        if self._n == 0:
            return np.zeros(Xq.shape[0]), var
        n = self._n
        Kq = self.kernel(self._X[:n], Xq)
        V = solve_triangular(self._L[:n, :n], Kq, lower=True, check_finite=False)
        return V.T @ self._alpha[:n], var - np.sum(V * V, axis=0)

    def moments(self, x) -> PosteriorMoments:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        m, v = self.predict(x)
        return PosteriorMoments(float(m[0]), float(v[0]))

    def candidate_moments(self) -> tuple[np.ndarray, np.ndarray]:
        if self.candidates is None:
            raise ValueError("posterior was built without a candidate set")
        return self._cmean, self._cvar


def posterior_extend(state: GPPosterior, new_point, new_response: float) -> GPPosterior:
    return state.extend(new_point, new_response)


@dataclass
class LatticeFunction:
    """A function tabulated on the regular grid ``linspace(-1, 1, resolution)^dims``.

    Off-grid values use multilinear interpolation, so the maximum over the
    cube is attained at a lattice node.
    """

    dims: int
    resolution: int
    values: np.ndarray
    _interp: RegularGridInterpolator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.resolution,) * self.dims:
            raise ValueError(
                f"values shape {self.values.shape} != {(self.resolution,) * self.dims}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("lattice values must be finite")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.resolution)

    def __call__(self, points) -> np.ndarray:
        if self._interp is None:
            self._interp = RegularGridInterpolator(
                (self.axis,) * self.dims, self.values, method="linear"
            )
        pts = np.clip(np.asarray(points, dtype=float).reshape(-1, self.dims), -1.0, 1.0)
        return self._interp(pts)

    def argmax(self) -> tuple[np.ndarray, float]:
        flat = int(np.argmax(self.values))
        idx = np.unravel_index(flat, self.values.shape)
        return self.axis[list(idx)], float(self.values[idx])


def sample_gp_lattice(
    spec: KernelSpec,
    dims: int,
    resolution: int,
    seed: int | np.random.Generator | None = None,
) -> LatticeFunction:
    """Draw a zero-mean GP sample on a ``resolution^dims`` lattice over ``[-1, 1]^dims``.

    Every lattice axis is treated as active. The squared-exponential Gram
    matrix on a product grid is a Kronecker product of one-dimensional
    factors, so the draw ``sqrt(sigma_s2) * (L ⊗ ... ⊗ L) z`` is exact and
    cheap.
    """
    if dims < 1:
        raise ValueError(f"dims must be >= 1, got {dims}")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    if resolution**dims > MAX_LATTICE_POINTS:
        raise ValueError(
            f"lattice of {resolution}^{dims} points exceeds the {MAX_LATTICE_POINTS} limit"
        )
    rng = np.random.default_rng(seed)
    t = np.linspace(-1.0, 1.0, resolution)
    unit = KernelSpec(1.0, spec.bandwidth, (0,))
    L = cholesky_jitter(unit(t, t), 1.0)
    values = rng.standard_normal((resolution,) * dims)
    for ax in range(dims):
        values = np.moveaxis(np.tensordot(L, values, axes=([1], [ax])), 0, ax)
    return LatticeFunction(dims, resolution, np.sqrt(spec.sigma_s2) * values)
