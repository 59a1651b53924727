"""Frequency lattices, sphere quadratures and uniform grids on the flat torus.

The torus is T^n = R^n / Z^n with the flat metric, so the Fourier mode
``e_k(x) = exp(2*pi*i k.x)`` is an eigenvector of the Laplacian with
eigenvalue ``|2*pi*k|^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_LATTICE_MODES = 2_000_000
MAX_GRID_POINTS = 4_000_000


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FrequencyLattice:
    """Box-truncated set of integer frequencies ``max_i |k_i| <= K``.

    ``modes`` is sorted by ascending ``|k|^2`` with lexicographic tie-break,
    so the zero mode always comes first. ``trusted_count`` is the number of
    modes inside the inscribed ball ``|k| <= K``; asymptotic estimators
    should only read spectral indices below it.
    """

    n: int
    K: int
    modes: np.ndarray
    trusted_count: int
    _index: dict = field(default=None, repr=False, compare=False)

    @property
    def count(self) -> int:
        return self.modes.shape[0]

    @property
    def norms_squared(self) -> np.ndarray:
        return np.sum(self.modes.astype(np.int64) ** 2, axis=1)

    def index_of(self, k) -> int:
        """Position of the integer vector ``k`` in the lattice ordering."""
        if self._index is None:
            object.__setattr__(
                self, "_index", {tuple(int(c) for c in m): i for i, m in enumerate(self.modes)}
            )
        return self._index[tuple(int(c) for c in k)]


def build_lattice(n: int, K: int, max_modes: int = MAX_LATTICE_MODES) -> FrequencyLattice:
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if K < 0:
        raise ValueError(f"cutoff must be >= 0, got {K}")
    count = (2 * K + 1) ** n
    if count > max_modes:
        raise ValueError(f"(2K+1)^n = {count} exceeds the mode cap {max_modes}")
    axis = np.arange(-K, K + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    modes = np.stack([g.ravel() for g in grids], axis=1)
    r2 = np.sum(modes**2, axis=1)
    # lexsort: last key is primary
    keys = tuple(modes[:, i] for i in range(n - 1, -1, -1)) + (r2,)
    order = np.lexsort(keys)
    modes = modes[order]
    return FrequencyLattice(n=n, K=K, modes=_frozen(modes), trusted_count=ball_count(n, K))


@lru_cache(maxsize=None)
def _count_below(n: int, bound: int) -> int:
    # #{k in Z^n : |k|^2 <= bound}
    if bound < 0:
        return 0
    if n == 0:
        return 1
    top = math.isqrt(bound)
    if n == 1:
        return 2 * top + 1
    total = _count_below(n - 1, bound)
    for i in range(1, top + 1):
        total += 2 * _count_below(n - 1, bound - i * i)
    return total


def ball_count(n: int, R: float, strict: bool = False) -> int:
    """Exact number of integer points with ``|k| <= R`` (``< R`` if strict)."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    r2 = R * R
    if strict:
        bound = math.ceil(r2) - 1
    else:
        bound = math.floor(r2)
    return _count_below(n, bound)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    n: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.tensordot(self.weights, values, axes=(0, 0)))


def sphere_quadrature(n: int, M: int) -> SphereQuadrature:
    """Equal-weight quadrature on the unit sphere of R^n, n in {1, 2, 3}.

    n=2 uses ``M`` equispaced angles (exact for trigonometric polynomials of
    degree < M). n=3 uses a Fibonacci spiral, whose error decays only like
    M^{-1/2}..M^{-1}.
    """
    if M < 1:
        raise ValueError("node budget must be >= 1")
    if n == 1:
        nodes = np.array([[1.0], [-1.0]])
        weights = np.array([1.0, 1.0])
    elif n == 2:
        theta = 2.0 * np.pi * np.arange(M) / M
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(M, 2.0 * np.pi / M)
    elif n == 3:
        i = np.arange(M) + 0.5
        z = 1.0 - 2.0 * i / M
        rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = np.pi * (3.0 - math.sqrt(5.0)) * np.arange(M)
        nodes = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
        nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
        weights = np.full(M, 4.0 * np.pi / M)
    else:
        raise ValueError(f"sphere quadrature supports n in {{1, 2, 3}}, got {n}")
    return SphereQuadrature(n=n, nodes=_frozen(nodes), weights=_frozen(weights))


@dataclass(frozen=True, eq=False)
class TorusGrid:
    n: int
    m: int
    nodes: np.ndarray
    weight: float

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.nodes.shape[0], self.weight)


def torus_grid(n: int, m: int, max_points: int = MAX_GRID_POINTS) -> TorusGrid:
    if m < 1:
        raise ValueError("points per axis must be >= 1")
    if m**n > max_points:
        raise ValueError(f"m^n = {m ** n} exceeds the grid cap {max_points}")
    axis = np.arange(m) / m
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    return TorusGrid(n=n, m=m, nodes=_frozen(nodes), weight=1.0 / m**n)
