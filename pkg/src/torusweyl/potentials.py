"""Matrix-valued potentials on the flat torus.

Four families are supported: trigonometric polynomials (exact Fourier
data), a radially singular bump ``s * a * d(x, x0)^(-beta) * M``, indicators
of axis-aligned boxes, and finite sums of those. Every potential can be
evaluated pointwise, integrated, and expanded in Fourier coefficients
``u_hat(k) = int u(x) exp(-2 pi i k.x) dx``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_laguerre, roots_legendre

from .errors import AccuracyError
from .lattice import TorusGrid, torus_grid
from .orlicz import SampledFunction

HERMITIAN_TOL = 1e-10
COEFF_RTOL = 1e-6


def _as_matrix(value, r: int | None = None) -> np.ndarray:
    a = np.asarray(value, dtype=complex)
    if a.ndim == 0:
        a = a * np.eye(r or 1, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix value must be square, got shape {a.shape}")
    return a


def _is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return bool(np.abs(a - a.conj().T).max(initial=0.0) <= tol * scale)


class Potential:
    """Base class. Subclasses set ``n`` and ``r``."""

    n: int
    r: int

    @property
    def hermitian(self) -> bool:
        raise NotImplementedError

    def evaluate(self, points) -> np.ndarray:
        """Values at ``points`` (shape (N, n)) as an (N, r, r) array."""
        raise NotImplementedError

    def evaluate_near(self, center, offsets) -> np.ndarray:
        """Evaluate at ``center + offsets``; singular families use the offsets directly."""
        return self.evaluate(np.mod(np.asarray(center, dtype=float) + offsets, 1.0))

    def coefficient_block(self, kmax: int) -> tuple[np.ndarray, float]:
        """Fourier coefficients for ``max|k_i| <= kmax``.

        Returns an array of shape ``(2kmax+1,)*n + (r, r)`` indexed by
        ``k + kmax`` and the estimated absolute accuracy.
        """
        raise NotImplementedError

    def scaled(self, c) -> "Potential":
        raise NotImplementedError

    def singular_centers(self) -> list[tuple[np.ndarray, float]]:
        return []

    def terms(self) -> list["Potential"]:
        return [self]

    def __add__(self, other):
        if not isinstance(other, Potential):
            return NotImplemented
        return PotentialSum(self.terms() + other.terms())

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, Potential):
            return NotImplemented
        return self.scaled(c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class TrigPolynomial(Potential):
    """Finite Fourier series ``sum_k c_k exp(2 pi i k.x)``."""

    n: int
    r: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for k, c in self.coeffs.items():
            k = tuple(int(v) for v in k)
            if len(k) != self.n:
                raise ValueError(f"frequency {k} has wrong dimension for n={self.n}")
            c = _as_matrix(c, self.r)
            if c.shape != (self.r, self.r):
                raise ValueError(f"coefficient at {k} has shape {c.shape}, expected rank {self.r}")
            clean[k] = clean.get(k, 0) + c
        object.__setattr__(self, "coeffs", clean)

    @property
    def degree(self) -> int:
        return max((max(abs(v) for v in k) for k in self.coeffs), default=0)

    @property
    def hermitian(self) -> bool:
        zero = np.zeros((self.r, self.r), dtype=complex)
        for k, c in self.coeffs.items():
            partner = self.coeffs.get(tuple(-v for v in k), zero)
            scale = max(1.0, float(np.abs(c).max()))
            if np.abs(partner - c.conj().T).max() > HERMITIAN_TOL * scale:
                return False
        return True

    def evaluate(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((x.shape[0], self.r, self.r), dtype=complex)
        for k, c in self.coeffs.items():
            phase = np.exp(2j * np.pi * (x @ np.asarray(k, dtype=float)))
            out += phase[:, None, None] * c[None]
        return out

    def coefficient_block(self, kmax: int):
        table = np.zeros((2 * kmax + 1,) * self.n + (self.r, self.r), dtype=complex)
        for k, c in self.coeffs.items():
            if max(abs(v) for v in k) <= kmax:
                table[tuple(v + kmax for v in k)] += c
        return table, 0.0

    def scaled(self, c):
        return TrigPolynomial(self.n, self.r, {k: c * v for k, v in self.coeffs.items()})


def constant(n: int, value, r: int | None = None) -> TrigPolynomial:
    m = _as_matrix(value, r)
    return TrigPolynomial(n, m.shape[0], {(0,) * n: m})


def cosine(n: int, axis: int = 0, freq: int = 1, amplitude=1.0, offset=0.0, r: int = 1) -> TrigPolynomial:
    """``offset + amplitude * cos(2 pi freq x_axis)`` (scalar or matrix amplitudes)."""
    k = [0] * n
    k[axis] = freq
    amp = _as_matrix(amplitude, r)
    coeffs = {tuple(k): amp / 2, tuple(-v for v in k): amp.conj().T / 2}
    off = _as_matrix(offset, amp.shape[0])
    if np.any(off != 0):
        coeffs[(0,) * n] = off
    return TrigPolynomial(n, amp.shape[0], coeffs)


def random_hermitian_trig(n: int, r: int, degree: int, seed: int, scale: float = 1.0) -> TrigPolynomial:
    """Reproducible random Hermitian trigonometric polynomial."""
    rng = np.random.default_rng(seed)
    coeffs = {}
    axis = range(-degree, degree + 1)
    for k in itertools.product(axis, repeat=n):
        if k in coeffs:
            continue
        neg = tuple(-v for v in k)
        c = (rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))) * scale / (1 + sum(v * v for v in k))
        if k == neg:
            c = (c + c.conj().T) / 2
            coeffs[k] = c
        else:
            coeffs[k] = c
            coeffs[neg] = c.conj().T
    return TrigPolynomial(n, r, coeffs)


def torus_distance(points, center) -> np.ndarray:
    """Flat quotient distance on R^n / Z^n (per-axis minimal image)."""
    d = np.mod(np.atleast_2d(points) - np.asarray(center, dtype=float), 1.0)
    d = np.minimum(d, 1.0 - d)
    return np.sqrt(np.sum(d * d, axis=1))


@dataclass(frozen=True, eq=False)
class RadialSingular(Potential):
    """``sign * amplitude * d(x, center)^(-beta) * matrix`` with ``0 < beta < n``."""

    n: int
    center: tuple
    beta: float
    amplitude: float = 1.0
    sign: int = 1
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if len(self.center) != self.n:
            raise ValueError("center has wrong dimension")
        if not 0.0 < self.beta < self.n:
            raise ValueError(f"need 0 < beta < n for integrability, got beta={self.beta}, n={self.n}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative; use sign for orientation")
        object.__setattr__(self, "center", tuple(float(c) % 1.0 for c in self.center))
        m = np.eye(1, dtype=complex) if self.matrix is None else _as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)

    @property
    def r(self) -> int:
        return self.matrix.shape[0]

    @property
    def hermitian(self) -> bool:
        return _is_hermitian(self.matrix)

    @property
    def weight(self) -> np.ndarray:
        return self.sign * self.amplitude * self.matrix

    def evaluate(self, points) -> np.ndarray:
        d = torus_distance(points, self.center)
        with np.errstate(divide="ignore"):
            radial = d ** (-self.beta)
        return radial[:, None, None] * self.weight[None]

    def evaluate_near(self, center, offsets) -> np.ndarray:
        if np.abs(torus_distance([center], self.center)).max() > 0:
            return super().evaluate_near(center, offsets)
        # offsets lie in the fundamental cell, so their norm is the torus distance
        with np.errstate(divide="ignore"):
            radial = np.linalg.norm(np.atleast_2d(offsets), axis=1) ** (-self.beta)
        return radial[:, None, None] * self.weight[None]

    def coefficient_block(self, kmax: int):
        g, acc = radial_cos_transform(self.n, self.beta, kmax)
        axis = np.arange(-kmax, kmax + 1)
        phase = np.ones((2 * kmax + 1,) * self.n, dtype=complex)
        for i, c in enumerate(self.center):
            shape = [1] * self.n
            shape[i] = -1
            phase = phase * np.exp(-2j * np.pi * axis * c).reshape(shape)
        table = (g * phase)[..., None, None] * self.weight
        return table, acc * float(np.abs(self.weight).max())

    def scaled(self, c):
        c = complex(c)
        if c.imag != 0:
            return RadialSingular(self.n, self.center, self.beta, self.amplitude, self.sign, self.matrix * c)
        c = c.real
        return RadialSingular(self.n, self.center, self.beta, self.amplitude * abs(c),
                              self.sign * (1 if c >= 0 else -1), self.matrix)

    def singular_centers(self):
        return [(np.asarray(self.center), self.beta)]


@dataclass(frozen=True, eq=False)
class Indicator(Potential):
    """Matrix ``value`` on the box ``lower <= x < upper`` (per-axis, wrapping allowed)."""

    n: int
    lower: tuple
    upper: tuple
    value: np.ndarray

    def __post_init__(self):
        if len(self.lower) != self.n or len(self.upper) != self.n:
            raise ValueError("box corners have wrong dimension")
        for a, b in zip(self.lower, self.upper):
            if not 0.0 < b - a <= 1.0:
                raise ValueError(f"box side [{a}, {b}) must have length in (0, 1]")
        object.__setattr__(self, "value", _as_matrix(self.value))

    @property
    def r(self) -> int:
        return self.value.shape[0]

    @property
    def hermitian(self) -> bool:
        return _is_hermitian(self.value)

    def evaluate(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.ones(x.shape[0], dtype=bool)
        for i, (a, b) in enumerate(zip(self.lower, self.upper)):
            inside &= np.mod(x[:, i] - a, 1.0) < (b - a)
        return inside[:, None, None] * self.value[None]

    def coefficient_block(self, kmax: int):
        axis = np.arange(-kmax, kmax + 1)
        table = np.ones((2 * kmax + 1,) * self.n, dtype=complex)
        for i, (a, b) in enumerate(zip(self.lower, self.upper)):
            with np.errstate(divide="ignore", invalid="ignore"):
                f = (np.exp(-2j * np.pi * axis * b) - np.exp(-2j * np.pi * axis * a)) / (-2j * np.pi * axis)
            f[kmax] = b - a
            shape = [1] * self.n
            shape[i] = -1
            table = table * f.reshape(shape)
        return table[..., None, None] * self.value, 0.0

    def scaled(self, c):
        return Indicator(self.n, self.lower, self.upper, self.value * c)


@dataclass(frozen=True, eq=False)
class PotentialSum(Potential):
    parts: list

    def __post_init__(self):
        if not self.parts:
            raise ValueError("empty potential sum")
        ns = {p.n for p in self.parts}
        rs = {p.r for p in self.parts}
        if len(ns) != 1 or len(rs) != 1:
            raise ValueError("all terms of a sum must share n and r")
        object.__setattr__(self, "parts", list(self.parts))

    @property
    def n(self) -> int:
        return self.parts[0].n

    @property
    def r(self) -> int:
        return self.parts[0].r

    @property
    def hermitian(self) -> bool:
        return all(p.hermitian for p in self.parts)

    def terms(self):
        return list(self.parts)

    def evaluate(self, points) -> np.ndarray:
        return sum(p.evaluate(points) for p in self.parts)

    def evaluate_near(self, center, offsets) -> np.ndarray:
        return sum(p.evaluate_near(center, offsets) for p in self.parts)

    def coefficient_block(self, kmax: int):
        total, acc = self.parts[0].coefficient_block(kmax)
        total = total.copy()
        for p in self.parts[1:]:
            t, a = p.coefficient_block(kmax)
            total += t
            acc += a
        return total, acc

    def scaled(self, c):
        return PotentialSum([p.scaled(c) for p in self.parts])

    def singular_centers(self):
        return [c for p in self.parts for c in p.singular_centers()]


# ---------------------------------------------------------------------------
# singular quadrature
#
# The cell [-1/2, 1/2]^n around the singular point splits into 2^n octants,
# each octant into n pyramids with apex at the origin. On the pyramid whose
# largest coordinate is y_a we write y_a = s/2 and y_i = s t_i / 2, so that
# dy = 2^{-n} s^{n-1} ds dt and |y|^{-beta} = (s/2)^{-beta} (1+|t|^2)^{-beta/2}.
# Gauss-Jacobi in s absorbs the weight s^{n-1-beta} exactly.


@lru_cache(maxsize=64)
def _radial_rule(m: int, exponent: float):
    # nodes/weights on [0, 1] for weight s^exponent
    x, w = roots_jacobi(m, 0.0, exponent)
    return (x + 1.0) / 2.0, w / 2.0 ** (exponent + 1.0)


@lru_cache(maxsize=64)
def _unit_rule(m: int):
    x, w = roots_legendre(m)
    return (x + 1.0) / 2.0, w / 2.0


def _octant_cos_table(n: int, beta: float, kmax: int, m: int) -> np.ndarray:
    s, ws = _radial_rule(m, n - 1.0 - beta)
    k = np.arange(kmax + 1, dtype=float)
    A = np.cos(np.pi * np.outer(k, s)) * ws  # (k, s)
    pref = 0.5 ** (n - beta)
    if n == 1:
        return pref * A.sum(axis=1)
    t, wt = _unit_rule(m)
    if n == 2:
        wt_beta = wt * (1.0 + t * t) ** (-beta / 2.0)
        P = np.zeros((kmax + 1, kmax + 1))
        chunk = max(1, 4_000_000 // (m * (kmax + 1)))
        for lo in range(0, m, chunk):
            sl = slice(lo, lo + chunk)
            B = np.cos(np.pi * k[:, None, None] * s[None, sl, None] * t[None, None, :])
            inner = B @ wt_beta  # (k, s_chunk)
            P += A[:, sl] @ inner.T
        return pref * (P + P.T)
    if n == 3:
        W = np.outer(wt, wt) * (1.0 + t[:, None] ** 2 + t[None, :] ** 2) ** (-beta / 2.0)
        P = np.zeros((kmax + 1,) * 3)
        for j in range(m):
            X = np.cos(np.pi * np.outer(k, s[j] * t))  # (k, t)
            Y = X @ W @ X.T
            P += A[:, j][:, None, None] * Y[None]
        # pyramids a=0,1,2; P is symmetric in its last two indices
        return pref * (P + P.transpose(1, 0, 2) + P.transpose(1, 2, 0))
    raise ValueError(f"radial singular potentials support n in {{1, 2, 3}}, got {n}")


def _mirror(table: np.ndarray, n: int, kmax: int) -> np.ndarray:
    # extend an even function from k >= 0 to -kmax..kmax on every axis
    idx = np.abs(np.arange(-kmax, kmax + 1))
    return table[np.ix_(*([idx] * n))]


_MAX_M = {1: 4096, 2: 1024, 3: 256}


@lru_cache(maxsize=32)
def radial_cos_transform(n: int, beta: float, kmax: int, rtol: float = COEFF_RTOL):
    """``g(k) = int_{[-1/2,1/2]^n} |y|^{-beta} exp(-2 pi i k.y) dy`` for ``|k_i| <= kmax``.

    Nested refinement: the rule is doubled until two levels agree to
    ``rtol`` relative to ``max|g|``. Returns ``(g, abs_gap)``.
    """
    m = max(32, 1 << math.ceil(math.log2(kmax + 16)))
    prev = 2.0**n * _octant_cos_table(n, beta, kmax, m)
    while True:
        m *= 2
        cur = 2.0**n * _octant_cos_table(n, beta, kmax, m)
        gap = float(np.abs(cur - prev).max())
        if gap <= rtol * float(np.abs(cur).max()):
            return _mirror(cur, n, kmax), gap
        if m >= _MAX_M[n]:
            raise AccuracyError(
                f"radial coefficients (n={n}, beta={beta}, kmax={kmax}) did not converge: gap {gap:.3e}",
                coarse=prev, fine=cur,
            )
        prev = cur


_INNER_RADIUS = 2.0**-6


def _graded_radial_rule(m: int, n: int, beta: float):
    """Nodes on [0, 1] and weights for the measure ``s^{n-1} ds``.

    Dyadic Gauss-Legendre shells cover ``[s0, 1]``. On ``[0, s0]`` the map
    ``s = s0 exp(-z / (n - beta))`` turns ``s^{-beta} s^{n-1} ds`` into
    ``e^{-z} dz`` up to a constant, and Gauss-Laguerre in ``z`` then also
    handles logarithmic factors such as those produced by Young functions.
    """
    q = max(8, m // 2)
    levels = int(round(-math.log2(_INNER_RADIUS)))
    x, w = _unit_rule(q)
    nodes, weights = [], []
    for j in range(levels):
        a, b = 2.0 ** -(j + 1), 2.0**-j
        sj = a + (b - a) * x
        nodes.append(sj)
        weights.append((b - a) * w * sj ** (n - 1))
    rate = n - beta
    z, wz = roots_laguerre(max(8, m // 2))
    log_s = math.log(_INNER_RADIUS) - z / rate
    # weight: s0^n / rate * w_z * e^{z} * e^{-n z / rate}, assembled in logs
    log_w = np.log(wz) + z - n * z / rate
    # nodes so deep that s^{-beta} would overflow carry negligible weight
    keep = log_s > max(-250.0 * math.log(10.0) / max(beta, 1.0), -690.0)
    nodes.append(np.exp(log_s[keep]))
    weights.append(_INNER_RADIUS**n / rate * np.exp(log_w[keep]))
    return np.concatenate(nodes), np.concatenate(weights)


def singular_offsets(n: int, beta: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets in ``[-1/2, 1/2]^n`` and dy-weights graded toward the origin.

    Weights integrate smooth functions, ``|y|^(-beta)`` type singularities
    and their logarithmic modulations; they sum to 1 up to quadrature error.
    """
    s, ws = _graded_radial_rule(m, n, beta)
    if n > 1:
        t, wt = _unit_rule(m)
        tg = np.meshgrid(*([t] * (n - 1)), indexing="ij")
        tw = np.ones_like(tg[0])
        for i, w_axis in enumerate(np.meshgrid(*([wt] * (n - 1)), indexing="ij")):
            tw = tw * w_axis
        tpts = np.stack([g.ravel() for g in tg], axis=1)  # (m^{n-1}, n-1)
        tw = tw.ravel()
    else:
        tpts = np.zeros((1, 0))
        tw = np.ones(1)
    # pyramid with apex at origin, largest coordinate first
    base = np.concatenate([np.ones((tpts.shape[0], 1)), tpts], axis=1)  # (T, n)
    pts = 0.5 * s[:, None, None] * base[None, :, :]  # (S, T, n)
    wts = 0.5**n * ws[:, None] * tw[None, :]
    pts = pts.reshape(-1, n)
    wts = wts.ravel()
    all_pts, all_w = [], []
    for a in range(n):
        perm = list(range(1, a + 1)) + [0] + list(range(a + 1, n))
        p = pts[:, perm]
        for signs in itertools.product((1.0, -1.0), repeat=n):
            all_pts.append(p * np.asarray(signs))
            all_w.append(wts)
    return np.concatenate(all_pts), np.concatenate(all_w)


def singular_quadrature(n: int, center, beta: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Torus points ``center + offsets`` with the weights of :func:`singular_offsets`.

    Offsets below float resolution collapse onto ``center``; use
    :func:`sample_values` to evaluate potentials on this rule.
    """
    offsets, w = singular_offsets(n, beta, m)
    return np.mod(offsets + np.asarray(center, dtype=float), 1.0), w


def _singular_rule(u: Potential):
    centers = u.singular_centers()
    if not centers:
        return None
    first = centers[0][0]
    if any(not np.allclose(c, first) for c, _ in centers[1:]):
        raise ValueError("potentials with several distinct singular centers are not supported")
    return first, max(b for _, b in centers)


def sample_values(u: Potential, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Values ``u(x_i)`` (shape (N, r, r)) and weights of the rule adapted to ``u``."""
    rule = _singular_rule(u)
    if rule is None:
        g = torus_grid(u.n, m)
        return u.evaluate(g.nodes), g.weights
    center, beta = rule
    offsets, w = singular_offsets(u.n, beta, m)
    return u.evaluate_near(center, offsets), w


def quadrature(u: Potential, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature rule adapted to ``u`` at resolution ``m``.

    Smooth and indicator families use the uniform ``m^n`` torus grid; a
    potential with a singular term uses the graded rule around its center.
    """
    rule = _singular_rule(u)
    if rule is None:
        g = torus_grid(u.n, m)
        return np.asarray(g.nodes), g.weights
    return singular_quadrature(u.n, rule[0], rule[1], m)


def default_resolution(u: Potential) -> int:
    if u.singular_centers():
        return {1: 512, 2: 96, 3: 24}[u.n]
    return {1: 4096, 2: 256, 3: 48}.get(u.n, 8)


def fourier_coefficient(u: Potential, k) -> np.ndarray:
    k = tuple(int(v) for v in k)
    if len(k) != u.n:
        raise ValueError("frequency has wrong dimension")
    kmax = max((abs(v) for v in k), default=0)
    table, _ = u.coefficient_block(kmax)
    return table[tuple(v + kmax for v in k)]


@dataclass(frozen=True, eq=False)
class FourierCoefficientTable:
    """Coefficients ``u_hat(d)`` for every difference ``d = k' - k`` of a lattice."""

    lattice: object
    blocks: np.ndarray  # (4K+1,)*n + (r, r), indexed by d + 2K
    accuracy: float

    @property
    def offset(self) -> int:
        return 2 * self.lattice.K

    def __getitem__(self, d) -> np.ndarray:
        return self.blocks[tuple(int(v) + self.offset for v in d)]


def coefficient_table(u: Potential, lattice) -> FourierCoefficientTable:
    if lattice.n != u.n:
        raise ValueError("lattice and potential dimensions differ")
    blocks, acc = u.coefficient_block(2 * lattice.K)
    return FourierCoefficientTable(lattice=lattice, blocks=blocks, accuracy=acc)


def _check_points(u: Potential, x) -> np.ndarray:
    return _check_values(u, u.evaluate(np.atleast_2d(np.asarray(x, dtype=float))))


def _check_values(u: Potential, vals: np.ndarray) -> np.ndarray:
    herm = np.abs(vals - np.conj(np.swapaxes(vals, -1, -2))).max(initial=0.0)
    finite = vals[np.isfinite(vals)]
    scale = max(1.0, float(np.abs(finite).max(initial=0.0)))
    if not u.hermitian or herm > HERMITIAN_TOL * scale:
        raise ValueError("positive/negative parts need a Hermitian potential")
    return vals


def _parts(vals: np.ndarray):
    lam, vec = np.linalg.eigh(vals)
    plus = (vec * np.clip(lam, 0, None)[..., None, :]) @ np.conj(np.swapaxes(vec, -1, -2))
    minus = (vec * np.clip(-lam, 0, None)[..., None, :]) @ np.conj(np.swapaxes(vec, -1, -2))
    return plus, minus


def pointwise_parts(u: Potential, x) -> dict:
    """Positive part, negative part and modulus of ``u(x)``.

    ``x`` may be a single point or an (N, n) array; the result arrays then
    carry a leading point axis.
    """
    single = np.ndim(x) == 1
    vals = _check_points(u, x)
    plus, minus = _parts(vals)
    out = {"plus": plus, "minus": minus, "abs": plus + minus}
    if single:
        out = {k: v[0] for k, v in out.items()}
    return out


def _functionals_at(u: Potential, m: int) -> np.ndarray:
    vals, w = sample_values(u, m)
    tr = np.einsum("nii->n", vals)
    if u.hermitian:
        lam = np.linalg.eigvalsh(vals)
        plus = np.clip(lam, 0, None).sum(axis=1)
        minus = np.clip(-lam, 0, None).sum(axis=1)
        absval = plus + minus
    else:
        absval = np.linalg.svd(vals, compute_uv=False).sum(axis=1)
        plus = minus = np.full(len(w), np.nan)
    return np.array([w @ tr, w @ plus, w @ minus, w @ absval])


def integral_functionals(u: Potential, grid: TorusGrid | None = None, m: int | None = None) -> dict:
    """Integrals of ``tr u``, ``tr u_+``, ``tr u_-`` and ``tr |u|`` over the torus.

    Uses the quadrature adapted to ``u`` at resolution ``m`` (or the grid's
    resolution) and again at ``2m``; ``delta`` is the largest change.
    """
    if m is None:
        m = grid.m if grid is not None else default_resolution(u)
    coarse = _functionals_at(u, m)
    fine = _functionals_at(u, 2 * m)
    delta = float(np.nanmax(np.abs(fine - coarse)))
    return {
        "int_tr": complex(fine[0]),
        "int_tr_plus": float(fine[1].real),
        "int_tr_minus": float(fine[2].real),
        "int_tr_abs": float(fine[3].real),
        "delta": delta,
    }


def integrate_negative_part(u: Potential, m: int | None = None) -> tuple[np.ndarray, float]:
    """Matrix ``int u_-(x) dx`` with a two-level refinement gap."""
    m = m or default_resolution(u)
    results = []
    for mm in (m, 2 * m):
        vals, w = sample_values(u, mm)
        _, minus = _parts(_check_values(u, vals))
        results.append(np.einsum("n,nij->ij", w, minus))
    return results[1], float(np.abs(results[1] - results[0]).max())


def sample_norms(u: Potential, m: int | None = None, part: str | None = None) -> SampledFunction:
    """Pointwise operator norms of ``u`` (or of ``u_+`` / ``u_-``) on its quadrature."""
    m = m or default_resolution(u)
    vals, w = sample_values(u, m)
    if part is None:
        if vals.shape[-1] == 1:
            norms = np.abs(vals[:, 0, 0])
        else:
            norms = np.linalg.norm(vals, ord=2, axis=(1, 2))
    else:
        lam = np.linalg.eigvalsh(_check_values(u, vals))
        if part == "minus":
            norms = np.clip(-lam.min(axis=1), 0, None)
        elif part == "plus":
            norms = np.clip(lam.max(axis=1), 0, None)
        else:
            raise ValueError(f"unknown part {part!r}")
    return SampledFunction(norms, w)


def sup_norm_estimate(u: Potential, m: int | None = None) -> float:
    """Largest sampled operator norm (infinite for singular families)."""
    if u.singular_centers():
        return math.inf
    return float(sample_norms(u, m).values.max())
