"""Young functions and Luxemburg norms of sampled functions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import OrliczDivergenceError

_SMALL_T = 1e-4


class YoungFunction(enum.Enum):
    LLOGL = "LlogL"  # (1+t) log(1+t) - t
    EXPL1 = "ExpL1"  # e^t - 1 - t
    EXPL2 = "ExpL2"  # e^{t^2} - 1 - t^2


def young_eval(F: YoungFunction, t):
    """Evaluate ``F`` at ``t >= 0`` (scalar or array).

    Below ``t = 1e-4`` a short Taylor series replaces the closed form to
    avoid cancellation.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise ValueError("Young functions are evaluated at nonnegative arguments only")
    small = t_arr < _SMALL_T
    with np.errstate(over="ignore", invalid="ignore"):
        if F is YoungFunction.LLOGL:
            big = (1.0 + t_arr) * np.log1p(t_arr) - t_arr
            series = t_arr**2 / 2 - t_arr**3 / 6 + t_arr**4 / 12
        elif F is YoungFunction.EXPL1:
            big = np.expm1(t_arr) - t_arr
            series = t_arr**2 / 2 + t_arr**3 / 6 + t_arr**4 / 24
        elif F is YoungFunction.EXPL2:
            s = t_arr**2
            big = np.expm1(s) - s
            series = s**2 / 2 + s**3 / 6
        else:  # pragma: no cover
            raise ValueError(f"unknown Young function {F!r}")
    out = np.where(small, series, big)
    out = np.where(np.isnan(out), np.inf, out)
    if np.ndim(t) == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples ``|f(x_i)|`` with quadrature weights.

    For matrix-valued functions the values are pointwise operator norms.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape:
            raise ValueError("values and weights must have the same length")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", np.abs(v))
        object.__setattr__(self, "weights", w)

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def scaled(self, c: float) -> "SampledFunction":
        return SampledFunction(self.values * abs(c), self.weights)

    def l1(self) -> float:
        return float(np.dot(self.weights, self.values))


def modular(f: SampledFunction, F: YoungFunction, lam: float) -> float:
    """Quadrature of ``F(|f|/lam)``."""
    return float(np.dot(f.weights, young_eval(F, f.values / lam)))


def orlicz_norm(
    f: SampledFunction,
    F: YoungFunction = YoungFunction.LLOGL,
    rtol: float = 1e-10,
) -> float:
    """Luxemburg norm ``inf{lam > 0 : int F(|f|/lam) <= 1}`` by bisection."""
    vmax = float(f.values.max(initial=0.0))
    if vmax == 0.0:
        return 0.0
    # homogeneity: work with f / max|f| so brackets stay far from under/overflow
    g = SampledFunction(f.values / vmax, f.weights)
    lo = 1e-6
    hi = g.measure + 1.0
    for _ in range(100):
        if modular(g, F, lo) > 1.0:
            break
        lo /= 1e3
        if lo < 1e-290:
            raise OrliczDivergenceError("could not find a lower bracket for the Orlicz norm")
    else:
        raise OrliczDivergenceError("could not find a lower bracket for the Orlicz norm")
    for _ in range(100):
        if modular(g, F, hi) <= 1.0:
            break
        hi *= 1e3
    else:
        raise OrliczDivergenceError("F-integral stays above 1 for every tested lambda")
    # geometric bisection: modular is decreasing in lam
    while hi - lo > rtol * hi:
        mid = math.sqrt(lo) * math.sqrt(hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if modular(g, F, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi * vmax


def holder_product_data(u: SampledFunction, v: SampledFunction) -> dict:
    """Ingredients of the L log L / exp(L) Hoelder inequality.

    Returns ``l1_product = ||uv||_1``, ``llogl_norm_u`` and ``expl1_norm_v``;
    the caller tracks the ratio ``l1_product / (llogl * expl1)``.
    """
    if u.weights.shape != v.weights.shape or not np.array_equal(u.weights, v.weights):
        raise ValueError("u and v must be sampled on the same quadrature")
    return {
        "l1_product": float(np.dot(u.weights, u.values * v.values)),
        "llogl_norm_u": orlicz_norm(u, YoungFunction.LLOGL),
        "expl1_norm_v": orlicz_norm(v, YoungFunction.EXPL1),
    }
