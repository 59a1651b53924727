"""Singular values, signed eigenvalue sequences and related sequence functionals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError

RESIDUAL_TOL = 1e-9
ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    mu: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    lambda_by_modulus: np.ndarray
    residual: float
    hermitian: bool = True


def _matrix(T) -> np.ndarray:
    return np.asarray(getattr(T, "matrix", T))


def _is_diagonal(a: np.ndarray) -> bool:
    off = a.copy()
    np.fill_diagonal(off, 0)
    return not np.any(off)


def _hermitian_flag(T, a: np.ndarray) -> bool:
    flag = getattr(T, "hermitian", None)
    if flag is not None:
        return bool(flag)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return bool(np.abs(a - a.conj().T).max(initial=0.0) <= 1e-12 * scale)


def _hermitian_eigvals(a: np.ndarray, with_residual: bool) -> tuple[np.ndarray, float]:
    if _is_diagonal(a):
        return np.sort(np.diag(a).real), 0.0
    try:
        if with_residual:
            lam, vec = sla.eigh(a)
            scale = max(float(np.abs(lam).max(initial=0.0)), np.finfo(float).tiny)
            res = float(np.abs(a @ vec - vec * lam).max()) / scale
        else:
            lam = sla.eigh(a, eigvals_only=True)
            res = 0.0
    except sla.LinAlgError as exc:
        raise ConvergenceError(f"Hermitian eigensolver failed: {exc}") from exc
    if res > RESIDUAL_TOL:
        raise ConvergenceError(f"eigendecomposition residual {res:.3e} exceeds {RESIDUAL_TOL}")
    return lam, res


def _zero_threshold(lam: np.ndarray) -> float:
    return ZERO_TOL * max(1, lam.size) * float(np.abs(lam).max(initial=0.0))


def _split_signed(lam: np.ndarray):
    tau = _zero_threshold(lam)
    plus = np.sort(lam[lam > tau])[::-1]
    minus = np.sort(-lam[lam < -tau])[::-1]
    return plus, minus


def singular_values(T) -> np.ndarray:
    """Descending singular values ``mu_j = lambda_j(|T|)``."""
    a = _matrix(T)
    if _hermitian_flag(T, a):
        lam, _ = _hermitian_eigvals(a, with_residual=False)
        return np.sort(np.abs(lam))[::-1]
    if _is_diagonal(a):
        return np.sort(np.abs(np.diag(a)))[::-1]
    try:
        return sla.svd(a, compute_uv=False)
    except sla.LinAlgError as exc:
        raise ConvergenceError(f"SVD failed: {exc}") from exc


def signed_eigenvalues(H) -> tuple[np.ndarray, np.ndarray]:
    """Positive and negative eigenvalue sequences ``(lambda^+_j, lambda^-_j)``.

    Both are descending and strictly positive; eigenvalues within rounding
    of zero belong to neither.
    """
    a = _matrix(H)
    if not _hermitian_flag(H, a):
        raise ValueError("signed eigenvalues need a Hermitian operator")
    lam, _ = _hermitian_eigvals(a, with_residual=False)
    return _split_signed(lam)


def eigenvalue_sequence(values) -> np.ndarray:
    """Order eigenvalues by decreasing modulus; ties by decreasing (Re, Im)."""
    v = np.asarray(values, dtype=complex)
    order = np.lexsort((-v.imag, -v.real, -np.abs(v)))
    return v[order]


def spectrum(T, with_residual: bool = True) -> SpectrumResult:
    """Full spectral record of a truncated operator or matrix."""
    a = _matrix(T)
    if _hermitian_flag(T, a):
        lam, res = _hermitian_eigvals(a, with_residual)
        plus, minus = _split_signed(lam)
        return SpectrumResult(
            mu=np.sort(np.abs(lam))[::-1],
            lambda_plus=plus,
            lambda_minus=minus,
            lambda_by_modulus=eigenvalue_sequence(lam.astype(complex)),
            residual=res,
        )
    try:
        if with_residual:
            U, mu, Vh = sla.svd(a)
            scale = max(float(mu[0]) if mu.size else 0.0, np.finfo(float).tiny)
            res = float(np.abs((U * mu) @ Vh - a).max()) / scale
        else:
            mu = sla.svd(a, compute_uv=False)
            res = 0.0
        if res > RESIDUAL_TOL:
            raise ConvergenceError(f"SVD residual {res:.3e} exceeds {RESIDUAL_TOL}")
        eig = sla.eigvals(a)
    except sla.LinAlgError as exc:
        raise ConvergenceError(f"decomposition failed: {exc}") from exc
    return SpectrumResult(
        mu=mu,
        lambda_plus=np.array([]),
        lambda_minus=np.array([]),
        lambda_by_modulus=eigenvalue_sequence(eig),
        residual=res,
        hermitian=False,
    )


def counting_function(seq, s: float) -> int:
    """``#{j : seq_j > s}`` for ``s > 0``."""
    if s <= 0:
        raise ValueError("counting functions are defined for s > 0")
    return int(np.count_nonzero(np.asarray(seq) > s))


def weak_quasinorm(mu, p: float = 1.0) -> tuple[float, int]:
    """``sup_j (j+1)^{1/p} mu_j`` over the available indices, and the attaining index."""
    if p <= 0:
        raise ValueError("p must be positive")
    mu = np.asarray(mu, dtype=float)
    if mu.size == 0:
        return 0.0, 0
    scaled = (np.arange(mu.size) + 1.0) ** (1.0 / p) * mu
    j = int(np.argmax(scaled))
    return float(scaled[j]), j


def cesaro_log_mean(seq, N: int) -> complex:
    """``(1/log N) * sum_{j<N} seq_j``."""
    seq = np.asarray(seq)
    if N < 2 or N > seq.size:
        raise ValueError(f"N must satisfy 2 <= N <= {seq.size}, got {N}")
    return complex(np.sum(seq[:N])) / math.log(N)


def tie_shuffle_spread(seq, N: int, trials: int = 8, seed: int = 0, rtol: float = 1e-12) -> float:
    """Spread of the log-mean over random reorderings of equal-modulus runs."""
    seq = np.asarray(seq, dtype=complex)
    rng = np.random.default_rng(seed)
    mod = np.abs(seq)
    # group boundaries where the modulus changes beyond rtol
    breaks = np.flatnonzero(np.abs(np.diff(mod)) > rtol * np.maximum(mod[:-1], 1e-300)) + 1
    groups = np.split(np.arange(seq.size), breaks)
    values = [cesaro_log_mean(seq, N)]
    for _ in range(trials):
        order = np.concatenate([rng.permutation(g) for g in groups])
        values.append(cesaro_log_mean(seq[order], N))
    values = np.asarray(values)
    return float(np.abs(values - values[0]).max())
