"""Bound-state counting for ``h^n Delta^{n/2} + V`` on the flat torus."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sla

from .asymptotics import weyl_prefactor
from .lattice import FrequencyLattice, build_lattice, sphere_area
from .operators import MAX_DENSE_ROWS, borderline_term, build_schrodinger, kinetic_diagonal
from .orlicz import YoungFunction, orlicz_norm
from .potentials import (
    Potential,
    TrigPolynomial,
    default_resolution,
    integral_functionals,
    sample_norms,
    sample_values,
    sup_norm_estimate,
)

KINETIC_MARGIN = 8.0
ZERO_BAND = 1e-10


class SandwichViolation(AssertionError):
    """The matrix-level Birman-Schwinger sandwich failed; carries the inputs."""

    def __init__(self, message, D=None, V=None):
        super().__init__(message)
        self.D = D
        self.V = V


class MonotonicityViolation(AssertionError):
    def __init__(self, message, V1=None, V2=None):
        super().__init__(message)
        self.V1 = V1
        self.V2 = V2


def _hermitian_eigvals(H) -> np.ndarray:
    a = np.asarray(getattr(H, "matrix", H))
    if getattr(H, "hermitian", True) is False:
        raise ValueError("counting needs a Hermitian operator")
    off = a.copy()
    np.fill_diagonal(off, 0)
    if not np.any(off):
        return np.sort(np.diag(a).real)
    return sla.eigh(a, eigvals_only=True)


def _count(lam: np.ndarray) -> tuple[int, int]:
    tau = ZERO_BAND * (1.0 + float(np.abs(lam).max(initial=0.0)))
    return int(np.count_nonzero(lam < -tau)), int(np.count_nonzero(np.abs(lam) <= tau))


def count_negative(H) -> int:
    """Number of eigenvalues below ``-tau``, ``tau = 1e-10 (1 + max |lambda|)``."""
    return _count(_hermitian_eigvals(H))[0]


def count_negative_with_band(H) -> tuple[int, int]:
    """``(count, near_zero)`` where ``near_zero`` counts eigenvalues in ``[-tau, tau]``."""
    return _count(_hermitian_eigvals(H))


def glazman_dimension(H) -> int:
    """Largest negative-definite subspace found by greedy extension.

    Eigenvectors are offered in ascending eigenvalue order and kept whenever
    the compression of ``H`` to the enlarged span stays negative definite.
    """
    a = np.asarray(getattr(H, "matrix", H))
    lam, vec = sla.eigh(a)
    tau = ZERO_BAND * (1.0 + float(np.abs(lam).max(initial=0.0)))
    basis = np.zeros((a.shape[0], 0), dtype=vec.dtype)
    for v in vec.T:
        trial = np.column_stack([basis, v])
        q, _ = np.linalg.qr(trial)
        comp = q.conj().T @ a @ q
        if np.linalg.eigvalsh((comp + comp.conj().T) / 2).max() < -tau:
            basis = trial
    return basis.shape[1]


# ---------------------------------------------------------------------------
# Birman-Schwinger sandwich


@dataclass(frozen=True)
class SandwichRecord:
    lower: int
    middle: int
    upper_slack: int
    kernel_dim: int

    @property
    def upper(self) -> int:
        return self.lower + self.kernel_dim


def birman_schwinger_sandwich(D, V, check: bool = True) -> SandwichRecord:
    """Compare ``N^-(D + V)`` with ``N^-(D^{-1/2} V D^{-1/2}; 1)``.

    ``D`` is a nonnegative diagonal (vector or matrix); its inverse square
    root is taken as zero on the kernel. The sandwich
    ``lower <= middle <= lower + dim ker D`` holds exactly for matrices; a
    violation raises :class:`SandwichViolation`.
    """
    d = np.asarray(D)
    d = np.diag(d).real.copy() if d.ndim == 2 else d.real.astype(float)
    V = np.atleast_2d(np.asarray(V))
    if np.any(d < 0):
        raise ValueError("D must be nonnegative")
    if V.shape != (d.size, d.size):
        raise ValueError("D and V have incompatible sizes")
    ker = d <= 1e-14 * max(1.0, float(d.max(initial=0.0)))
    inv_sqrt = np.where(ker, 0.0, 1.0 / np.sqrt(np.where(ker, 1.0, d)))
    B = inv_sqrt[:, None] * V * inv_sqrt[None, :]
    lam_B = sla.eigh((B + B.conj().T) / 2, eigvals_only=True)
    # eigenvalues of B below -1, with a relative guard around -1
    guard = ZERO_BAND * (1.0 + float(np.abs(lam_B).max(initial=0.0)))
    lower = int(np.count_nonzero(lam_B < -1.0 - guard))
    middle = count_negative(np.diag(d) + (V + V.conj().T) / 2)
    kdim = int(ker.sum())
    rec = SandwichRecord(lower, middle, lower + kdim - middle, kdim)
    if check and not (lower <= middle <= lower + kdim):
        raise SandwichViolation(f"sandwich violated: {lower} <= {middle} <= {lower + kdim} fails", D=d, V=V)
    return rec


# ---------------------------------------------------------------------------
# semiclassical sweep


@dataclass(frozen=True)
class SemiclassicalRun:
    h: float
    K: int
    count: int
    scaled: float
    prediction: float
    adequacy: float
    near_zero: int = 0
    skipped: bool = False

    @property
    def relative_error(self) -> float:
        if self.skipped or self.prediction == 0:
            return math.nan
        return abs(self.scaled - self.prediction) / self.prediction

    def to_dict(self) -> dict:
        d = asdict(self)
        d["relative_error"] = self.relative_error
        return d


def adequate_cutoff(h: float, n: int, vnorm: float, margin: float = KINETIC_MARGIN) -> tuple[int, float]:
    """Smallest ``K`` with ``(2 pi h K)^n >= margin * vnorm``, and the achieved ratio."""
    if vnorm <= 0:
        return 1, math.inf
    K = max(1, math.ceil((margin * vnorm) ** (1.0 / n) / (2.0 * math.pi * h)))
    return K, (2.0 * math.pi * h * K) ** n / (margin * vnorm)


def semiclassical_prediction(V: Potential, m: int | None = None) -> float:
    """``(1/n) (2 pi)^{-n} |S^{n-1}| int tr V_-``."""
    f = integral_functionals(V, m=m)
    return weyl_prefactor(V.n) * sphere_area(V.n) * f["int_tr_minus"]


def _constant_part(V: Potential):
    if isinstance(V, TrigPolynomial) and set(V.coeffs) <= {(0,) * V.n}:
        c = V.coeffs.get((0,) * V.n)
        return np.zeros((V.r, V.r)) if c is None else np.asarray(c)
    return None


def _run(V: Potential, h: float, vnorm: float, prediction: float, max_rows: int) -> SemiclassicalRun:
    n = V.n
    K, adequacy = adequate_cutoff(h, n, vnorm)
    const = _constant_part(V)
    if const is not None:
        # decoupled channels: eigenvalues are kinetic + eigenvalues of V
        if (2 * K + 1) ** n > 50 * max_rows:
            return SemiclassicalRun(h, K, 0, math.nan, prediction, adequacy, skipped=True)
        kin = kinetic_diagonal(h, build_lattice(n, K))
        lam = (kin[:, None] + np.linalg.eigvalsh(const)[None, :]).ravel()
        count, band = _count(lam)
    else:
        if (2 * K + 1) ** n * V.r > max_rows:
            return SemiclassicalRun(h, K, 0, math.nan, prediction, adequacy, skipped=True)
        count, band = count_negative_with_band(build_schrodinger(h, V, build_lattice(n, K)))
    return SemiclassicalRun(h, K, count, h**n * count, prediction, adequacy, near_zero=band)


def semiclassical_sweep(V: Potential, h_list, threads: int = 1, max_rows: int = MAX_DENSE_ROWS) -> list[SemiclassicalRun]:
    """Scaled counts ``h^n N^-(h^n Delta^{n/2} + V)`` along decreasing ``h``.

    Each ``K`` satisfies the kinetic-margin rule of :func:`adequate_cutoff`;
    runs whose matrix would exceed ``max_rows`` are returned with
    ``skipped=True`` instead of being truncated further.
    """
    h_list = [float(h) for h in h_list]
    if any(h <= 0 for h in h_list):
        raise ValueError("h values must be positive")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h values must be strictly decreasing")
    if not V.hermitian:
        raise ValueError("semiclassical counting needs a Hermitian potential")
    vnorm = sup_norm_estimate(V)
    if not math.isfinite(vnorm):
        raise ValueError("the kinetic-margin rule needs a bounded potential")
    prediction = semiclassical_prediction(V)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda h: _run(V, h, vnorm, prediction, max_rows), h_list))
    return [_run(V, h, vnorm, prediction, max_rows) for h in h_list]


def monotonicity_check(V1: Potential, V2: Potential, h: float, K: int | None = None, m: int | None = None) -> dict:
    """Check ``V1 <= V2  =>  N^-(H_{V2}) <= N^-(H_{V1})`` at a shared cutoff.

    The ordering ``V2 - V1 >= 0`` is certified on the sampling rule first.
    """
    diff = V2 - V1
    vals, _ = sample_values(diff, m or default_resolution(diff))
    low = float(np.linalg.eigvalsh((vals + np.conj(np.swapaxes(vals, 1, 2))) / 2).min())
    scale = 1.0 + float(np.abs(vals).max())
    if low < -1e-10 * scale:
        raise ValueError(f"V1 <= V2 is not certified on the sampling grid (min eigenvalue {low:.3e})")
    if K is None:
        vnorm = max(sup_norm_estimate(V1), sup_norm_estimate(V2))
        K, _ = adequate_cutoff(h, V1.n, vnorm)
    lat = build_lattice(V1.n, K)
    n1 = count_negative(build_schrodinger(h, V1, lat))
    n2 = count_negative(build_schrodinger(h, V2, lat))
    if n2 > n1:
        raise MonotonicityViolation(f"N-(H_V2) = {n2} > N-(H_V1) = {n1}", V1=V1, V2=V2)
    return {"h": h, "K": K, "count_V1": n1, "count_V2": n2, "holds": True}


# ---------------------------------------------------------------------------
# CLR-type bound


@dataclass(frozen=True)
class CLRRecord:
    lhs: int
    orlicz: float
    ratio: float
    count: int
    borderline: int
    K: int
    trivial: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def clr_check(V: Potential, lat: FrequencyLattice, m: int | None = None) -> CLRRecord:
    """``N^-(Delta^{n/2} + V) - N^+(Pi_0 V_- Pi_0)`` against ``||V_-||_{L log L}``.

    When ``V_- = 0`` the record is flagged ``trivial`` and the ratio is 0
    (or ``inf`` if the left side were positive).
    """
    if not V.hermitian:
        raise ValueError("CLR check needs a Hermitian potential")
    count = count_negative(build_schrodinger(1.0, V, lat))
    border = borderline_term(V, m)
    lhs = count - border
    minus = sample_norms(V, m, part="minus")
    if not np.any(minus.values):
        return CLRRecord(lhs, 0.0, 0.0 if lhs <= 0 else math.inf, count, border, lat.K, trivial=True)
    orl = orlicz_norm(minus, YoungFunction.LLOGL)
    return CLRRecord(lhs, orl, lhs / orl, count, border, lat.K, trivial=lhs <= 0)
