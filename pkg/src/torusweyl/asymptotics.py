"""Weyl-limit estimators, cosphere predictions and NC-integral diagnostics.

Predicted Weyl constants are phase-space integrals over the cosphere
bundle ``S*T^n = T^n x S^{n-1}`` with the normalisation
``(1/n) (2 pi)^{-n}``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import AccuracyError
from .lattice import FrequencyLattice, SphereQuadrature, TorusGrid, sphere_area, sphere_quadrature
from .operators import MultiplierSymbol, build_qup
from .orlicz import YoungFunction, orlicz_norm
from .potentials import Potential, default_resolution, integral_functionals, sample_norms, sample_values
from .spectral import SpectrumResult, cesaro_log_mean, singular_values, tie_shuffle_spread, weak_quasinorm

MIN_TRUSTED = 64
PREDICTION_RTOL = 1e-3


def weyl_prefactor(n: int) -> float:
    return 1.0 / (n * (2.0 * math.pi) ** n)


# ---------------------------------------------------------------------------
# predictions


def _cosphere_terms(Q: MultiplierSymbol, u: Potential, P: MultiplierSymbol, m: int, sphere: SphereQuadrature):
    """Integrals of tr|.|, tr(.)_+, tr(.)_- and tr(.) of sigma_Q u sigma_P."""
    if Q.kind != "angular" and P.kind != "angular":
        # principal symbols are constant on the sphere
        nodes = sphere.nodes[:1]
        weights = np.array([float(np.sum(sphere.weights))])
    else:
        nodes, weights = sphere.nodes, sphere.weights
    qs = Q.principal(nodes)
    ps = P.principal(nodes)
    vals, w = sample_values(u, m)
    hermitian = Q.same_as(P.adjoint()) and u.hermitian
    total = np.zeros(4)
    for qa, pa, wa in zip(qs, ps, weights):
        prod = np.einsum("ab,nbc,cd->nad", qa, vals, pa)
        tr = np.einsum("naa->n", prod).real
        if hermitian:
            lam = np.linalg.eigvalsh((prod + np.conj(np.swapaxes(prod, 1, 2))) / 2)
            plus = np.clip(lam, 0, None).sum(axis=1)
            minus = np.clip(-lam, 0, None).sum(axis=1)
            absval = plus + minus
        else:
            absval = np.linalg.svd(prod, compute_uv=False).sum(axis=1)
            plus = minus = np.full(len(w), np.nan)
        total += wa * np.array([w @ absval, w @ plus, w @ minus, w @ tr])
    return total


def predict_cosphere_integral(
    Q: MultiplierSymbol,
    u: Potential,
    P: MultiplierSymbol,
    sphere: SphereQuadrature | None = None,
    grid: TorusGrid | None = None,
    rtol: float = PREDICTION_RTOL,
) -> dict:
    """Predicted Weyl constants of ``Q u P`` from its principal symbol.

    Returns ``abs``, ``plus``, ``minus`` and ``signed_tr`` together with
    ``delta``, the change when both quadratures are doubled. ``plus`` and
    ``minus`` are NaN unless ``Q = P^*`` and ``u`` is Hermitian.

    Raises
    ------
    AccuracyError
        If ``delta`` exceeds ``rtol`` relative to the largest value.
    """
    n = u.n
    if not (Q.n == P.n == n):
        raise ValueError("dimension mismatch")
    if not (math.isclose(Q.order, -n / 2) and math.isclose(P.order, -n / 2)):
        raise ValueError("Weyl predictions need symbols of order -n/2")
    sphere = sphere or sphere_quadrature(n, 64)
    m = grid.m if grid is not None else default_resolution(u)
    M = sphere.nodes.shape[0]
    coarse = _cosphere_terms(Q, u, P, m, sphere)
    fine_sphere = sphere_quadrature(n, 2 * M) if n > 1 else sphere
    fine = _cosphere_terms(Q, u, P, 2 * m, fine_sphere)
    c = weyl_prefactor(n)
    coarse, fine = c * coarse, c * fine
    delta = float(np.nanmax(np.abs(fine - coarse)))
    scale = float(np.nanmax(np.abs(fine)))
    if delta > rtol * scale + 1e-14:
        raise AccuracyError("cosphere quadrature not converged", coarse=coarse.tolist(), fine=fine.tolist())
    return {"abs": fine[0], "plus": fine[1], "minus": fine[2], "signed_tr": fine[3], "delta": delta}


def candidate_constants(u: Potential, m: int | None = None) -> dict:
    """The two competing normalisations of ``lim j mu_j`` for ``|D|^{-n/2} u |D|^{-n/2}``.

    ``cosphere`` integrates over the unit sphere as well (factor
    ``|S^{n-1}|``); ``volume_only`` integrates over the torus alone.
    """
    f = integral_functionals(u, m=m)
    base = weyl_prefactor(u.n) * f["int_tr_abs"]
    return {"cosphere": base * sphere_area(u.n), "volume_only": base}


def noncommutative_residue(sigma: MultiplierSymbol, sphere: SphereQuadrature) -> float:
    """``(2 pi)^{-n} int_{S*T^n} tr sigma`` for a symbol of order ``-n``."""
    n = sigma.n
    if not math.isclose(sigma.order, -n):
        raise ValueError(f"residue needs order -n = {-n}, got {sigma.order}")
    if sphere.n != n:
        raise ValueError("sphere dimension mismatch")
    tr = np.einsum("naa->n", sigma.principal(sphere.nodes)).real
    return float(sphere.weights @ tr) / (2.0 * math.pi) ** n


# ---------------------------------------------------------------------------
# finite-size estimators


@dataclass(frozen=True)
class WeylReport:
    estimated_Lambda_abs: float
    estimated_Lambda_plus: float
    estimated_Lambda_minus: float
    predicted_abs: float
    predicted_plus: float
    predicted_minus: float
    window: tuple[int, int]
    uncertainty: float
    quadrature_delta: float
    uncertainty_plus: float
    uncertainty_minus: float
    slope: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def weyl_window(trusted_count: int) -> tuple[int, int]:
    if trusted_count < MIN_TRUSTED:
        raise ValueError(f"trusted count {trusted_count} < {MIN_TRUSTED}: window too small")
    return -(-trusted_count // 4), trusted_count // 2


def _padded(seq, length: int) -> np.ndarray:
    seq = np.asarray(seq, dtype=float)
    out = np.zeros(length)
    out[: min(length, seq.size)] = seq[:length]
    return out


def _window_stats(seq, lo: int, hi: int):
    j = np.arange(lo, hi + 1, dtype=float)
    scaled = j * _padded(seq, hi + 1)[lo:]
    q1, med, q3 = np.percentile(scaled, [25, 50, 75])
    return float(med), float(q3 - q1), j, scaled


def estimate_weyl_limit(spectrum: SpectrumResult, trusted_count: int, prediction: dict | None = None) -> WeylReport:
    """Median of ``j mu_j`` (and ``j lambda^pm_j``) over ``[ceil(T/4), floor(T/2)]``.

    Indices are zero-based. ``slope`` is the least-squares coefficient of
    ``j mu_j`` against ``1/j`` over the window; a large value signals drift.
    Signed sequences shorter than the window are padded with zeros.
    """
    lo, hi = weyl_window(trusted_count)
    est, iqr, j, scaled = _window_stats(spectrum.mu, lo, hi)
    design = np.stack([np.ones_like(j), 1.0 / j], axis=1)
    coef, *_ = np.linalg.lstsq(design, scaled, rcond=None)
    if spectrum.hermitian:
        est_p, iqr_p, *_ = _window_stats(spectrum.lambda_plus, lo, hi)
        est_m, iqr_m, *_ = _window_stats(spectrum.lambda_minus, lo, hi)
    else:
        est_p = iqr_p = est_m = iqr_m = math.nan
    prediction = prediction or {}
    return WeylReport(
        estimated_Lambda_abs=est,
        estimated_Lambda_plus=est_p,
        estimated_Lambda_minus=est_m,
        predicted_abs=float(prediction.get("abs", math.nan)),
        predicted_plus=float(prediction.get("plus", math.nan)),
        predicted_minus=float(prediction.get("minus", math.nan)),
        window=(lo, hi),
        uncertainty=iqr,
        quadrature_delta=float(prediction.get("delta", math.nan)),
        uncertainty_plus=iqr_p,
        uncertainty_minus=iqr_m,
        slope=float(coef[1]),
    )


@dataclass(frozen=True)
class NCIntegralReport:
    N_grid: tuple[int, ...]
    values: tuple[complex, ...]
    extrapolated: complex
    dilation_spread: float
    fit_residual: float
    verdict: bool
    scale: float
    tie_spread: float

    def to_dict(self) -> dict:
        cplx = lambda z: [z.real, z.imag]  # noqa: E731
        return {
            "N_grid": list(self.N_grid),
            "values": [cplx(v) for v in self.values],
            "extrapolated": cplx(self.extrapolated),
            "dilation_spread": self.dilation_spread,
            "fit_residual": self.fit_residual,
            "verdict": self.verdict,
            "scale": self.scale,
            "tie_spread": self.tie_spread,
        }


def default_N_grid(length: int, start: int = 64) -> list[int]:
    top = int(math.floor(math.log2(length))) if length >= 2 else 0
    first = min(int(math.log2(start)), max(top - 3, 1))
    return [2**e for e in range(first, top + 1)]


def nc_integral(seq, N_grid=None, rel_tol: float = 0.05) -> NCIntegralReport:
    """Cesaro log-means, their extrapolation in ``1/ln N`` and a dilation test.

    ``seq`` is an eigenvalue sequence ordered by decreasing modulus (or a
    :class:`SpectrumResult`). The verdict threshold is ``rel_tol`` times the
    larger of ``|extrapolated|`` and the weak-(1, inf) quasi-norm of the
    sequence, so sequences whose log-means tend to zero are judged on the
    scale of their terms.
    """
    if isinstance(seq, SpectrumResult):
        seq = seq.lambda_by_modulus
    seq = np.asarray(seq, dtype=complex)
    grid = sorted(int(N) for N in (N_grid if N_grid is not None else default_N_grid(seq.size)))
    if len(grid) < 2:
        raise ValueError("N grid needs at least two points")
    if grid[-1] > seq.size:
        raise ValueError(f"grid reaches N = {grid[-1]} beyond the sequence length {seq.size}")
    values = np.array([cesaro_log_mean(seq, N) for N in grid])
    x = 1.0 / np.log(np.asarray(grid, dtype=float))
    design = np.stack([np.ones_like(x), x], axis=1).astype(complex)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    extrap = complex(coef[0])
    residual = float(np.abs(design @ coef - values).max())
    pairs = [N for N in grid if 2 * N <= seq.size]
    spread = max((abs(cesaro_log_mean(seq, 2 * N) - cesaro_log_mean(seq, N)) for N in pairs), default=0.0)
    qn, _ = weak_quasinorm(np.abs(seq))
    scale = max(abs(extrap), qn)
    thr = rel_tol * scale + 1e-12
    return NCIntegralReport(
        N_grid=tuple(grid),
        values=tuple(complex(v) for v in values),
        extrapolated=extrap,
        dilation_spread=float(spread),
        fit_residual=residual,
        verdict=bool(spread < thr and residual < thr),
        scale=scale,
        tie_spread=tie_shuffle_spread(seq, grid[-1]),
    )


# ---------------------------------------------------------------------------
# Cwikel ratios


@dataclass(frozen=True)
class CwikelRecord:
    quasinorm: float
    orlicz: float
    ratio: float
    attaining_index: int
    trusted_count: int
    zero_potential: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def cwikel_ratio(u: Potential, Q: MultiplierSymbol, P: MultiplierSymbol, lat: FrequencyLattice, m: int | None = None) -> CwikelRecord:
    """``sup_j (j+1) mu_j(QuP)`` over the trusted window, over ``||u||_{L log L}``."""
    n = u.n
    if not (math.isclose(Q.order, -n / 2) and math.isclose(P.order, -n / 2)):
        raise ValueError("Cwikel ratios need symbols of order -n/2")
    norms = sample_norms(u, m)
    if not np.any(norms.values):
        return CwikelRecord(0.0, 0.0, 0.0, 0, lat.trusted_count, zero_potential=True)
    mu = singular_values(build_qup(Q, u, P, lat))
    qn, idx = weak_quasinorm(mu[: lat.trusted_count])
    orl = orlicz_norm(norms, YoungFunction.LLOGL)
    return CwikelRecord(qn, orl, qn / orl, idx, lat.trusted_count)
