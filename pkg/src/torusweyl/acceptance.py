"""Acceptance suite: each criterion is a function returning a :class:`CriterionResult`."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .asymptotics import estimate_weyl_limit, nc_integral, noncommutative_residue, predict_cosphere_integral, cwikel_ratio
from .lattice import build_lattice, sphere_quadrature, torus_grid
from .operators import build_qup, laplacian_power
from .orlicz import SampledFunction, YoungFunction, orlicz_norm
from .potentials import RadialSingular, constant, cosine
from .semiclassical import birman_schwinger_sandwich, clr_check, semiclassical_sweep
from .spectral import eigenvalue_sequence, signed_eigenvalues, singular_values, spectrum

ONE_OVER_4PI = 1.0 / (4.0 * math.pi)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name} ({self.seconds:.1f}s) {self.tolerance}"

    def to_dict(self) -> dict:
        return asdict(self)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _pad(a, size):
    out = np.zeros(size)
    out[: a.size] = a
    return out


def _kyfan_slack(x, y, z) -> float:
    # max over j + k < d of z_{j+k} - x_j - y_k
    d = z.size
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    ok = j + k < d
    return float((z[(j + k)[ok]] - x[j[ok]] - y[k[ok]]).max())


@_timed
def criterion_1(seed: int = 0, trials: int = 1000, tol: float = 1e-9) -> CriterionResult:
    """Ky Fan, signed Ky Fan and Weyl inequalities on random complex matrices."""
    rng = np.random.default_rng(seed)
    worst = {"ky_fan": -np.inf, "ky_fan_product": -np.inf, "signed_ky_fan": -np.inf, "weyl": -np.inf}
    for _ in range(trials):
        d = int(rng.integers(2, 31))
        A, B, T = _cgauss(rng, d, d), _cgauss(rng, d, d), _cgauss(rng, d, d)
        mA, mB = singular_values(A), singular_values(B)
        worst["ky_fan"] = max(worst["ky_fan"], _kyfan_slack(mA, mB, singular_values(A + B)))
        bound = np.linalg.norm(A, 2) * singular_values(T) * np.linalg.norm(B, 2)
        worst["ky_fan_product"] = max(worst["ky_fan_product"], float((singular_values(A @ T @ B) - bound).max()))
        HA, HB = (A + A.conj().T) / 2, (B + B.conj().T) / 2
        pa, ma = signed_eigenvalues(HA)
        pb, mb = signed_eigenvalues(HB)
        ps, ms = signed_eigenvalues(HA + HB)
        for x, y, z in ((pa, pb, ps), (ma, mb, ms)):
            worst["signed_ky_fan"] = max(worst["signed_ky_fan"], _kyfan_slack(_pad(x, d), _pad(y, d), _pad(z, d)))
        lam = eigenvalue_sequence(np.linalg.eigvals(T))
        s1 = np.abs(np.cumsum(lam))
        s2 = np.cumsum(np.abs(lam))
        s3 = np.cumsum(singular_values(T))
        worst["weyl"] = max(worst["weyl"], float(np.max(s1 - s2)), float(np.max(s2 - s3)))
    passed = all(v <= tol for v in worst.values())
    return CriterionResult(1, "ideal inequalities", passed, worst, f"max slack <= {tol:g} over {trials} trials")


@_timed
def criterion_2(seed: int = 0, trials: int = 200) -> CriterionResult:
    """Matrix-level Birman-Schwinger sandwich with kernel dimensions 0..5."""
    rng = np.random.default_rng(seed + 1)
    violations = 0
    kernels = set()
    for i in range(trials):
        dim = int(rng.integers(6, 41))
        kdim = i % 6
        d = rng.exponential(1.0, dim)
        d[rng.choice(dim, kdim, replace=False)] = 0.0
        V = _cgauss(rng, dim, dim) * rng.uniform(0.1, 3.0)
        V = (V + V.conj().T) / 2
        rec = birman_schwinger_sandwich(d, V, check=False)
        kernels.add(rec.kernel_dim)
        if not (rec.lower <= rec.middle <= rec.upper):
            violations += 1
    passed = violations == 0 and kernels == set(range(6))
    return CriterionResult(2, "Birman-Schwinger sandwich", passed,
                           {"violations": violations, "kernel_dims": sorted(kernels)}, "zero violations")


def _weyl(u, K: int, prediction: bool = True):
    D = laplacian_power(2, -1)
    lat = build_lattice(2, K)
    spec = spectrum(build_qup(D, u, D, lat))
    pred = predict_cosphere_integral(D, u, D) if prediction else None
    return estimate_weyl_limit(spec, lat.trusted_count, pred)


@_timed
def criterion_3(K: int = 24) -> CriterionResult:
    """Constant potential: which normalisation does ``j mu_j`` converge to?"""
    rep = _weyl(constant(2, 1.0), K, prediction=False)
    est = rep.estimated_Lambda_abs
    alt = 1.0 / (8.0 * math.pi**2)
    err = abs(est - ONE_OVER_4PI) / ONE_OVER_4PI
    err_alt = abs(est - alt) / alt
    passed = err < 0.10 and not err_alt < 0.10
    return CriterionResult(3, "constant-potential Weyl law", passed,
                           {"estimate": est, "rel_err_cosphere": err, "rel_err_volume_only": err_alt,
                            "uncertainty": rep.uncertainty, "window": list(rep.window)},
                           "within 10% of 1/(4pi), not within 10% of 1/(8pi^2)")


@_timed
def criterion_4(K: int = 24) -> CriterionResult:
    """Non-diagonal Weyl law for ``u = 1 + cos(2 pi x_1)``."""
    rep = _weyl(cosine(2, offset=1.0), K)
    err = abs(rep.estimated_Lambda_abs - rep.predicted_abs) / rep.predicted_abs
    ok_sign = rep.estimated_Lambda_minus < 0.1 * rep.estimated_Lambda_plus
    return CriterionResult(4, "non-diagonal Weyl law", err < 0.15 and ok_sign,
                           {"estimate": rep.estimated_Lambda_abs, "prediction": rep.predicted_abs, "rel_err": err,
                            "Lambda_plus": rep.estimated_Lambda_plus, "Lambda_minus": rep.estimated_Lambda_minus},
                           "abs within 15%; Lambda- < 0.1 Lambda+")


@_timed
def criterion_5(K: int = 24) -> CriterionResult:
    """Signed Weyl law for ``u = cos(2 pi x_1)``."""
    rep = _weyl(cosine(2), K)
    target = ONE_OVER_4PI / math.pi
    ep = abs(rep.estimated_Lambda_plus - target) / target
    em = abs(rep.estimated_Lambda_minus - target) / target
    asym = abs(rep.estimated_Lambda_plus - rep.estimated_Lambda_minus) / rep.estimated_Lambda_plus
    return CriterionResult(5, "signed Weyl law", ep < 0.2 and em < 0.2 and asym < 0.1,
                           {"Lambda_plus": rep.estimated_Lambda_plus, "Lambda_minus": rep.estimated_Lambda_minus,
                            "target": target, "predicted_plus": rep.predicted_plus,
                            "rel_err_plus": ep, "rel_err_minus": em, "asymmetry": asym},
                           "each within 20% of 1/(4pi^2); asymmetry < 10%")


@_timed
def criterion_6(h_list=(0.2, 0.1, 0.05)) -> CriterionResult:
    """Semiclassical Weyl law for ``V = -1`` on T^2."""
    runs = semiclassical_sweep(constant(2, -1.0), h_list)
    errs = [r.relative_error for r in runs]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    passed = errs[-1] < 0.10 and monotone
    return CriterionResult(6, "semiclassical Weyl law", passed,
                           {"h": list(h_list), "count": [r.count for r in runs], "scaled": [r.scaled for r in runs],
                            "prediction": runs[0].prediction, "rel_err": errs, "monotone": monotone},
                           "rel err < 10% at smallest h; decreasing along the sweep")


@_timed
def criterion_7(amplitudes=(1, 4, 16), cutoffs=(12, 24)) -> CriterionResult:
    """CLR-type ratio for ``V = -a (1 + cos 2 pi x_1)`` across the family and K-doubling."""
    ratios = {}
    for K in cutoffs:
        lat = build_lattice(2, K)
        for a in amplitudes:
            rec = clr_check(cosine(2, amplitude=-a, offset=-a), lat)
            ratios[(a, K)] = rec.ratio
    family_ok = all(
        max(ratios[(a, K)] for a in amplitudes) <= 2.0 * min(ratios[(a, K)] for a in amplitudes) for K in cutoffs
    )
    k0, k1 = cutoffs[0], cutoffs[-1]
    doubling_ok = all(ratios[(a, k1)] <= 1.1 * ratios[(a, k0)] for a in amplitudes)
    return CriterionResult(7, "CLR-type boundedness", family_ok and doubling_ok,
                           {"ratios": {f"a={a},K={K}": v for (a, K), v in ratios.items()},
                            "family_ok": family_ok, "doubling_ok": doubling_ok},
                           "max <= 2 min across a; ratio(2K) <= 1.1 ratio(K)")


@_timed
def criterion_8(K: int = 40) -> CriterionResult:
    """Connes check: log-means of the diagonal multiplier ``|xi|^{-2}`` on T^2."""
    sigma = laplacian_power(2, -2)
    lat = build_lattice(2, K)
    lam = np.sort(sigma.radial_values(lat))[::-1][: lat.trusted_count]
    rep = nc_integral(lam)
    target = noncommutative_residue(sigma, sphere_quadrature(2, 64)) / 2
    err = abs(rep.extrapolated - target) / target
    last = abs(rep.values[-1])
    spread_rel = rep.dilation_spread / last
    return CriterionResult(8, "NC integral / Connes check", err < 0.2 and spread_rel < 0.05,
                           {"extrapolated": rep.extrapolated.real, "target": target, "rel_err": err,
                            "dilation_spread": rep.dilation_spread, "spread_rel": spread_rel,
                            "N_grid": list(rep.N_grid)},
                           "within 20% of Res/2; spread < 5% of the last log-mean")


@_timed
def criterion_9(seed: int = 0, samples: int = 200, tol: float = 1e-8) -> CriterionResult:
    """Orlicz norm: constant closed form, homogeneity and monotonicity."""
    grid = torus_grid(2, 16)
    const_err = 0.0
    for c in (0.5, 1.0, 3.0, 10.0):
        f = SampledFunction(np.full(grid.nodes.shape[0], c), grid.weights)
        const_err = max(const_err, abs(orlicz_norm(f) - c / (math.e - 1.0)) / c)
    rng = np.random.default_rng(seed + 9)
    hom_err = mono_err = 0.0
    for _ in range(samples):
        size = int(rng.integers(4, 200))
        w = rng.uniform(0.5, 1.5, size)
        w /= w.sum() * rng.uniform(0.5, 2.0)
        v = rng.lognormal(0.0, 1.0, size)
        F = (YoungFunction.LLOGL, YoungFunction.EXPL1)[int(rng.integers(2))]
        f = SampledFunction(v, w)
        base = orlicz_norm(f, F)
        lam = rng.uniform(0.1, 10.0)
        hom_err = max(hom_err, abs(orlicz_norm(f.scaled(lam), F) - lam * base) / (lam * base))
        g = SampledFunction(v * (1.0 + rng.uniform(0.0, 1.0, size)), w)
        mono_err = max(mono_err, (base - orlicz_norm(g, F)) / base)
    passed = const_err < tol and hom_err < tol and mono_err < tol
    return CriterionResult(9, "Orlicz norm exactness", passed,
                           {"constant_rel_err": const_err, "homogeneity_rel_err": hom_err,
                            "monotonicity_violation": mono_err},
                           f"relative errors < {tol:g}")


@_timed
def criterion_10(betas=(1.0, 1.5, 1.9), cutoffs=(12, 24)) -> CriterionResult:
    """Cwikel ratio of ``|x - x_0|^{-beta}`` stays bounded across beta."""
    D = laplacian_power(2, -1)
    recs = {}
    ok_index = ok_finite = True
    for K in cutoffs:
        lat = build_lattice(2, K)
        for b in betas:
            rec = cwikel_ratio(RadialSingular(2, (0.5, 0.5), b), D, D, lat)
            recs[(b, K)] = rec
            ok_finite &= math.isfinite(rec.quasinorm)
            ok_index &= rec.attaining_index < 0.9 * rec.trusted_count
    spread = {K: max(recs[(b, K)].ratio for b in betas) / min(recs[(b, K)].ratio for b in betas) for K in cutoffs}
    passed = ok_finite and ok_index and all(s <= 3.0 for s in spread.values())
    return CriterionResult(10, "Cwikel ratio stability", passed,
                           {"ratios": {f"beta={b},K={K}": r.ratio for (b, K), r in recs.items()},
                            "attaining_index": {f"beta={b},K={K}": r.attaining_index for (b, K), r in recs.items()},
                            "spread": {str(K): s for K, s in spread.items()}},
                           "finite; argmax outside top decile; max/min ratio <= 3")


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}
SEEDED = {1, 2, 9}


def run_all(seed: int = 0, only=None, threads: int = 1) -> list[CriterionResult]:
    """Run the selected criteria (all by default), optionally in parallel."""
    numbers = sorted(only) if only else sorted(CRITERIA)

    def one(i):
        return CRITERIA[i](seed=seed) if i in SEEDED else CRITERIA[i]()

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, numbers))
    return [one(i) for i in numbers]
