import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusweyl.asymptotics import (
    WeylReport,
    candidate_constants,
    cwikel_ratio,
    default_N_grid,
    estimate_weyl_limit,
    nc_integral,
    noncommutative_residue,
    predict_cosphere_integral,
    weyl_prefactor,
    weyl_window,
)
from torusweyl.errors import AccuracyError
from torusweyl.lattice import build_lattice, sphere_area, sphere_quadrature, torus_grid
from torusweyl.operators import MultiplierSymbol, bessel_power, build_qup, laplacian_power
from torusweyl.potentials import RadialSingular, TrigPolynomial, constant, cosine
from torusweyl.spectral import SpectrumResult, spectrum

QUARTER_PI = 1.0 / (4.0 * math.pi)


def synthetic(mu, plus=None, minus=None):
    mu = np.asarray(mu, dtype=float)
    plus = mu if plus is None else np.asarray(plus, dtype=float)
    minus = np.zeros(0) if minus is None else np.asarray(minus, dtype=float)
    return SpectrumResult(mu, plus, minus, mu.astype(complex), 0.0)


def diagonal_values(K):
    """Exact ``|2 pi k|^-2`` for ``0 < max|k_i| <= K``, plus the zero mode."""
    ax = np.arange(-K, K + 1)
    k1, k2 = np.meshgrid(ax, ax, indexing="ij")
    r2 = (k1**2 + k2**2).ravel().astype(float)
    vals = np.where(r2 > 0, 1.0 / (4 * math.pi**2 * np.where(r2 > 0, r2, 1.0)), 0.0)
    return np.sort(vals)[::-1]


# ---------------------------------------------------------------------------
# predictions


def test_prefactor():
    assert weyl_prefactor(2) == pytest.approx(1 / (8 * math.pi**2))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_constant_potential_prediction_is_c_n(n):
    D = laplacian_power(n, -n / 2)
    pred = predict_cosphere_integral(D, constant(n, 1.0), D)
    assert pred["abs"] == pytest.approx(weyl_prefactor(n) * sphere_area(n), abs=1e-8)
    assert pred["minus"] == pytest.approx(0.0, abs=1e-12)


def test_prediction_constant_n2():
    D = laplacian_power(2, -1)
    assert predict_cosphere_integral(D, constant(2, 1.0), D)["abs"] == pytest.approx(QUARTER_PI, rel=1e-12)


def test_prediction_shifted_cosine():
    D = laplacian_power(2, -1)
    pred = predict_cosphere_integral(D, cosine(2, offset=1.0), D)
    assert pred["abs"] == pytest.approx(QUARTER_PI, rel=1e-8)
    assert pred["minus"] == pytest.approx(0.0, abs=1e-12)
    assert pred["signed_tr"] == pytest.approx(QUARTER_PI, rel=1e-8)


def test_prediction_cosine_split():
    D = laplacian_power(2, -1)
    pred = predict_cosphere_integral(D, cosine(2), D)
    # the kink of cos_+ limits the uniform grid to second order
    assert pred["plus"] == pytest.approx(QUARTER_PI / math.pi, rel=1e-4)
    assert pred["minus"] == pytest.approx(QUARTER_PI / math.pi, rel=1e-4)
    assert pred["abs"] == pytest.approx(2 * QUARTER_PI / math.pi, rel=1e-4)
    assert pred["signed_tr"] == pytest.approx(0.0, abs=1e-10)


def test_prediction_matrix_trace():
    D = laplacian_power(2, -1, r=2)
    pred = predict_cosphere_integral(D, constant(2, np.diag([2.0, -1.0])), D)
    assert pred["abs"] == pytest.approx(3 * QUARTER_PI, rel=1e-10)
    assert pred["plus"] == pytest.approx(2 * QUARTER_PI, rel=1e-10)
    assert pred["minus"] == pytest.approx(QUARTER_PI, rel=1e-10)


def test_prediction_non_hermitian_split_is_nan():
    D = laplacian_power(2, -1)
    u = TrigPolynomial(2, 1, {(1, 0): 1.0})
    pred = predict_cosphere_integral(D, u, D)
    assert math.isnan(pred["plus"]) and math.isnan(pred["minus"])
    assert pred["abs"] == pytest.approx(QUARTER_PI, rel=1e-8)


def test_prediction_singular_potential():
    # int |x|^-1 over the unit cell is 4 asinh(1)
    D = laplacian_power(2, -1)
    pred = predict_cosphere_integral(D, RadialSingular(2, (0.2, 0.4), 1.0), D)
    assert pred["abs"] == pytest.approx(QUARTER_PI * 4 * math.asinh(1), rel=1e-8)


def test_prediction_wrong_order():
    with pytest.raises(ValueError):
        predict_cosphere_integral(laplacian_power(2, -2), constant(2, 1.0), laplacian_power(2, -2))


def test_prediction_refinement_failure():
    # a frequency above the grid Nyquist limit aliases differently at m and 2m
    D = laplacian_power(2, -1)
    u = cosine(2, freq=12, offset=0.0)
    with pytest.raises(AccuracyError):
        predict_cosphere_integral(D, u, D, grid=torus_grid(2, 8), rtol=1e-6)


def test_candidate_constants_differ_by_sphere_area():
    c = candidate_constants(constant(2, 1.0))
    assert c["cosphere"] == pytest.approx(QUARTER_PI)
    assert c["volume_only"] == pytest.approx(1 / (8 * math.pi**2))
    assert c["cosphere"] / c["volume_only"] == pytest.approx(sphere_area(2))


def test_constant_spectrum_selects_cosphere_constant():
    D = laplacian_power(2, -1)
    lat = build_lattice(2, 24)
    rep = estimate_weyl_limit(spectrum(build_qup(D, constant(2, 1.0), D, lat)), lat.trusted_count)
    c = candidate_constants(constant(2, 1.0))
    assert abs(rep.estimated_Lambda_abs - c["cosphere"]) < abs(rep.estimated_Lambda_abs - c["volume_only"])


# ---------------------------------------------------------------------------
# residue


def test_residue_laplacian():
    assert noncommutative_residue(laplacian_power(2, -2), sphere_quadrature(2, 16)) == pytest.approx(1 / (2 * math.pi))


def test_residue_matrix_linearity():
    A = np.array([[2.0, 1.0], [0.5, 3.0]])
    sigma = MultiplierSymbol(2, -2, "homogeneous", A)
    assert noncommutative_residue(sigma, sphere_quadrature(2, 16)) == pytest.approx(5 / (2 * math.pi))


def test_residue_bessel_principal_part():
    assert noncommutative_residue(bessel_power(2, -2), sphere_quadrature(2, 16)) == pytest.approx(1 / (2 * math.pi))


def test_residue_rejects_wrong_order():
    with pytest.raises(ValueError):
        noncommutative_residue(laplacian_power(2, -1), sphere_quadrature(2, 16))


def test_connes_check_on_diagonal_laplacian():
    vals = diagonal_values(24)
    rep = nc_integral(vals)
    res = noncommutative_residue(laplacian_power(2, -2), sphere_quadrature(2, 16))
    assert abs(rep.extrapolated.real - res / 2) < 0.2 * res / 2


# ---------------------------------------------------------------------------
# Weyl estimator


def test_window_bounds():
    assert weyl_window(64) == (16, 32)
    assert weyl_window(101) == (26, 50)
    with pytest.raises(ValueError):
        weyl_window(63)


@given(st.floats(0.01, 100.0), st.integers(64, 4000))
def test_harmonic_sequence_estimate(c, T):
    mu = c / (np.arange(T) + 1.0)
    rep = estimate_weyl_limit(synthetic(mu), T)
    lo, hi = rep.window
    assert hi <= T and rep.uncertainty >= 0
    # j mu_j = c j/(j+1) over the window
    assert rep.estimated_Lambda_abs == pytest.approx(c, rel=2.0 / lo)
    assert rep.uncertainty <= 2 * c / lo


def test_perturbed_sequence_converges():
    c, d = 1.5, 40.0
    errors = []
    for T in (256, 1024, 4096, 16384):
        j = np.arange(T) + 1.0
        rep = estimate_weyl_limit(synthetic(c / j + d / j**2), T)
        errors.append(abs(rep.estimated_Lambda_abs - c))
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 0.02 * c


def test_finite_rank_invariance():
    mu = 2.0 / (np.arange(400) + 1.0)
    cut = mu.copy()
    cut[:5] = 0.0
    cut = np.sort(cut)[::-1]
    a = estimate_weyl_limit(synthetic(mu), 400)
    b = estimate_weyl_limit(synthetic(cut), 400)
    assert b.estimated_Lambda_abs == pytest.approx(a.estimated_Lambda_abs, rel=0.05)


def test_signed_sequences_padded():
    T = 200
    mu = 1.0 / (np.arange(T) + 1.0)
    rep = estimate_weyl_limit(synthetic(mu, plus=mu[:10], minus=np.zeros(0)), T)
    assert rep.estimated_Lambda_plus == 0.0
    assert rep.estimated_Lambda_minus == 0.0


def test_non_hermitian_signed_estimates_are_nan():
    T = 100
    mu = 1.0 / (np.arange(T) + 1.0)
    s = SpectrumResult(mu, np.zeros(0), np.zeros(0), mu.astype(complex), 0.0, hermitian=False)
    rep = estimate_weyl_limit(s, T)
    assert math.isnan(rep.estimated_Lambda_plus)
    assert rep.estimated_Lambda_abs > 0


def test_report_to_dict_roundtrip():
    rep = estimate_weyl_limit(synthetic(1.0 / (np.arange(128) + 1.0)), 128)
    d = rep.to_dict()
    assert d["window"] == [32, 64]
    assert set(d) == {f.name for f in WeylReport.__dataclass_fields__.values()}


def test_diagonal_laplacian_estimate_k24():
    lat = build_lattice(2, 24)
    D = laplacian_power(2, -1)
    spec = spectrum(build_qup(D, constant(2, 1.0), D, lat))
    exact = diagonal_values(24)
    np.testing.assert_allclose(spec.mu, exact, rtol=1e-12, atol=1e-15)
    rep = estimate_weyl_limit(spec, lat.trusted_count)
    lo, hi = rep.window
    j = np.arange(lo, hi + 1)
    assert rep.estimated_Lambda_abs == pytest.approx(np.median(j * exact[lo : hi + 1]), rel=1e-12)
    assert abs(rep.estimated_Lambda_abs - QUARTER_PI) < 0.1 * QUARTER_PI


def test_modulus_merge_consistency():
    lat = build_lattice(2, 12)
    D = laplacian_power(2, -1)
    spec = spectrum(build_qup(D, cosine(2, offset=0.3), D, lat))
    merged = np.sort(np.concatenate([spec.lambda_plus, spec.lambda_minus]))[::-1]
    a = estimate_weyl_limit(spec, lat.trusted_count)
    b = estimate_weyl_limit(synthetic(merged), lat.trusted_count)
    assert abs(a.estimated_Lambda_abs - b.estimated_Lambda_abs) <= a.uncertainty + b.uncertainty + 1e-15


# ---------------------------------------------------------------------------
# NC integral


def test_default_grid():
    assert default_N_grid(1000) == [64, 128, 256, 512]
    assert default_N_grid(40) == [4, 8, 16, 32]


def test_nc_harmonic():
    c = 0.7
    rep = nc_integral(c / (np.arange(2**16) + 1.0))
    assert rep.extrapolated.real == pytest.approx(c, rel=0.02)
    assert rep.verdict


def test_nc_trace_class_vanishes():
    rep = nc_integral(2.0 ** -np.arange(1024.0))
    assert abs(rep.extrapolated) < 0.2
    assert abs(rep.values[-1]) < 2.0 / math.log(rep.N_grid[-1]) + 1e-12


def test_nc_alternating():
    j = np.arange(2**14)
    rep = nc_integral((-1.0) ** j / (j + 1.0))
    assert abs(rep.extrapolated) < 0.05
    assert rep.verdict


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_nc_linearity(a, b):
    j = np.arange(2048) + 1.0
    X, Y = 1.0 / j, np.cos(j) / j
    lhs = nc_integral(a * X + b * Y).extrapolated
    rhs = a * nc_integral(X).extrapolated + b * nc_integral(Y).extrapolated
    assert abs(lhs - rhs) < 1e-8


def test_nc_grid_errors():
    with pytest.raises(ValueError):
        nc_integral(np.ones(100), N_grid=[64, 128])
    with pytest.raises(ValueError):
        nc_integral(np.ones(100), N_grid=[64])


def test_nc_accepts_spectrum_and_serializes():
    rep = nc_integral(synthetic(1.0 / (np.arange(256) + 1.0)))
    d = rep.to_dict()
    assert d["N_grid"] == list(rep.N_grid)
    assert len(d["values"][0]) == 2


def test_nc_non_measurable_sequence_rejected():
    # log-means oscillate between dyadic blocks: plateaus of alternating height
    j = np.arange(2**16) + 1.0
    block = np.floor(np.log2(j)).astype(int)
    seq = np.where(block % 2 == 0, 1.0, 3.0) / j
    assert not nc_integral(seq).verdict


# ---------------------------------------------------------------------------
# Cwikel ratios


def test_cwikel_zero_potential():
    D = laplacian_power(2, -1)
    rec = cwikel_ratio(constant(2, 0.0), D, D, build_lattice(2, 6))
    assert rec.zero_potential and rec.ratio == 0.0


def test_cwikel_constant_potential():
    D = laplacian_power(2, -1)
    lat = build_lattice(2, 12)
    rec = cwikel_ratio(constant(2, 1.0), D, D, lat)
    mu = diagonal_values(12)[: lat.trusted_count]
    scaled = (np.arange(mu.size) + 1.0) * mu
    assert rec.quasinorm == pytest.approx(scaled.max(), rel=1e-12)
    assert rec.attaining_index == int(np.argmax(scaled))
    assert rec.orlicz == pytest.approx(1 / (math.e - 1), rel=1e-9)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_cwikel_scaling_invariance(c):
    D = laplacian_power(2, -1)
    lat = build_lattice(2, 8)
    u = cosine(2, offset=0.2)
    a = cwikel_ratio(u, D, D, lat)
    b = cwikel_ratio(u.scaled(c), D, D, lat)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-9)


def test_cwikel_wrong_order():
    with pytest.raises(ValueError):
        cwikel_ratio(constant(2, 1.0), laplacian_power(2, -2), laplacian_power(2, -1), build_lattice(2, 4))
