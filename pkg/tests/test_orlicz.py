import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from torusweyl.errors import OrliczDivergenceError
from torusweyl.orlicz import (
    SampledFunction,
    YoungFunction,
    holder_product_data,
    modular,
    orlicz_norm,
    young_eval,
)
from torusweyl import orlicz as orlicz_mod

ALL = list(YoungFunction)


@pytest.mark.parametrize("F", ALL)
def test_young_series_branch_is_continuous(F):
    t = np.array([0.0, 1e-6, 9.99e-5, 1.0001e-4, 1e-3])
    v = young_eval(F, t)
    assert v[0] == 0
    assert np.all(np.diff(v) > 0)
    assert abs(v[2] - v[3]) / v[3] < 1e-2


def test_young_closed_forms():
    assert math.isclose(young_eval(YoungFunction.LLOGL, 1.0), 2 * math.log(2) - 1)
    assert math.isclose(young_eval(YoungFunction.EXPL1, 1.0), math.e - 2)
    assert math.isclose(young_eval(YoungFunction.EXPL2, 2.0), math.exp(4) - 5)
    assert young_eval(YoungFunction.EXPL2, 1e3) == math.inf
    with pytest.raises(ValueError):
        young_eval(YoungFunction.LLOGL, -1.0)


def test_sampled_function_validation():
    with pytest.raises(ValueError):
        SampledFunction([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        SampledFunction([1.0], [0.0])
    with pytest.raises(ValueError):
        SampledFunction([np.inf], [1.0])
    f = SampledFunction([-2.0, 1.0], [0.25, 0.75])
    assert np.all(f.values == [2.0, 1.0])
    assert math.isclose(f.l1(), 1.25)


@pytest.mark.parametrize("c", [1e-6, 0.3, 1.0, 7.0, 1e5])
def test_llogl_norm_of_constant(c):
    f = SampledFunction(np.full(10, c), np.full(10, 0.1))
    assert abs(orlicz_norm(f) - c / (math.e - 1)) <= 1e-9 * c


def test_expl1_constant_oracle():
    # e^t - 1 - t = 1 at t = 1.1462..., solved independently
    from scipy.optimize import brentq

    t = brentq(lambda s: math.expm1(s) - s - 1.0, 0.1, 5.0)
    f = SampledFunction([2.0], [1.0])
    assert abs(orlicz_norm(f, YoungFunction.EXPL1) - 2.0 / t) < 1e-9


def test_zero_function():
    assert orlicz_norm(SampledFunction(np.zeros(3), np.ones(3))) == 0.0


def test_norm_is_unit_level():
    f = SampledFunction([0.1, 5.0, 2.0], [0.2, 0.3, 0.5])
    for F in ALL:
        lam = orlicz_norm(f, F)
        assert abs(modular(f, F, lam) - 1.0) < 1e-6


vals = arrays(float, st.integers(1, 30), elements=st.floats(0.0, 1e3))


@given(vals, st.floats(1e-3, 1e3), st.sampled_from(ALL))
def test_homogeneity(v, lam, F):
    w = np.full(v.size, 1.0 / v.size)
    f = SampledFunction(v, w)
    base = orlicz_norm(f, F)
    assert abs(orlicz_norm(f.scaled(lam), F) - lam * base) <= 1e-8 * lam * base + 1e-300


@given(vals, st.floats(0.0, 2.0), st.sampled_from(ALL))
def test_monotonicity(v, bump, F):
    w = np.full(v.size, 1.0 / v.size)
    small = orlicz_norm(SampledFunction(v, w), F)
    big = orlicz_norm(SampledFunction(v * (1 + bump), w), F)
    assert small <= big * (1 + 1e-8)


@given(vals, vals)
def test_triangle_inequality(a, b):
    m = min(a.size, b.size)
    w = np.full(m, 1.0 / m)
    na = orlicz_norm(SampledFunction(a[:m], w))
    nb = orlicz_norm(SampledFunction(b[:m], w))
    nab = orlicz_norm(SampledFunction(a[:m] + b[:m], w))
    assert nab <= (na + nb) * (1 + 1e-8) + 1e-300


def test_holder_product(rng):
    for _ in range(50):
        m = int(rng.integers(5, 100))
        w = np.full(m, 1.0 / m)
        u = SampledFunction(rng.lognormal(0, 1.5, m), w)
        v = SampledFunction(rng.lognormal(0, 0.5, m), w)
        d = holder_product_data(u, v)
        # Young's inequality st <= F(s) + F*(t) gives the constant 2
        assert d["l1_product"] <= 2.0 * d["llogl_norm_u"] * d["expl1_norm_v"] * (1 + 1e-9)
    with pytest.raises(ValueError):
        holder_product_data(SampledFunction([1.0], [1.0]), SampledFunction([1.0], [0.5]))


def test_divergence_error(monkeypatch):
    monkeypatch.setattr(orlicz_mod, "modular", lambda f, F, lam: 2.0)
    with pytest.raises(OrliczDivergenceError):
        orlicz_norm(SampledFunction([1.0], [1.0]))
