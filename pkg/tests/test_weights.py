import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blgl.errors import HorizonExceeded, ValidationError
from blgl.fields import SpectralField, make_grid
from blgl.weights import (WeightParams, mu_grid, s_mu_norm, s_norm, triple_norm, w_base, w_t,
                          x_mu_norm, x_norm, y_mu_norm, y_norm, z_norm)

from conftest import random_field

P = WeightParams(nu=1e-2)


def single(grid, xi, prof):
    return SpectralField.from_modes(grid, {xi: prof})


@pytest.mark.parametrize("field,value", [("beta", 0.3), ("beta", 0.0), ("alpha", 0.5),
                                         ("mu0", 0.1), ("eps0", 1.0), ("nu", 0.0),
                                         ("gamma", -1.0), ("n", 0)])
def test_param_intervals(field, value):
    with pytest.raises(ValidationError) as e:
        WeightParams(**{"nu": 1e-2, field: value})
    assert e.value.field == field


def test_beta_message_cites_interval():
    with pytest.raises(ValidationError, match=r"\(0, 1/4\)"):
        WeightParams(nu=1e-2, beta=0.3)


def test_w_base_branches():
    assert w_base(0.0, P) == pytest.approx(0.1)
    assert w_base(0.5, P) == 0.5
    assert w_base(2.0, WeightParams(nu=1e-4)) == 1.0


def test_w_t_examples():
    y = np.linspace(0, 1.2, 50)
    assert np.all(w_t(y, 0.0, P) == 1.0)
    t0 = P.nu ** 2 / P.gamma ** 2
    assert w_t(0.5, 2 * t0, P) == 0.5
    assert np.allclose(w_t(y, t0, P), w_base(y, P), rtol=0, atol=1e-15)


@given(st.floats(0, 1.2), st.floats(1e-4, 1e-2))
def test_w_t_dominates_base_and_decreases(y, nu):
    p = WeightParams(nu=nu)
    t0 = p.growth_time
    # t = 0 is a convention (w = 1) and sits below the t -> 0+ limit, so
    # monotonicity is checked on t > 0
    ts = np.concatenate([np.geomspace(t0 * 1e-3, t0, 30), [2 * t0, 10 * t0]])
    vals = np.array([w_t(y, t, p) for t in ts])
    assert np.all(np.diff(vals) <= 1e-15)
    assert w_t(y, 0.0, p) >= w_base(y, p)
    assert np.all(vals >= w_base(y, p) - 1e-15)
    assert vals[-1] == vals[-2] == w_base(y, p)


def test_generalized_weight_threshold():
    p = WeightParams(nu=1e-2, n=2)
    assert p.time_exponent == pytest.approx(4 / 3)
    t0 = p.growth_time
    assert t0 == pytest.approx((1e-3) ** (4 / 3))
    assert w_t(0.3, t0 * 1.5, p) == w_base(0.3, p)
    assert w_t(0.3, t0 * 0.5, p) > w_base(0.3, p)


def test_x_mu_norm_examples(grid):
    y = grid.nodes
    mu = 0.05
    assert x_mu_norm(single(grid, 0, np.ones(grid.J)), mu, 0.0, P) == pytest.approx(1.0)
    prof = np.exp(-P.eps0 * np.maximum(1 + mu - y, 0))
    assert x_mu_norm(single(grid, 1, prof), mu, 0.0, P) == pytest.approx(1.0)
    two = SpectralField.from_modes(grid, {1: prof, -1: prof})
    assert x_mu_norm(two, mu, 0.0, P) == pytest.approx(2.0)


def test_x_norm_brute_force(grid):
    y = grid.nodes
    f = single(grid, 0, y)
    t = 0.0
    top = P.mu0
    best = 0.0
    for mu in np.arange(16) * top / 16:
        m = y <= 1 + mu
        base = np.max(y[m])
        # (0,0), (0,1) and (0,2) all equal y for f = y; x-derivatives vanish
        best = max(best, 2 * base + base * (top - mu) ** 0.75)
    assert x_norm(f, t, P) == pytest.approx(best, rel=1e-9)


def test_x_norm_horizon():
    g = make_grid(2, 64, 4.0, 3.0, 1e-2)
    f = single(g, 0, np.ones(g.J))
    with pytest.raises(HorizonExceeded):
        x_norm(f, P.x_horizon, P)
    assert x_norm(f, 0.5 * P.run_horizon, P, recession="linear") == pytest.approx(1.0)
    p2 = WeightParams(nu=1e-2, n=2)
    assert p2.x_horizon == pytest.approx((0.09 / 10) ** 4)
    with pytest.raises(HorizonExceeded):
        x_norm(f, p2.x_horizon * 1.01, p2)
    with pytest.raises(ValueError):
        x_norm(f, 0.0, P, mu_samples=4)


def test_y_norm_examples(grid):
    assert y_norm(SpectralField.zeros(grid), 0.0, P) == 0.0
    one = single(grid, 0, np.ones(grid.J))
    top_mu = mu_grid(P.mu0, 16)[-1]
    assert y_norm(one, 0.0, P) == pytest.approx(1 + top_mu, rel=1e-12)
    mu = 0.05
    exact = (math.exp(P.eps0 * (1 + mu)) - 1) / P.eps0
    assert y_mu_norm(single(grid, 1, np.ones(grid.J)), mu, P) == pytest.approx(exact, rel=1e-5)
    with pytest.raises(HorizonExceeded):
        y_norm(one, P.y_horizon, P)


def test_s_norm_examples(grid):
    assert s_norm(SpectralField.zeros(grid)) == 0.0
    one = single(grid, 0, np.ones(grid.J))
    assert s_norm(one) == pytest.approx(math.sqrt((64 - 0.125) / 3), rel=1e-12)
    low = single(grid, 0, np.where(grid.nodes < 0.45, 1.0, 0.0))
    assert s_norm(low) == 0.0


def test_s_mu_is_sum_of_mode_norms(grid):
    one = np.ones(grid.J)
    f = SpectralField.from_modes(grid, {1: one, -1: one})
    a = 1.05
    mode = math.sqrt((64 - a ** 3) / 3)
    assert s_mu_norm(f, 0.05) == pytest.approx(2 * mode, rel=1e-9)
    # the root-sum-square form differs by sqrt(2)
    b = math.sqrt((64 - 0.125) / 3)
    assert s_norm(f) == pytest.approx(math.sqrt(2) * b, rel=1e-12)


def test_z_norm_examples(grid):
    assert z_norm(SpectralField.zeros(grid)) == 0.0
    c = 2.5
    base = math.sqrt((64 - 0.125) / 3)
    assert z_norm(single(grid, 0, c * np.ones(grid.J))) == pytest.approx(c * base, rel=1e-9)
    assert z_norm(single(grid, 1, np.ones(grid.J))) == pytest.approx(4 * base, rel=1e-9)


def test_triple_norm_zero_and_sum(grid):
    r = triple_norm(SpectralField.zeros(grid), 0.0, P)
    assert (r.X, r.Y, r.Z, r.triple) == (0.0, 0.0, 0.0, 0.0)
    f = SpectralField(grid, random_field(grid, np.random.default_rng(1)))
    r = triple_norm(f, 1e-6, P)
    assert r.triple == r.X + r.Y + r.Z
    assert all(v >= 0 and math.isfinite(v) for v in (r.X, r.Y, r.Z))
    assert len(r.S_mu) == 16


@given(st.integers(0, 1000), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3,
                                               allow_nan=False, allow_infinity=False))
def test_homogeneity(seed, c):
    g = make_grid(3, 64, 4.0, 3.0, 1e-2)
    f = SpectralField(g, random_field(g, np.random.default_rng(seed)))
    a, b = triple_norm(f, 1e-6, P), triple_norm(f * c, 1e-6, P)
    for u, v in ((a.X, b.X), (a.Y, b.Y), (a.Z, b.Z)):
        assert v == pytest.approx(abs(c) * u, rel=1e-10)


@given(st.integers(0, 1000))
def test_triangle_inequality(seed):
    g = make_grid(3, 64, 4.0, 3.0, 1e-2)
    rng = np.random.default_rng(seed)
    f = SpectralField(g, random_field(g, rng))
    h = SpectralField(g, random_field(g, rng))
    for norm in (lambda u: x_norm(u, 1e-6, P), lambda u: y_norm(u, 1e-6, P), z_norm, s_norm,
                 lambda u: x_mu_norm(u, 0.04, 1e-6, P)):
        assert norm(f + h) <= (norm(f) + norm(h)) * (1 + 1e-12)


@given(st.integers(0, 1000), st.floats(0, 0.09))
def test_x_mu_norm_monotone_in_mu(seed, mu):
    g = make_grid(3, 64, 4.0, 3.0, 1e-2)
    f = SpectralField(g, random_field(g, np.random.default_rng(seed)))
    assert x_mu_norm(f, mu, 1e-6, P) <= x_mu_norm(f, P.mu0, 1e-6, P) * (1 + 1e-12)
