import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from blgl import analysis
from blgl.analysis import (AuditPoint, Probe, SweepRecord, appendix_bound, appendix_integral,
                           audit_appendix_integrals, audit_kernel_lemmas,
                           audit_nonlinear_estimates, displacement_thickness, euler_distance,
                           fit_exponent, formation_time, integral_grid, kato_integral,
                           layer_width, lemma_grid, lemma_points, norm_boundedness_monitor)
from blgl.errors import DegenerateFit, GridMismatch, NoLayer, QuadratureFailure
from blgl.fields import SpectralField, make_grid, velocity_from_vorticity
from blgl.solver import BulkVortex, RunConfig, Shear, Trajectory, evolve, shear_field
from blgl.weights import WeightParams


def synthetic_traj(omega, times):
    u = velocity_from_vorticity(omega)
    n = len(times)
    return Trajectory(list(times), [omega] * n, [u] * n, [None] * n, "")


# ------------------------------------------------------------ layer width

def test_layer_width_exponential(fine_grid):
    g = fine_grid
    for delta in (0.05, 0.1, 0.3):
        prof = 0.5 * np.exp(-g.nodes / delta)
        w = SpectralField.from_modes(g, {1: prof, -1: prof})
        assert layer_width(w) == pytest.approx(delta * math.log(2), rel=2e-3)


def test_layer_width_flat_and_zero(grid):
    flat = SpectralField.from_modes(grid, {0: np.ones(grid.J)})
    assert layer_width(flat) == grid.Ly
    with pytest.raises(NoLayer):
        layer_width(SpectralField.zeros(grid))


@given(st.floats(0.05, 0.5))
def test_layer_width_scales_with_delta(delta):
    g = make_grid(2, 512, 4.0, 3.0, 1e-2)
    w = SpectralField.from_modes(g, {0: 1.0 / (1.0 + (g.nodes / delta) ** 2)})
    assert layer_width(w) / delta == pytest.approx(1.0, rel=2e-3)


def test_displacement_thickness(fine_grid):
    g = fine_grid
    d = 0.02
    w = SpectralField.from_modes(g, {0: np.exp(-g.nodes / d)})
    # int y e^{-y/d} / int e^{-y/d} on [0, 0.25], e^{-12.5} tails negligible
    assert displacement_thickness(w) == pytest.approx(d, rel=1e-3)


# --------------------------------------------------------- formation time

def _record(nu, t, amp):
    return SweepRecord(nu, np.asarray(t), np.asarray(amp), np.asarray(t), np.ones(len(t)))


def test_formation_time_ramp():
    nu = 1e-3
    t = np.linspace(0, 0.1, 1001)
    assert formation_time(_record(nu, t, t / nu), c=1.0) == pytest.approx(math.sqrt(nu),
                                                                         rel=1e-12)
    assert formation_time(_record(nu, t, 0 * t)) == math.inf


@given(st.floats(1e-4, 1e-2), st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_formation_time_monotone_in_threshold(nu, c1, c2):
    t = np.linspace(0, 1, 501)
    rec = _record(nu, t, 5 * t / math.sqrt(nu))
    lo, hi = sorted((c1, c2))
    assert formation_time(rec, lo) <= formation_time(rec, hi)


# ----------------------------------------------------------- exponent fit

def test_fit_exponent_examples():
    xs = np.array([1e-3, 1e-2, 1e-1, 1.0])
    assert fit_exponent(xs, xs) == pytest.approx((1.0, 1.0), abs=1e-14)
    assert fit_exponent(xs, 1 / np.sqrt(xs)) == pytest.approx((-0.5, 1.0), abs=1e-14)
    with pytest.raises(DegenerateFit):
        fit_exponent([1.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    assert math.isnan(fit_exponent(xs, [1.0, 2.0, math.inf, 3.0])[0])


def test_fit_exponent_noisy():
    rng = np.random.default_rng(0)
    xs = np.geomspace(1e-4, 1e-2, 8)
    for _ in range(200):
        ys = xs ** 0.5 * (1 + 0.01 * rng.uniform(-1, 1, len(xs)))
        k, r2 = fit_exponent(xs, ys)
        assert 0.45 <= k <= 0.55
        assert r2 > 0.99


@given(st.lists(st.floats(1e-4, 1e4), min_size=3, max_size=8, unique=True),
       st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(-2, 2))
def test_fit_exponent_scale_invariant(xs, a, b, k):
    xs = np.array(xs)
    if np.ptp(np.log(xs)) < 1e-3:
        return
    ys = xs ** k * np.exp(np.sin(xs))
    s1, _ = fit_exponent(xs, ys)
    s2, _ = fit_exponent(a * xs, b * ys)
    # identical up to the rounding of the logarithms
    assert s2 == pytest.approx(s1, rel=1e-9, abs=1e-9)


# ------------------------------------------------------- kato and euler

def test_kato_zero(grid):
    tr = synthetic_traj(SpectralField.zeros(grid), [0.0, 0.1, 0.2])
    assert kato_integral(tr, 1e-2) == (0.0, 0.0)


def test_kato_uniform_shear(fine_grid):
    g = fine_grid
    nu, T = 1e-2, 0.3
    tr = synthetic_traj(SpectralField.from_modes(g, {0: np.ones(g.J)}), [0.0, 0.1, T])
    layer, full = kato_integral(tr, nu)
    # |grad u|^2 = omega^2 = 1, times 2 pi from Parseval over one x period
    assert full == pytest.approx(nu * T * 2 * math.pi * g.Ly, rel=1e-12)
    # the layer part goes through the discrete velocity derivative
    assert layer == pytest.approx(nu * T * 2 * math.pi * nu, rel=1e-5)


def test_euler_distance_identical_and_mismatch(grid):
    w = shear_field(grid, Shear())
    a = synthetic_traj(w, [0.0, 0.1])
    assert np.all(euler_distance(a, a) == 0.0)
    with pytest.raises(GridMismatch):
        euler_distance(a, synthetic_traj(w, [0.0, 0.2]))
    other = make_grid(8, 96, 4.0, 3.0, 1e-2)
    with pytest.raises(GridMismatch):
        euler_distance(a, synthetic_traj(shear_field(other, Shear()), [0.0, 0.1]))


# -------------------------------------------------- appendix integrals

A, GAMMA, NU, T = 0.06, 10.0, 1e-2, 5e-7
PT = AuditPoint(0.09, 0.03, 0.03, GAMMA, NU, T, T)

# independent oracles at PT: closed forms for the s-weighted integrals,
# algebraic-weight quadrature in s for the 1/sqrt(t - s) ones
FROZEN = {
    "steep_layer": 0.5383311577869588, "steep_weighted": 1.119325348768351,
    "steep_layer_regular": 0.0007949237874280257, "steep_regular": 7.949237874280257e-05,
    "mild_layer": 0.02928049377491056, "mild_weighted": 0.06120171107389856,
    "mild_layer_regular": 4.3879760725742956e-05, "mild_regular": 4.387976072574296e-06,
}


def _closed(p):
    v0 = A - GAMMA * math.sqrt(T)
    F = lambda v: A * v ** (1 - p) / (1 - p) - v ** (2 - p) / (2 - p)
    return 2 / GAMMA ** 2 * (F(A) - F(v0))


def _alg(p, power):
    return integrate.quad(lambda s: (A - GAMMA * math.sqrt(s)) ** -p, 0, T, weight="alg",
                          wvar=(power, -0.5), epsabs=0, epsrel=1e-13)[0]


def test_oracles_reproduce_frozen_values():
    live = {"steep_layer": _alg(1.25, 0) / math.sqrt(NU), "steep_weighted": _alg(1.25, -0.2),
            "steep_layer_regular": _closed(1.75) / math.sqrt(NU), "steep_regular": _closed(1.75),
            "mild_layer": _alg(0.25, 0) / math.sqrt(NU), "mild_weighted": _alg(0.25, -0.2),
            "mild_layer_regular": _closed(0.75) / math.sqrt(NU), "mild_regular": _closed(0.75)}
    for k, v in live.items():
        assert v == pytest.approx(FROZEN[k], rel=1e-12)


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_appendix_integral_matches_oracle(name):
    assert appendix_integral(name, PT) == pytest.approx(FROZEN[name], rel=1e-10)


def test_regular_integral_substitution_factor():
    # the u-form with the u du measure is half of the s integral since ds = 2u du
    pt = AuditPoint(0.09, 0.04, 0.04, 10.0, 1e-2, 1e-6, 1e-6)
    u_form = integrate.quad(lambda u: u * (0.05 - 10 * u) ** -1.75, 0, 1e-3, epsabs=0,
                            epsrel=1e-13)[0]
    assert appendix_integral("steep_regular", pt) == pytest.approx(2 * u_form, rel=1e-10)
    assert math.isfinite(appendix_integral("steep_regular", pt) / appendix_bound("steep_regular", pt))


def test_appendix_vanishes_as_t_to_zero():
    for name in FROZEN:
        vals = [appendix_integral(name, AuditPoint(0.09, 0.03, 0.03, GAMMA, NU, t, t))
                for t in (1e-8, 1e-10, 1e-12)]
        assert vals[0] >= vals[1] >= vals[2]
        # slowest decay is t^(1/2 - beta)
        assert vals[2] <= 0.1 * max(vals[0], 1e-300)
        assert appendix_integral(name, AuditPoint(0.09, 0.03, 0.03, GAMMA, NU, 0.0, 0.0)) == 0


def test_appendix_indicator():
    late = AuditPoint(0.09, 0.03, 0.03, GAMMA, NU, 2e-6, 2e-6)
    assert appendix_integral("steep_layer", late) == 0.0
    assert appendix_integral("mild_layer_regular", late) == 0.0
    assert appendix_integral("steep_weighted", late) > 0.0


def test_quadrature_failure(monkeypatch):
    def bad_quad(f, a, b, **kw):
        return 1.0, 1.0, {}
    monkeypatch.setattr(analysis.integrate, "quad", bad_quad)
    with pytest.raises(QuadratureFailure):
        appendix_integral("steep_weighted", PT)


def test_appendix_audit_grid():
    pts = integral_grid()
    assert len(pts) >= 100
    rep = audit_appendix_integrals(pts)
    frozen = {"steep_layer": 0.5323096395425068, "steep_weighted": 0.9219368492314906, "steep_layer_regular": 0.003116461710254052,
              "steep_regular": 0.014651290830403233, "mild_layer": 0.21925181095833993,
              "mild_weighted": 0.8148209836736614, "mild_layer_regular": 0.0029991768322989803,
              "mild_regular": 0.02415453654084184}
    for k, v in frozen.items():
        assert rep.max_ratio[k] == pytest.approx(v, rel=1e-8)
        assert rep.refinement_change[k] < 1e-6


def test_appendix_rejects_bad_point():
    bad = AuditPoint(0.09, 0.08, 0.08, 40.0, 1e-2, 1e-4, 1e-4)
    with pytest.raises(ValueError):
        audit_appendix_integrals([bad])


# --------------------------------------------------------- kernel lemmas

def test_kernel_lemma_bump_and_zero_probe():
    g = lemma_grid(128)
    pt = lemma_points()[0]
    rep = audit_kernel_lemmas([pt], [Probe(1, (0.8,), (0.15,), (1.0,))], g)
    assert rep.n_vacuous == 0
    for v in rep.max_ratio.values():
        assert math.isfinite(v) and v >= 0
    assert rep.max_ratio["neumann"] > 0 and rep.max_ratio["initial_data"] > 0
    rep0 = audit_kernel_lemmas([pt], [Probe(1, (0.8,), (0.15,), (0.0,))], g)
    assert rep0.n_vacuous == 1
    assert all(v == 0.0 for v in rep0.max_ratio.values())


def test_kernel_lemma_points_respect_hypothesis():
    for pt in lemma_points():
        top = pt.mu0 - pt.gamma * math.sqrt(pt.s)
        assert 0 < pt.mu < pt.mu_tilde < top
        assert pt.mu_tilde - pt.mu == pytest.approx((top - pt.mu) / pt.c)


# ------------------------------------------------------ nonlinear audit

def test_nonlinear_zero_and_shear(grid):
    p = WeightParams(nu=1e-2)
    r0 = audit_nonlinear_estimates(SpectralField.zeros(grid), p, 1e-5)
    assert all(math.isnan(v) for v in r0.values())
    r1 = audit_nonlinear_estimates(shear_field(grid, Shear()), p, 1e-5)
    assert all(v == 0.0 for v in r1.values() if not math.isnan(v))
    assert not math.isnan(r1["product_s"])


def test_nonlinear_random_field_finite(grid):
    p = WeightParams(nu=1e-2)
    r = audit_nonlinear_estimates(analysis.random_vorticity(grid, 3), p, 1e-5)
    assert all(math.isfinite(v) and v > 0 for v in r.values())


# ----------------------------------------------------------- monitoring

def _monitored(initial, backend="imex"):
    cfg = RunConfig(K=4, J=96, Ly=4.0, stretch=3.0, weights=WeightParams(nu=1e-2),
                    backend=backend, dt=5e-4, T_end=2e-3, output_every=2, initial=initial,
                    monitor_norms=True)
    return evolve(cfg)


def test_monitor_zero_datum_vacuous():
    rep = norm_boundedness_monitor(_monitored(BulkVortex(A=0.0)))
    assert rep.vacuous and not rep.violated


def test_monitor_steady_shear():
    tr = _monitored(Shear(), backend="euler")
    Z = [r.Z for r in tr.reports if r is not None]
    assert np.allclose(Z, Z[0], rtol=1e-12)
    rep = norm_boundedness_monitor(tr)
    assert rep.ratios[0] == 1.0 and not rep.violated
