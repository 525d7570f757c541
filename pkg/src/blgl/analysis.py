"""Layer diagnostics, the viscosity sweep, and numerical audits of the
weighted-norm inequalities.

Audits only certify boundedness on sampled grids: each inequality is
evaluated as lhs / rhs and the maximum ratio plays the role of the
implicit constant.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DegenerateFit, GridMismatch, NoLayer, QuadratureFailure
from .fields import Grid, SpectralField, d_x, make_grid, y_d_y
from .kernels import green_numeric, neumann_numeric, residual_kernel
from .solver import (RunConfig, Trajectory, boundary_datum, evolve, nonlinear_term,
                     to_physical, wall_amplitude)
from .weights import (WeightParams, _segment, _tail, mixed_derivatives, mu_grid,
                      s_mu_norm, s_norm, triple_norm, w_t, x_mu_norm, y_mu_norm,
                      z_norm)

WALL_FLOOR = 1e-12


# ------------------------------------------------------------- diagnostics

def wall_normal_profile(omega: SpectralField, oversample: int = 4) -> np.ndarray:
    """sup over x of |omega(x, y)| at every node."""
    M = oversample * omega.grid.n_modes
    return np.max(np.abs(to_physical(omega.coeffs, M)), axis=0)


def layer_width(omega: SpectralField) -> float:
    """Half-decay depth of sup_x |omega|, linearly interpolated."""
    P = wall_normal_profile(omega)
    y = omega.grid.nodes
    if P[0] < WALL_FLOOR:
        raise NoLayer(f"wall vorticity {P[0]:.3g} is below {WALL_FLOOR}")
    half = 0.5 * P[0]
    below = np.nonzero(P <= half)[0]
    if len(below) == 0:
        return float(omega.grid.Ly)
    j = int(below[0])
    lam = (P[j - 1] - half) / (P[j - 1] - P[j])
    return float(y[j - 1] + lam * (y[j] - y[j - 1]))


def displacement_thickness(omega: SpectralField, y_max: float = 0.25) -> float:
    """int y P dy / int P dy over y <= y_max, P = sup_x |omega|."""
    P = wall_normal_profile(omega)
    ys, Ps = _segment(omega.grid.nodes, P[None, :], y_max)
    den = np.trapezoid(Ps[0], ys)
    if den < WALL_FLOOR:
        raise NoLayer("no vorticity below y_max")
    return float(np.trapezoid(ys * Ps[0], ys) / den)


def _grad_sq(u, grid: Grid) -> np.ndarray:
    """sum over modes of |grad u|^2 per node, times 2 pi (Parseval in x)."""
    from .fields import d_y
    tot = np.zeros(grid.J)
    for comp in (u.u1, u.u2):
        tot += np.sum(np.abs(d_x(comp).coeffs) ** 2 + np.abs(d_y(comp).coeffs) ** 2, axis=0)
    return 2.0 * math.pi * tot


def kato_integral(traj: Trajectory, nu: float, c: float = 1.0):
    """(nu int_0^T int_{y <= c nu} |grad u|^2, nu int_0^T int |omega|^2)."""
    if not traj.times:
        return 0.0, 0.0
    grid = traj.omegas[0].grid
    y = grid.nodes
    layer, full = [], []
    for w, u in zip(traj.omegas, traj.velocities):
        g = _grad_sq(u, grid)
        ys, gs = _segment(y, g[None, :], c * nu)
        layer.append(np.trapezoid(gs[0], ys))
        o = 2.0 * math.pi * np.sum(np.abs(w.coeffs) ** 2, axis=0)
        full.append(np.trapezoid(o, y))
    t = np.asarray(traj.times)
    if len(t) < 2:
        return 0.0, 0.0
    return float(nu * np.trapezoid(layer, t)), float(nu * np.trapezoid(full, t))


def l2_distance(a: SpectralField, b: SpectralField) -> float:
    d = a.coeffs - b.coeffs
    return float(math.sqrt(2.0 * math.pi * np.trapezoid(np.sum(np.abs(d) ** 2, axis=0),
                                                       a.grid.nodes)))


def euler_distance(traj_ns: Trajectory, traj_euler: Trajectory) -> np.ndarray:
    """||u_ns(t) - u_euler(t)||_L2 over the strip at every output time."""
    if len(traj_ns.times) != len(traj_euler.times) or not np.allclose(
        traj_ns.times, traj_euler.times, rtol=1e-12, atol=1e-15
    ):
        raise GridMismatch("output times differ")
    if traj_ns.omegas and traj_ns.omegas[0].grid != traj_euler.omegas[0].grid:
        raise GridMismatch("grids differ")
    out = []
    for ua, ub in zip(traj_ns.velocities, traj_euler.velocities):
        out.append(math.hypot(l2_distance(ua.u1, ub.u1), l2_distance(ua.u2, ub.u2)))
    return np.array(out)


@dataclass
class SweepRecord:
    nu: float
    amp_times: np.ndarray
    wall_amp: np.ndarray
    times: np.ndarray
    width: np.ndarray
    t_form: float = math.inf
    width_at_half: float = math.nan
    kato_layer: float = math.nan
    kato_full: float = math.nan
    euler_dist: np.ndarray = field(default_factory=lambda: np.zeros(0))
    norm_series: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def max_amp(self) -> float:
        return float(np.max(self.wall_amp))

    @property
    def max_norm_ratio(self) -> float:
        s = self.norm_series[np.isfinite(self.norm_series)]
        if len(s) == 0 or s[0] == 0:
            return math.nan
        return float(np.max(s) / s[0])

    @property
    def euler_dist_sup(self) -> float:
        return float(np.max(self.euler_dist)) if len(self.euler_dist) else math.nan


def formation_time(record: SweepRecord, c: float = 0.25) -> float:
    """First time the wall amplitude reaches c / sqrt(nu); inf if never."""
    level = c / math.sqrt(record.nu)
    a = np.asarray(record.wall_amp, dtype=float)
    t = np.asarray(record.amp_times, dtype=float)
    hit = np.nonzero(a >= level)[0]
    if len(hit) == 0:
        return math.inf
    k = int(hit[0])
    if k == 0:
        return float(t[0])
    lam = (level - a[k - 1]) / (a[k] - a[k - 1])
    return float(t[k - 1] + lam * (t[k] - t[k - 1]))


def fit_exponent(xs, ys):
    """Least-squares slope of log y against log x, with r^2."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(np.unique(xs)) < 3:
        raise DegenerateFit(f"need 3 distinct abscissae, got {len(np.unique(xs))}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("fit_exponent needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    if not np.all(np.isfinite(ly)):
        return math.nan, math.nan
    dx, dy = lx - lx.mean(), ly - ly.mean()
    sxx, sxy, syy = dx @ dx, dx @ dy, dy @ dy
    slope = sxy / sxx
    r2 = 1.0 if syy == 0 else sxy * sxy / (sxx * syy)
    return float(slope), float(r2)


# ------------------------------------------------------------------ sweep

def _sweep_one(cfg: RunConfig, c_form: float, euler: Optional[Trajectory]) -> SweepRecord:
    traj = evolve(cfg)
    nu = cfg.nu
    widths = []
    for w in traj.omegas:
        try:
            widths.append(layer_width(w))
        except NoLayer:
            widths.append(math.nan)
    rec = SweepRecord(nu, traj.step_times, traj.wall_amp, np.asarray(traj.times),
                      np.asarray(widths))
    rec.t_form = formation_time(rec, c_form)
    half = 0.5 * rec.max_amp
    for w in traj.omegas:
        if wall_amplitude(w) >= half:
            rec.width_at_half = layer_width(w)
            break
    rec.kato_layer, rec.kato_full = kato_integral(traj, nu)
    if euler is not None:
        rec.euler_dist = euler_distance(traj, euler)
    rec.norm_series = np.array([r.triple if r is not None else math.nan
                                for r in traj.reports])
    return rec


@dataclass
class SweepResult:
    records: list
    amp_fit: tuple = (math.nan, math.nan)
    width_fit: tuple = (math.nan, math.nan)
    tform_fit: tuple = (math.nan, math.nan)
    warnings: list = field(default_factory=list)

    @property
    def nus(self) -> np.ndarray:
        return np.array([r.nu for r in self.records])


def sweep_configs(base: RunConfig, nus: Sequence[float]) -> list:
    nu_min = min(nus)
    return [replace(base, weights=replace(base.weights, nu=float(nu)), nu_min=nu_min)
            for nu in nus]


def euler_reference(base: RunConfig, nus: Sequence[float]) -> Trajectory:
    """Inviscid run on the sweep grid; it does not depend on nu."""
    cfg = replace(sweep_configs(base, nus)[0], backend="euler", monitor_norms=False)
    return evolve(cfg)


def worker_count(default: int = 1) -> int:
    v = os.environ.get("BLGL_WORKERS")
    if v is None:
        return default
    try:
        return max(1, int(v))
    except ValueError:
        return default


def run_sweep(base: RunConfig, nus: Sequence[float], c_form: float = 0.25,
              workers: Optional[int] = None, with_euler: bool = True) -> SweepResult:
    nus = sorted(float(n) for n in nus)
    cfgs = sweep_configs(base, nus)
    euler = euler_reference(base, nus) if with_euler else None
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(cfgs))) as ex:
            recs = list(ex.map(_sweep_one, cfgs, [c_form] * len(cfgs), [euler] * len(cfgs)))
    else:
        recs = [_sweep_one(c, c_form, euler) for c in cfgs]
    recs.sort(key=lambda r: r.nu)
    res = SweepResult(recs)
    x = [r.nu for r in recs]
    try:
        res.amp_fit = fit_exponent(x, [r.max_amp for r in recs])
        res.width_fit = fit_exponent(x, [r.width_at_half for r in recs])
        tf = [r.t_form for r in recs]
        res.tform_fit = fit_exponent(x, tf) if all(map(math.isfinite, tf)) else (math.nan, math.nan)
    except DegenerateFit as exc:
        res.warnings.append(f"DegenerateFit: {exc}")
    return res


# ------------------------------------------------------ appendix integrals

@dataclass(frozen=True)
class AuditPoint:
    mu0: float
    mu: float
    mu_tilde: float
    gamma: float
    nu: float
    t: float
    s: float
    alpha: float = 0.25
    beta: float = 0.2
    c: float = 2.0
    lhs: float = math.nan
    rhs: float = math.nan
    ratio: float = math.nan

    @property
    def gap(self) -> float:
        """mu0 - mu, the analyticity margin at mu."""
        return self.mu0 - self.mu


# family: "steep" carries the margin powers (1 + alpha, 3/2 + alpha), "mild"
# (alpha, 1/2 + alpha).  kind: "layer" 1/sqrt(nu) on t <= nu^2/gamma^2 with
# the 1/sqrt(t - s) singularity, "weighted" s^-beta with the singularity,
# the "_regular" variants integrate against ds with no singularity.
KINDS = ("layer", "weighted", "layer_regular", "regular")
INTEGRALS = tuple(f"{fam}_{kind}" for fam in ("steep", "mild") for kind in KINDS)


def _quad(f, a: float, b: float, pieces: int = 1) -> float:
    edges = np.linspace(a, b, pieces + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err, *_ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-11, limit=400,
                                      full_output=1)
        if not np.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
            raise QuadratureFailure(
                f"quad error {err:.3g} exceeds 1e-8 relative on [{lo:.3g}, {hi:.3g}]"
            )
        total += val
    return total


def appendix_integral(name: str, pt: AuditPoint, pieces: int = 1) -> float:
    """One of the INTEGRALS at a point, with s = t sin^2(theta)."""
    a, g, t, nu = pt.gap, pt.gamma, pt.t, pt.nu
    if t <= 0:
        return 0.0
    if a - g * math.sqrt(t) <= 0:
        raise ValueError("point violates mu < mu0 - gamma sqrt(t)")
    family, kind = name.split("_", 1)
    k = KINDS.index(kind) + 1
    power = {"steep": (1.0 + pt.alpha, 1.5 + pt.alpha), "mild": (pt.alpha, 0.5 + pt.alpha)}[family]
    p = power[0] if k <= 2 else power[1]
    active = t <= nu * nu / (g * g)
    if k in (1, 3) and not active:
        return 0.0
    rt = math.sqrt(t)

    def margin(th):
        return a - g * rt * math.sin(th)

    if k == 1:
        f = lambda th: margin(th) ** -p * 2.0 * rt * math.sin(th) / math.sqrt(nu)
    elif k == 2:
        f = lambda th: (margin(th) ** -p * 2.0 * rt * math.sin(th)
                        * (t * math.sin(th) ** 2) ** -pt.beta)
    elif k == 3:
        f = lambda th: margin(th) ** -p * 2.0 * t * math.sin(th) * math.cos(th) / math.sqrt(nu)
    else:
        f = lambda th: margin(th) ** -p * 2.0 * t * math.sin(th) * math.cos(th)
    return _quad(f, 0.0, 0.5 * math.pi, pieces)


def appendix_bound(name: str, pt: AuditPoint) -> float:
    """Right-hand side of the claimed estimate, constants dropped."""
    d = pt.gap - pt.gamma * math.sqrt(pt.t)
    g, al = pt.gamma, pt.alpha
    if name in ("steep_layer", "steep_layer_regular", "steep_regular"):
        return g ** -0.5 * d ** -(0.5 + al)
    if name == "steep_weighted":
        return g ** -0.5 / d * pt.t ** (0.25 - pt.beta)
    if name == "mild_layer":
        return g ** -(1.0 - 2.0 * al)
    if name == "mild_weighted":
        return g ** -al
    return 1.0 / g


def integral_grid(densify: int = 0, mu0: float = 0.09, alpha: float = 0.25,
                  beta: float = 0.2) -> list:
    """Hypothesis-respecting points; each densification inserts midpoints."""

    def axis(lo, hi, n, log):
        n = (n - 1) * 2 ** densify + 1
        return np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)

    pts = []
    for g in axis(5.0, 40.0, 3, True):
        for nu in axis(1e-4, 1e-2, 3, True):
            for mu in axis(0.005, 0.06, 3, False):
                horizon = ((mu0 - mu) / g) ** 2
                for f in axis(0.1, 0.9, 4, False):
                    t = f * horizon
                    pts.append(AuditPoint(mu0, mu, mu, g, nu, t, t, alpha, beta))
    return pts


@dataclass
class AuditReport:
    name: str
    max_ratio: dict
    points: dict = field(default_factory=dict)
    n_points: int = 0
    n_vacuous: int = 0
    refinement_change: dict = field(default_factory=dict)

    def rows(self):
        for k in sorted(self.max_ratio):
            yield k, self.max_ratio[k], self.refinement_change.get(k, math.nan)


def audit_appendix_integrals(points: Optional[list] = None, refine: bool = True,
                             pieces: int = 4) -> AuditReport:
    """Max of lhs / claimed bound for every entry of INTEGRALS over the points."""
    points = integral_grid() if points is None else points
    rep = AuditReport("appendix", {k: 0.0 for k in INTEGRALS}, n_points=len(points))
    rep.points = {k: [] for k in INTEGRALS}
    for pt in points:
        if not (0 < pt.mu < pt.mu0 and pt.gap - pt.gamma * math.sqrt(pt.t) > 0):
            raise ValueError(f"point outside the hypothesis region: {pt}")
        for k in INTEGRALS:
            lhs = appendix_integral(k, pt)
            rhs = appendix_bound(k, pt)
            r = lhs / rhs
            rep.points[k].append(replace(pt, lhs=lhs, rhs=rhs, ratio=r))
            rep.max_ratio[k] = max(rep.max_ratio[k], r)
            if refine:
                r4 = appendix_integral(k, pt, pieces) / rhs
                ch = abs(r4 - r) / max(abs(r), 1e-300) if r else abs(r4)
                rep.refinement_change[k] = max(rep.refinement_change.get(k, 0.0), ch)
    return rep


# ----------------------------------------------------------- kernel lemmas

def _mode_field(grid: Grid, xi: int, prof: np.ndarray) -> SpectralField:
    return SpectralField.from_modes(grid, {xi: prof})


def _weighted_sup(prof, grid, xi, mu_factor, mu_domain, t, p) -> float:
    """sup over [0, 1 + mu_domain] of w_t |prof| exp(eps0 (1 + mu_factor - y)_+ |xi|)."""
    ys, Fs = _segment(grid.nodes, np.abs(np.asarray(prof))[None, :], 1.0 + mu_domain)
    fac = np.exp(p.eps0 * np.maximum(1.0 + mu_factor - ys, 0.0) * abs(xi))
    return float(np.max(Fs[0] * w_t(ys, t, p) * fac))


def _l2_tail(prof, grid, a: float) -> float:
    ys, Fs = _tail(grid.nodes, np.abs(np.asarray(prof))[None, :] ** 2, a)
    return float(math.sqrt(np.trapezoid(Fs[0], ys))) if len(ys) > 1 else 0.0


def _sup_tail(prof, grid, a: float) -> float:
    ys, Fs = _tail(grid.nodes, np.abs(np.asarray(prof))[None, :], a)
    return float(np.max(Fs[0])) if len(ys) else 0.0


def _ydy(prof, grid):
    out = grid.nodes * (grid.D1 @ prof)
    out[0] = 0.0
    return out


def _dy(prof, grid, order=1):
    return (grid.D1 if order == 1 else grid.D2) @ prof


@dataclass
class Probe:
    xi: int
    centers: tuple
    widths: tuple
    amps: tuple

    def profile(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros(len(y), dtype=complex)
        for c, w, a in zip(self.centers, self.widths, self.amps):
            out += a * np.exp(-0.5 * ((y - c) / w) ** 2)
        return out


def make_probes(n: int = 32, seed: int = 0, max_xi: int = 4) -> list:
    """Seeded random smooth mode profiles: three Gaussian bumps each."""
    rng = np.random.default_rng(seed)
    probes = []
    for _ in range(n):
        xi = int(rng.integers(0, max_xi + 1))
        centers = tuple(rng.uniform(0.05, 1.6, 3))
        widths = tuple(rng.uniform(0.08, 0.3, 3))
        amps = tuple(rng.normal(size=3) + 1j * rng.normal(size=3))
        probes.append(Probe(xi, centers, widths, amps))
    return probes


def lemma_points(mu0: float = 0.09, gamma: float = 1.0, c: float = 2.0) -> list:
    pts = []
    for nu in (1e-2, 1e-3):
        for t in (1e-3, 4e-3):
            s = 0.5 * t
            for mu in (0.01, 0.03):
                top = mu0 - gamma * math.sqrt(s)
                mt = mu + (top - mu) / c
                pts.append(AuditPoint(mu0, mu, mt, gamma, nu, t, s, c=c))
    return pts


def _params(pt: AuditPoint) -> WeightParams:
    return WeightParams(nu=pt.nu, gamma=pt.gamma, beta=pt.beta, mu0=pt.mu0, alpha=pt.alpha)


class _KernelCache:
    def __init__(self, grid: Grid):
        self.grid = grid
        self.store = {}

    def get(self, kind: str, t: float, xi: int, nu: float) -> np.ndarray:
        key = (kind, t, abs(xi), nu)
        if key not in self.store:
            g = self.grid
            if kind == "H":
                G = neumann_numeric(t, xi, nu, g, method="exact").G
            elif kind == "R":
                G = residual_kernel(green_numeric(t, xi, nu, g, method="exact")).G
            else:
                G = green_numeric(t, xi, nu, g, method="exact").G
            self.store[key] = G
        return self.store[key]


def _apply(G, prof, grid):
    return G @ (prof * grid.quad_weights)


def _interior_lemma(kind: str, pt: AuditPoint, probe: Probe, grid: Grid,
                    cache: _KernelCache) -> float:
    """Ratio for the interior kernel estimates (Neumann part or residual part)."""
    p = _params(pt)
    xi = probe.xi
    N = probe.profile(grid.nodes)
    out = cache.get(kind, pt.t - pt.s, xi, pt.nu)
    v = _apply(out, N, grid)
    tail_w = (pt.mu0 - pt.mu - pt.gamma * math.sqrt(pt.s)) ** -0.5
    best = 0.0
    for i, j in ((0, 0), (1, 0), (0, 1)):
        lhs_prof = (xi ** i) * (_ydy(v, grid) if j else v)
        lhs = _weighted_sup(lhs_prof, grid, xi, pt.mu, pt.mu, pt.t, p)
        Ni = (xi ** i) * N
        if kind == "H":
            rhs = (_weighted_sup(N, grid, xi, pt.mu, pt.mu_tilde, pt.s, p)
                   + _weighted_sup(_ydy(Ni, grid), grid, xi, pt.mu, pt.mu_tilde, pt.s, p)
                   + tail_w * _l2_tail(_dy(Ni, grid) if j else Ni, grid, 1 + pt.mu_tilde))
        else:
            rhs = (_weighted_sup(_ydy(Ni, grid) if j else Ni, grid, xi, pt.mu, pt.mu_tilde,
                                 pt.s, p)
                   + _weighted_sup(N, grid, xi, pt.mu, pt.mu_tilde, pt.s, p)
                   + tail_w * _l2_tail(_dy(Ni, grid) if j else Ni, grid, 1 + pt.mu_tilde))
        if rhs == 0.0:
            if lhs == 0.0:
                continue
            return math.inf
        best = max(best, lhs / rhs)
    return best


def _boundary_lemma(pt: AuditPoint, probe: Probe, grid: Grid, cache: _KernelCache) -> float:
    """Trace-term estimate: kernel column at the wall times the boundary datum."""
    p = _params(pt)
    xi = probe.xi
    N = probe.profile(grid.nodes)
    Nf = _mode_field(grid, xi, N)
    B = boundary_datum(Nf)[xi + grid.K]
    tau = pt.t - pt.s
    col = cache.get("G", tau, xi, pt.nu)[:, 0] * B
    ind = 1.0 if pt.t <= pt.nu ** 2 / pt.gamma ** 2 else 0.0
    front = tau ** -0.5 * (ind / math.sqrt(pt.nu) + pt.s ** -pt.beta)
    best = 0.0
    for i, j in ((0, 0), (1, 0), (0, 1)):
        prof = (xi ** i) * (_ydy(col, grid) if j else col)
        lhs = _weighted_sup(prof, grid, xi, pt.mu, pt.mu, pt.t, p)
        Nx = _mode_field(grid, xi, (xi ** i) * N)
        rhs = (front * (y_mu_norm(Nx, pt.mu, p) + s_mu_norm(Nx, pt.mu))
               + (1.0 + ind / math.sqrt(pt.nu)) * _weighted_sup(
                   (xi ** i) * N, grid, xi, pt.mu, pt.mu, pt.s, p))
        if rhs == 0.0:
            if lhs == 0.0:
                continue
            return math.inf
        best = max(best, lhs / rhs)
    return best


def _initial_lemma(pt: AuditPoint, probe: Probe, grid: Grid, cache: _KernelCache) -> float:
    """Initial-data estimate, summed over i + j <= 2."""
    p = _params(pt)
    xi = probe.xi
    w0 = probe.profile(grid.nodes)
    v = _apply(cache.get("G", pt.t, xi, pt.nu), w0, grid)
    lhs = rhs = 0.0
    for i in range(3):
        for j in range(3 - i):
            a, b = v, w0
            for _ in range(j):
                a, b = _ydy(a, grid), _ydy(b, grid)
            lhs += _weighted_sup((xi ** i) * a, grid, xi, pt.mu, pt.mu, pt.t, p)
            rhs += _weighted_sup((xi ** i) * b, grid, xi, pt.mu, pt.mu, pt.t, p)
            # the tail sup carries d_y to the power i, as written
            tail = w0 if i == 0 else _dy(w0, grid, i)
            rhs += _sup_tail((xi ** i) * tail, grid, 1.0 + pt.mu)
    if rhs == 0.0:
        return math.nan if lhs == 0.0 else math.inf
    return lhs / rhs


KERNEL_LEMMAS = ("neumann", "residual", "wall_trace", "initial_data")


def lemma_grid(J: int = 256, Ly: float = 4.0, stretch: float = 4.0, K: int = 4) -> Grid:
    return make_grid(K, J, Ly, stretch, 1e-3)


def audit_kernel_lemmas(points: Optional[list] = None, probes: Optional[list] = None,
                        grid: Optional[Grid] = None) -> AuditReport:
    points = lemma_points() if points is None else points
    probes = make_probes() if probes is None else probes
    grid = lemma_grid() if grid is None else grid
    cache = _KernelCache(grid)
    rep = AuditReport("kernels", {k: 0.0 for k in KERNEL_LEMMAS}, n_points=len(points))
    rep.points = {k: [] for k in KERNEL_LEMMAS}
    for pt in points:
        if not (0 < pt.mu < pt.mu_tilde < pt.mu0 - pt.gamma * math.sqrt(pt.s)
                and pt.mu_tilde - pt.mu >= (pt.mu0 - pt.mu - pt.gamma * math.sqrt(pt.s)) / pt.c
                * (1 - 1e-12)):
            raise ValueError(f"point outside the hypothesis region: {pt}")
        for probe in probes:
            if not any(probe.amps):
                rep.n_vacuous += 1
                continue
            vals = {
                "neumann": _interior_lemma("H", pt, probe, grid, cache),
                "residual": _interior_lemma("R", pt, probe, grid, cache),
                "wall_trace": _boundary_lemma(pt, probe, grid, cache),
                "initial_data": _initial_lemma(pt, probe, grid, cache),
            }
            for k, r in vals.items():
                if math.isnan(r):
                    rep.n_vacuous += 1
                    continue
                rep.points[k].append(replace(pt, ratio=r))
                rep.max_ratio[k] = max(rep.max_ratio[k], r)
    return rep


# -------------------------------------------------------- nonlinear terms

NONLINEAR_ESTIMATES = ("product_y", "product_s", "product_x")


def _xsum(ders, keys, mu, s, p):
    return sum(x_mu_norm(ders[k], mu, s, p) for k in keys)


def _ysum(ders, keys, mu, p):
    return sum(y_mu_norm(ders[k], mu, p) for k in keys)


def audit_nonlinear_estimates(omega: SpectralField, p: WeightParams, t: float,
                              mu_samples: int = 8, recession: str = "sqrt") -> dict:
    """Max over mu in (0, mu0 - gamma t) of lhs / rhs for the three product
    estimates.  Values are nan when both sides vanish."""
    N = nonlinear_term(omega)
    dN = mixed_derivatives(N, 1)
    dw = mixed_derivatives(omega, 2)
    le1 = [k for k in dw if sum(k) <= 1]
    le2 = list(dw)
    eq1 = [k for k in dw if sum(k) == 1]
    dx_w = {i: dw[(i, 0)] for i in range(3)}
    triple = triple_norm(omega, t, p, max(mu_samples, 8), recession).triple
    zw = z_norm(omega)
    dN_plain = mixed_derivatives(N, 1, "d_y")
    top = p.mu0 - p.gamma * t
    out = {k: 0.0 for k in NONLINEAR_ESTIMATES}
    seen = {k: False for k in NONLINEAR_ESTIMATES}
    for mu in mu_grid(top, mu_samples)[1:]:
        A1 = sum(y_mu_norm(dx_w[i], mu, p) + s_mu_norm(dx_w[i], mu) for i in range(2))
        A2 = A1 + y_mu_norm(dx_w[2], mu, p) + s_mu_norm(dx_w[2], mu)
        xw0 = x_mu_norm(omega, mu, t, p)
        lhs_x = _xsum(dN, dN, mu, t, p)
        rhs_x = (A1 * _xsum(dw, le2, mu, t, p) + A2 * _xsum(dw, le1, mu, t, p)
                + xw0 * _xsum(dw, eq1, mu, t, p))
        lhs_y = _ysum(dN, dN, mu, p)
        rhs_y = (A1 * _ysum(dw, le2, mu, p) + A2 * _ysum(dw, le1, mu, p)
                + xw0 * _ysum(dw, eq1, mu, p))
        lhs_s = sum(s_mu_norm(g, mu) for g in dN_plain.values())
        rhs_s = triple * zw
        for k, (l, r) in {"product_x": (lhs_x, rhs_x), "product_y": (lhs_y, rhs_y),
                             "product_s": (lhs_s, rhs_s)}.items():
            if r == 0.0 and l == 0.0:
                continue
            seen[k] = True
            out[k] = max(out[k], l / r if r > 0 else math.inf)
    return {k: (out[k] if seen[k] else math.nan) for k in NONLINEAR_ESTIMATES}


def random_vorticity(grid: Grid, seed: int, max_xi: int = 3) -> SpectralField:
    """Seeded Hermitian field made of smooth bumps away from the wall."""
    rng = np.random.default_rng(seed)
    y = grid.nodes
    c = np.zeros((grid.n_modes, grid.J), dtype=complex)
    for xi in range(0, min(max_xi, grid.K) + 1):
        prof = np.zeros(grid.J, dtype=complex)
        for _ in range(2):
            y0 = rng.uniform(0.3, 1.5)
            sg = rng.uniform(0.1, 0.3)
            a = rng.normal() + (1j * rng.normal() if xi else 0.0)
            prof += a * np.exp(-0.5 * ((y - y0) / sg) ** 2)
        prof /= 1.0 + xi * xi
        c[xi + grid.K] = prof
        if xi:
            c[-xi + grid.K] = np.conj(prof)
    return SpectralField(grid, c)


def audit_nonlinear_probes(n: int = 32, seed: int = 0, grid: Optional[Grid] = None,
                           p: Optional[WeightParams] = None, t: float = 1e-5) -> AuditReport:
    grid = lemma_grid() if grid is None else grid
    p = WeightParams(nu=1e-3) if p is None else p
    rep = AuditReport("nonlinear", {k: 0.0 for k in NONLINEAR_ESTIMATES}, n_points=n)
    rep.points = {k: [] for k in NONLINEAR_ESTIMATES}
    for k in range(n):
        r = audit_nonlinear_estimates(random_vorticity(grid, seed + k), p, t)
        for name, v in r.items():
            if math.isnan(v):
                rep.n_vacuous += 1
                continue
            rep.points[name].append(v)
            rep.max_ratio[name] = max(rep.max_ratio[name], v)
    return rep


# ------------------------------------------------------ norm monitoring

@dataclass
class MonitorReport:
    max_ratio: float
    ratios: np.ndarray
    times: np.ndarray
    ceiling: float
    violated: bool
    vacuous: bool


def norm_boundedness_monitor(traj: Trajectory, M: Optional[float] = None,
                             ceiling: float = 10.0) -> MonitorReport:
    """max_t triple(t) / M over output times that carry a norm report."""
    pairs = [(t, r.triple) for t, r in zip(traj.times, traj.reports) if r is not None]
    times = np.array([t for t, _ in pairs])
    vals = np.array([v for _, v in pairs])
    if M is None:
        M = vals[0] if len(vals) else 0.0
    if M == 0.0:
        return MonitorReport(math.nan, np.full(len(vals), math.nan), times, ceiling,
                             False, True)
    ratios = vals / M
    mx = float(np.max(ratios)) if len(ratios) else math.nan
    return MonitorReport(mx, ratios, times, ceiling, bool(mx > ceiling), False)
