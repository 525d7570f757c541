"""Time evolution of the vorticity system in the strip.

Two viscous backends share the same semi-discrete operator: an IMEX
Crank-Nicolson stepper and a Picard iteration on the Duhamel formula with
exponential quadrature weights.  A third backend evolves the inviscid
transport equation and serves as the Euler reference.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.linalg import solve_banded

from .errors import (CFLViolation, HorizonExceeded, NumericalInstability,
                     PicardDivergence, ValidationError)
from .fields import (Grid, SpectralField, VelocityPair, d_x, d_y, make_grid,
                     poisson_solve, velocity_from_vorticity)
from .kernels import robin_operator
from .weights import NormReport, WeightParams, triple_norm

BACKENDS = ("imex", "duhamel", "euler")


@dataclass(frozen=True)
class BulkVortex:
    """A cos(xi0 x) times a Gaussian-based profile centred at y0.

    The profile (1 + kappa (y - y0) / sigma) exp(-(y - y0)^2 / (2 sigma^2)) has
    kappa chosen so the induced wall slip of the mode vanishes; the result is
    rescaled to peak value A.
    """

    A: float = 1.0
    xi0: int = 1
    y0: float = 1.0
    sigma: float = 0.15
    kind: str = field(default="bulk_vortex", init=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("sigma", "sigma > 0")
        if not self.y0 - 3 * self.sigma > 0:
            raise ValidationError("y0", "y0 - 3 sigma > 0")
        if int(self.xi0) != self.xi0 or self.xi0 < 1:
            raise ValidationError("xi0", "integer >= 1")


@dataclass(frozen=True)
class Shear:
    """Steady-under-advection datum carried only by the xi = 0 mode."""

    profile: str = "gaussian"
    A: float = 1.0
    y0: float = 1.0
    sigma: float = 0.15
    kind: str = field(default="shear", init=False)

    def __post_init__(self):
        if self.profile not in ("gaussian", "uniform", "zero"):
            raise ValidationError("profile", "one of gaussian, uniform, zero")


@dataclass(frozen=True)
class Custom:
    path: str
    kind: str = field(default="custom", init=False)


InitialDatum = Union[BulkVortex, Shear, Custom]


@dataclass(frozen=True)
class RunConfig:
    K: int
    J: int
    Ly: float
    stretch: float
    weights: WeightParams
    backend: str = "imex"
    dt: float = 1e-4
    T_end: float = 0.0045
    initial: InitialDatum = BulkVortex()
    dealias: bool = True
    picard_iters: int = 50
    picard_tol: float = 1e-8
    output_every: int = 10
    monitor_norms: bool = True
    norm_recession: str = "linear"
    mu_samples: int = 16
    nu_min: Optional[float] = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValidationError("backend", f"one of {', '.join(BACKENDS)}")
        if not self.dt > 0:
            raise ValidationError("dt", "dt > 0")
        if not self.T_end > 0:
            raise ValidationError("T_end", "T_end > 0")
        if self.picard_iters < 1:
            raise ValidationError("picard_iters", "picard_iters >= 1")
        if self.output_every < 1:
            raise ValidationError("output_every", "output_every >= 1")
        if self.norm_recession not in ("sqrt", "linear"):
            raise ValidationError("norm_recession", "sqrt or linear")

    @property
    def nu(self) -> float:
        return self.weights.nu

    def grid(self) -> Grid:
        return make_grid(self.K, self.J, self.Ly, self.stretch,
                         self.nu_min if self.nu_min is not None else self.weights.nu)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["initial"] = {"kind": self.initial.kind, **asdict(self.initial)}
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Trajectory:
    times: list
    omegas: list
    velocities: list
    reports: list
    config_hash: str
    step_times: np.ndarray = None
    wall_amp: np.ndarray = None
    wall_slip: np.ndarray = None
    picard_counts: list = None


# ---------------------------------------------------------------- datums

def bulk_vortex_field(grid: Grid, d: BulkVortex) -> SpectralField:
    y = grid.nodes
    s = (y - d.y0) / d.sigma
    g0 = np.exp(-0.5 * s * s)
    g1 = s * g0
    if d.xi0 > grid.K:
        raise ValidationError("xi0", f"xi0 <= K = {grid.K}")

    def slip(profile):
        f = SpectralField.from_modes(grid, {d.xi0: profile})
        return velocity_from_vorticity(f).u1.mode(d.xi0)[0]

    a0, a1 = slip(g0), slip(g1)
    kappa = -(a0 / a1).real
    prof = g0 + kappa * g1
    prof = prof / np.max(np.abs(prof))
    half = 0.5 * d.A * prof
    return SpectralField.from_modes(grid, {d.xi0: half, -d.xi0: half})


def shear_field(grid: Grid, d: Shear) -> SpectralField:
    y = grid.nodes
    if d.profile == "gaussian":
        prof = d.A * np.exp(-0.5 * ((y - d.y0) / d.sigma) ** 2)
    elif d.profile == "uniform":
        prof = d.A * np.ones_like(y)
    else:
        prof = np.zeros_like(y)
    return SpectralField.from_modes(grid, {0: prof})


def initial_field(config: RunConfig, grid: Grid) -> SpectralField:
    d = config.initial
    if isinstance(d, BulkVortex):
        return bulk_vortex_field(grid, d)
    if isinstance(d, Shear):
        return shear_field(grid, d)
    if isinstance(d, Custom):
        from .snapshot import read_snapshot
        f, _ = read_snapshot(d.path)
        if f.grid != grid:
            raise ValidationError("initial", "snapshot grid must match the run grid")
        return f
    raise ValidationError("initial", "unknown initial datum")


# ------------------------------------------------------- nonlinear terms

def _n_phys(K: int, dealias: bool) -> int:
    return 3 * K + 1 if dealias else 2 * K + 1


def to_physical(c: np.ndarray, M: int) -> np.ndarray:
    """(2K+1, J) coefficients -> (M, J) samples at x_l = 2 pi l / M."""
    K = (c.shape[0] - 1) // 2
    buf = np.zeros((M, c.shape[1]), dtype=complex)
    buf[:K + 1] = c[K:]
    buf[M - K:] = c[:K]
    return np.fft.ifft(buf, axis=0) * M


def from_physical(v: np.ndarray, K: int) -> np.ndarray:
    M = v.shape[0]
    F = np.fft.fft(v, axis=0) / M
    return np.concatenate([F[M - K:], F[:K + 1]], axis=0)


def _symmetrize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(c[::-1]))


def advection(omega: SpectralField, dealias: bool = True):
    """(N, u, max |u|) with N = -(u . grad omega)."""
    K = omega.grid.K
    M = _n_phys(K, dealias)
    u = velocity_from_vorticity(omega)
    wx = to_physical(d_x(omega).coeffs, M)
    wy = to_physical(d_y(omega).coeffs, M)
    u1 = to_physical(u.u1.coeffs, M)
    u2 = to_physical(u.u2.coeffs, M)
    Np = -(u1 * wx + u2 * wy)
    c = from_physical(Np, K)
    if omega.is_hermitian(tol=0.0):
        c = _symmetrize(c)
    umax = float(np.sqrt(np.max(np.abs(u1) ** 2 + np.abs(u2) ** 2)))
    return omega.with_coeffs(c), u, umax


def nonlinear_term(omega: SpectralField, dealias: bool = True) -> SpectralField:
    return advection(omega, dealias)[0]


def _strip_kernel(grid: Grid, xi: int) -> np.ndarray:
    y, a = grid.nodes, abs(xi)
    if a == 0:
        return 1.0 - y / grid.Ly
    return np.sinh(a * (grid.Ly - y)) / np.sinh(a * grid.Ly)


def boundary_datum(N: SpectralField, method: str = "poisson") -> np.ndarray:
    """B_xi = -(d_y Laplacian^-1 N_xi)(0) for every mode.

    method "poisson" solves the strip Poisson problem and differentiates at the
    wall; "quadrature" integrates N against the strip kernel
    sinh(|xi|(Ly - z)) / sinh(|xi| Ly); "half_space" uses exp(-|xi| z).
    """
    g = N.grid
    if method == "poisson":
        phi = poisson_solve(N)
        return -(g.D1[0] @ phi.coeffs.T).ravel()
    out = np.zeros(g.n_modes, dtype=complex)
    for r, xi in enumerate(g.xis):
        if method == "quadrature":
            k = _strip_kernel(g, xi)
        elif method == "half_space":
            k = np.exp(-abs(xi) * g.nodes)
        else:
            raise ValueError(f"unknown method {method!r}")
        # the strip Green's function is negative, so the two signs cancel
        out[r] = np.sum(g.quad_weights * k * N.coeffs[r])
    return out


def wall_amplitude(omega: SpectralField, oversample: int = 4) -> float:
    """sup over x of |omega(x, 0)| sampled on a fine x grid."""
    M = oversample * omega.grid.n_modes
    return float(np.max(np.abs(to_physical(omega.coeffs[:, :1], M))))


# ---------------------------------------------------------- IMEX stepper

class _ModeOps:
    """Robin operators for every |xi| of a grid at one viscosity."""

    def __init__(self, grid: Grid, nu: float):
        self.grid = grid
        self.nu = nu
        self.ops = {a: robin_operator(grid, nu, float(a), nu * a * a) for a in range(grid.K + 1)}
        self._lhs = {}

    def lhs(self, a: int, dt: float) -> np.ndarray:
        key = (a, dt)
        if key not in self._lhs:
            self._lhs[key] = self.ops[a].bands(-0.5 * dt)
        return self._lhs[key]

    def rows(self, a: int):
        K = self.grid.K
        return [K] if a == 0 else [K + a, K - a]


@lru_cache(maxsize=64)
def _mode_ops(grid: Grid, nu: float) -> _ModeOps:
    return _ModeOps(grid, nu)


def _forcing(omega: SpectralField, ops: _ModeOps, dealias: bool, linear: bool):
    """Right-hand side source N + wall_gain * B on the unknown rows, and max |u|."""
    n = omega.grid.J - 1
    if linear:
        # no advection, hence no advective CFL limit
        return np.zeros((omega.grid.n_modes, n), dtype=complex), 0.0
    N, _, umax = advection(omega, dealias)
    B = boundary_datum(N)
    F = N.coeffs[:, :n].copy()
    F[:, 0] += ops.ops[0].wall_gain * B
    return F, umax


def _cn_solve(omega_c: np.ndarray, F: np.ndarray, dt: float, ops: _ModeOps) -> np.ndarray:
    n = ops.grid.J - 1
    out = np.zeros_like(omega_c)
    for a, op in ops.ops.items():
        rows = ops.rows(a)
        w = omega_c[rows, :n].T
        rhs = w + 0.5 * dt * op.matvec(w) + dt * F[rows].T
        out[rows, :n] = solve_banded((1, 1), ops.lhs(a, dt), rhs).T
    return out


def step_imex(omega: SpectralField, dt: float, p: WeightParams, dealias: bool = True,
              linear: bool = False) -> SpectralField:
    """One Crank-Nicolson / Heun step with the inhomogeneous Robin wall condition."""
    g = omega.grid
    ops = _mode_ops(g, float(p.nu))
    F0, umax = _forcing(omega, ops, dealias, linear)
    if umax > 0 and dt > 0.5 * g.h_min / umax:
        raise CFLViolation(
            f"dt = {dt:.3g} exceeds 0.5 h_min / max|u| = {0.5 * g.h_min / umax:.3g}"
        )
    pred = omega.with_coeffs(_cn_solve(omega.coeffs, F0, dt, ops))
    F1, _ = _forcing(pred, ops, dealias, linear)
    new = _cn_solve(omega.coeffs, 0.5 * (F0 + F1), dt, ops)
    if omega.is_hermitian(tol=0.0):
        new = _symmetrize(new)
    s0, s1 = omega.sup(), float(np.max(np.abs(new)))
    if not np.all(np.isfinite(new)) or (s0 > 0 and s1 > 10 * s0):
        raise NumericalInstability(f"sup|omega| jumped from {s0:.3g} to {s1:.3g}")
    return omega.with_coeffs(new)


# --------------------------------------------------------- Duhamel backend

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_NODES = 0.5 * (_GL_X + 1.0)  # on [0, 1]


def _lagrange_coeffs(nodes: np.ndarray) -> np.ndarray:
    """Row m holds the power-basis coefficients of the m-th Lagrange polynomial."""
    V = np.vander(nodes, increasing=True)
    return np.linalg.inv(V).T


def exp_weights(lam: np.ndarray, nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """W[i, m, e] = int_0^{x_i} exp(lam_e (x_i - s)) l_m(s) ds on the unit interval.

    Small |lam x| uses 32-point Gauss-Legendre; otherwise repeated integration
    by parts, which terminates because l_m has degree len(nodes) - 1.
    """
    lam = np.asarray(lam, dtype=float)
    C = _lagrange_coeffs(nodes)
    deg = len(nodes) - 1
    gx, gw = np.polynomial.legendre.leggauss(32)
    W = np.zeros((len(targets), len(nodes), len(lam)))
    for i, x in enumerate(targets):
        z = lam * x
        small = np.abs(z) < 4.0
        # quadrature branch
        s = 0.5 * x * (gx + 1.0)
        ker = np.exp(np.outer(s, -lam[small]) + z[small][None, :])  # exp(lam (x - s))
        P = np.vander(s, deg + 1, increasing=True) @ C.T  # (q, m)
        W[i][:, small] = 0.5 * x * (P * gw[:, None]).T @ ker
        # integration-by-parts branch
        big = ~small
        if np.any(big):
            lb = lam[big]
            ez = np.exp(z[big])
            acc = np.zeros((len(nodes), lb.size))
            for m in range(len(nodes)):
                poly = np.polynomial.Polynomial(C[m])
                for k in range(deg + 1):
                    acc[m] += (ez * poly(0.0) - poly(x)) / lb ** (k + 1)
                    poly = poly.deriv()
            W[i][:, big] = acc
    return W


class _DuhamelInterval:
    """Exponential collocation weights for one interval length and all modes."""

    def __init__(self, ops: _ModeOps, delta: float):
        self.delta = delta
        self.targets = np.append(_GL_NODES, 1.0)
        self.decay = {}
        self.weights = {}
        for a, op in ops.ops.items():
            lam = op.eig[0] * delta
            self.decay[a] = np.exp(np.outer(self.targets, lam))  # (9, n)
            self.weights[a] = delta * exp_weights(lam, _GL_NODES, self.targets)  # (9, 8, n)


def _duhamel_interval(omega: SpectralField, ops: _ModeOps, iv: _DuhamelInterval,
                      config: RunConfig, linear: bool):
    g = omega.grid
    n = g.J - 1
    nt = len(iv.targets)
    modal0 = {a: op.to_modal(omega.coeffs[ops.rows(a), :n].T) for a, op in ops.ops.items()}
    free = {a: iv.decay[a][:, :, None] * modal0[a][None] for a in ops.ops}  # (9, n, r)

    def assemble(modal):
        out = np.zeros((nt, g.n_modes, g.J), dtype=complex)
        for a, op in ops.ops.items():
            rows = ops.rows(a)
            for i in range(nt):
                out[i][rows, :n] = op.from_modal(modal[a][i]).T
        return out

    states = np.repeat(omega.coeffs[None], nt, axis=0)
    herm = omega.is_hermitian(tol=0.0)
    diffs = []
    for it in range(config.picard_iters):
        forcing = []
        umax = 0.0
        for m in range(len(_GL_NODES)):
            F, um = _forcing(omega.with_coeffs(states[m]), ops, config.dealias, linear)
            forcing.append(F)
            umax = max(umax, um)
        forcing = np.stack(forcing)  # (8, modes, n)
        modal = {}
        for a, op in ops.ops.items():
            rows = ops.rows(a)
            Fm = np.stack([op.to_modal(forcing[m][rows].T) for m in range(len(_GL_NODES))])
            modal[a] = free[a] + np.einsum("ime,mer->ier", iv.weights[a], Fm)
        new = assemble(modal)
        if herm:
            new = _symmetrize(new.transpose(1, 0, 2)).transpose(1, 0, 2)
        diff = float(np.max(np.abs(new - states)))
        states = new
        diffs.append(diff)
        if not np.all(np.isfinite(states)):
            raise PicardDivergence("non-finite Picard iterate")
        if diff < config.picard_tol * max(1.0, float(np.max(np.abs(states)))):
            break
        if len(diffs) >= 6 and all(diffs[-k] > diffs[-k - 1] for k in range(1, 6)):
            raise PicardDivergence(f"Picard differences grew for 5 iterations: {diffs[-6:]}")
    return omega.with_coeffs(states[-1]), it + 1


# ------------------------------------------------------------- Euler

def step_euler(omega: SpectralField, dt: float, dealias: bool = True) -> SpectralField:
    """Heun (RK2) step of d_t omega + u . grad omega = 0."""
    N0, _, umax = advection(omega, dealias)
    g = omega.grid
    if umax > 0 and dt > 0.5 * g.h_min / umax:
        raise CFLViolation(
            f"dt = {dt:.3g} exceeds 0.5 h_min / max|u| = {0.5 * g.h_min / umax:.3g}"
        )
    pred = omega + dt * N0
    N1 = nonlinear_term(pred, dealias)
    new = omega.coeffs + 0.5 * dt * (N0.coeffs + N1.coeffs)
    if omega.is_hermitian(tol=0.0):
        new = _symmetrize(new)
    return omega.with_coeffs(new)


# ------------------------------------------------------------ drivers

def _n_steps(config: RunConfig) -> int:
    n = int(round(config.T_end / config.dt))
    if abs(n * config.dt - config.T_end) > 1e-9 * config.T_end:
        raise ValidationError("dt", "T_end must be an integer multiple of dt")
    return n


def _run(config: RunConfig, step, linear: bool = False) -> Trajectory:
    grid = config.grid()
    omega = initial_field(config, grid)
    nsteps = _n_steps(config)
    traj = Trajectory([], [], [], [], config.digest())
    step_times = [0.0]
    amps = [wall_amplitude(omega)]
    slips = [_slip(omega)]
    counts = []

    def record(t, w):
        traj.times.append(t)
        traj.omegas.append(w)
        traj.velocities.append(velocity_from_vorticity(w))
        traj.reports.append(_report(w, t, config))

    record(0.0, omega)
    for k in range(1, nsteps + 1):
        omega, extra = step(omega)
        if extra is not None:
            counts.append(extra)
        t = k * config.dt
        step_times.append(t)
        amps.append(wall_amplitude(omega))
        slips.append(_slip(omega))
        if k % config.output_every == 0 or k == nsteps:
            record(t, omega)
    traj.step_times = np.array(step_times)
    traj.wall_amp = np.array(amps)
    traj.wall_slip = np.array(slips)
    traj.picard_counts = counts
    return traj


def _slip(omega: SpectralField) -> float:
    u1 = velocity_from_vorticity(omega).u1
    return float(np.max(np.abs(to_physical(u1.coeffs[:, :1], 4 * omega.grid.n_modes))))


def _report(omega: SpectralField, t: float, config: RunConfig) -> Optional[NormReport]:
    if not config.monitor_norms:
        return None
    p = config.weights
    if config.norm_recession == "sqrt" and t >= p.x_horizon:
        return None
    return triple_norm(omega, t, p, config.mu_samples, config.norm_recession)


def _check_horizon(config: RunConfig):
    if config.monitor_norms:
        T = config.weights.run_horizon
        if config.T_end > T * (1 + 1e-12):
            raise HorizonExceeded(
                f"T_end = {config.T_end} exceeds mu0 / (2 gamma) = {T} with norm monitoring on"
            )


def evolve_imex(config: RunConfig, linear: bool = False) -> Trajectory:
    p = config.weights
    return _run(config, lambda w: (step_imex(w, config.dt, p, config.dealias, linear), None))


def evolve_duhamel(config: RunConfig, linear: bool = False) -> Trajectory:
    grid = config.grid()
    ops = _mode_ops(grid, float(config.nu))
    iv = _DuhamelInterval(ops, config.dt)
    return _run(config, lambda w: _duhamel_interval(w, ops, iv, config, linear), linear)


def evolve_euler(config: RunConfig) -> Trajectory:
    return _run(config, lambda w: (step_euler(w, config.dt, config.dealias), None))


def evolve(config: RunConfig, linear: bool = False) -> Trajectory:
    _check_horizon(config)
    if config.backend == "imex":
        return evolve_imex(config, linear)
    if config.backend == "duhamel":
        return evolve_duhamel(config, linear)
    return evolve_euler(config)
