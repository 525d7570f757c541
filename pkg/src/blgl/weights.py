"""Near-wall weights and the weighted analytic norms.

All suprema are taken over real wall-normal nodes only; the tangential
analyticity enters through the factor exp(eps0 * (1 + mu - y)_+ * |xi|).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonExceeded, ValidationError
from .fields import SpectralField, d_x, d_y, y_d_y


@dataclass(frozen=True)
class WeightParams:
    nu: float
    gamma: float = 10.0
    beta: float = 0.2
    eps0: float = 0.05
    mu0: float = 0.09
    alpha: float = 0.25
    n: int = 1

    def __post_init__(self):
        checks = [
            ("nu", self.nu > 0, "nu > 0"),
            ("gamma", self.gamma > 0, "gamma > 0"),
            ("beta", 0 < self.beta < 0.25, "beta in (0, 1/4)"),
            ("eps0", 0 < self.eps0 < 1, "eps0 in (0, 1)"),
            ("mu0", 0 < self.mu0 < 0.1, "mu0 in (0, 1/10)"),
            ("alpha", 0 < self.alpha < 0.5, "alpha in (0, 1/2)"),
            ("n", int(self.n) == self.n and self.n >= 1, "n integer >= 1"),
        ]
        for name, ok, constraint in checks:
            if not ok:
                raise ValidationError(name, constraint)

    @property
    def time_exponent(self) -> float:
        """2^n / (2^n - 1); equals 2 for the base weight."""
        return 2.0 ** self.n / (2.0 ** self.n - 1.0)

    @property
    def growth_time(self) -> float:
        """Time after which the weight has relaxed to w_base."""
        return (self.nu / self.gamma) ** self.time_exponent

    @property
    def x_horizon(self) -> float:
        """Largest t with a non-empty mu-range in X(t)."""
        return (self.mu0 / self.gamma) ** (2 ** self.n)

    @property
    def y_horizon(self) -> float:
        return self.mu0 / self.gamma

    @property
    def run_horizon(self) -> float:
        return self.mu0 / (2.0 * self.gamma)


def w_base(y, p: WeightParams):
    """sqrt(nu) below sqrt(nu), then y, then 1 above y = 1."""
    y = np.asarray(y, dtype=float)
    out = np.clip(y, math.sqrt(p.nu), 1.0)
    return out if out.ndim else float(out)


def w_t(y, t: float, p: WeightParams):
    y = np.asarray(y, dtype=float)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        out = np.ones_like(y)
    elif t <= p.growth_time:
        scale = (p.growth_time / t) ** p.beta
        out = w_base(y * scale, p) + max(0.0, 1.0 - t / p.growth_time)
    else:
        out = w_base(y, p)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def _tangential_factor(y: np.ndarray, mu: float, xis: np.ndarray, eps0: float) -> np.ndarray:
    return np.exp(eps0 * np.maximum(1.0 + mu - y, 0.0)[None, :] * np.abs(xis)[:, None])


def x_mu_norm(f: SpectralField, mu: float, t: float, p: WeightParams) -> float:
    """Sum over modes of the weighted sup on nodes in [0, 1 + mu]."""
    if not 0 <= mu <= p.mu0:
        raise ValueError(f"mu must lie in [0, {p.mu0}]")
    y = f.grid.nodes
    m = y <= 1.0 + mu
    ys = y[m]
    vals = np.abs(f.coeffs[:, m]) * w_t(ys, t, p)[None, :] * _tangential_factor(
        ys, mu, f.grid.xis, p.eps0
    )
    return float(np.sum(np.max(vals, axis=1)))


def _segment(y: np.ndarray, F: np.ndarray, b: float):
    """Nodes and values of F restricted to [0, b], with b appended by interpolation."""
    k = int(np.searchsorted(y, b, side="right"))
    ys, Fs = y[:k], F[:, :k]
    if k < len(y) and ys[-1] < b:
        lam = (b - y[k - 1]) / (y[k] - y[k - 1])
        end = (1 - lam) * F[:, k - 1] + lam * F[:, k]
        ys = np.append(ys, b)
        Fs = np.concatenate([Fs, end[:, None]], axis=1)
    return ys, Fs


def _tail(y: np.ndarray, F: np.ndarray, a: float):
    """Nodes and values of F restricted to [a, Ly], with a prepended by interpolation."""
    k = int(np.searchsorted(y, a, side="left"))
    ys, Fs = y[k:], F[:, k:]
    if k == len(y):
        return ys, Fs
    if k > 0 and ys[0] > a:
        lam = (a - y[k - 1]) / (y[k] - y[k - 1])
        start = (1 - lam) * F[:, k - 1] + lam * F[:, k]
        ys = np.insert(ys, 0, a)
        Fs = np.concatenate([start[:, None], Fs], axis=1)
    return ys, Fs


def y_mu_norm(f: SpectralField, mu: float, p: WeightParams) -> float:
    """Sum over modes of the trapezoid L1 norm on [0, 1 + mu]."""
    y = f.grid.nodes
    F = np.abs(f.coeffs)
    ys, Fs = _segment(y, F, 1.0 + mu)
    g = Fs * _tangential_factor(ys, mu, f.grid.xis, p.eps0)
    return float(np.sum(np.trapezoid(g, ys, axis=1)))


def _l2_tail_sq(f: SpectralField, threshold: float) -> np.ndarray:
    # exact integral of |g|^2 for the piecewise-linear interpolant of g = y f
    y = f.grid.nodes
    ys, G = _tail(y, f.coeffs * y[None, :], threshold)
    if len(ys) < 2:
        return np.zeros(f.grid.n_modes)
    h = np.diff(ys)
    a, b = G[:, :-1], G[:, 1:]
    cell = (np.abs(a) ** 2 + np.real(a * np.conj(b)) + np.abs(b) ** 2) * h[None, :] / 3.0
    return np.sum(cell, axis=1)


def s_norm(f: SpectralField, threshold: float = 0.5) -> float:
    """Root-sum-square over modes of ||y f_xi||_{L2(y >= threshold)}."""
    return float(math.sqrt(np.sum(_l2_tail_sq(f, threshold))))


def s_mu_norm(f: SpectralField, mu: float) -> float:
    """Plain sum over modes of ||y f_xi||_{L2(y >= 1 + mu)}."""
    return float(np.sum(np.sqrt(_l2_tail_sq(f, 1.0 + mu))))


def _wall_normal(f: SpectralField, j: int, kind: str) -> SpectralField:
    if kind == "y_d_y":
        for _ in range(j):
            f = y_d_y(f)
        return f
    # plain d_y: use the second-derivative stencil for the even part
    if j >= 2:
        f = d_y(f, 2)
        j -= 2
    return d_y(f, 1) if j == 1 else f


def mixed_derivatives(f: SpectralField, max_order: int, wall_normal: str = "y_d_y") -> dict:
    """{(i, j): d_x^i D^j f} for i + j <= max_order, D = y d_y or d_y."""
    out = {}
    for j in range(max_order + 1):
        row = _wall_normal(f, j, wall_normal)
        for i in range(max_order + 1 - j):
            if i > 0:
                row = d_x(row)
            out[(i, j)] = row
    return out


def mu_grid(top: float, samples: int) -> np.ndarray:
    """Uniform samples of [0, top), right end excluded."""
    return np.arange(samples) * (top / samples)


def _x_top(t: float, p: WeightParams, recession: str) -> float:
    if recession == "sqrt":
        if t >= p.x_horizon:
            raise HorizonExceeded(
                f"t = {t} is beyond the X-norm horizon {p.x_horizon:.6g}"
            )
        return p.mu0 - p.gamma * t ** (1.0 / 2 ** p.n)
    if recession == "linear":
        if t >= p.y_horizon:
            raise HorizonExceeded(f"t = {t} is beyond the horizon {p.y_horizon:.6g}")
        return p.mu0 - p.gamma * t
    raise ValueError(f"unknown recession {recession!r}")


def x_norm_profile(f, t, p, mu_samples=16, recession="sqrt"):
    """Per-mu values of the bracket in X(t), plus per-(i, j) maxima."""
    if mu_samples < 8:
        raise ValueError("mu_samples must be >= 8")
    top = _x_top(t, p, recession)
    mus = mu_grid(top, mu_samples)
    ders = mixed_derivatives(f, 2)
    vals = np.zeros(len(mus))
    per_order = {k: 0.0 for k in ders}
    for m, mu in enumerate(mus):
        for (i, j), g in ders.items():
            v = x_mu_norm(g, mu, t, p)
            if i + j == 2:
                v *= (top - mu) ** (0.5 + p.alpha)
            vals[m] += v
            per_order[(i, j)] = max(per_order[(i, j)], v)
    return mus, vals, per_order


def x_norm(f: SpectralField, t: float, p: WeightParams, mu_samples: int = 16,
           recession: str = "sqrt") -> float:
    """Discrete sup over mu of the X(t) bracket.

    recession="sqrt" is the definition as written (mu < mu0 - gamma t^(1/2^n));
    recession="linear" replaces the recession by gamma t, which keeps the norm
    defined up to the run horizon mu0 / (2 gamma).
    """
    _, vals, _ = x_norm_profile(f, t, p, mu_samples, recession)
    return float(np.max(vals))


def y_norm_profile(f, t, p, mu_samples=16):
    if mu_samples < 8:
        raise ValueError("mu_samples must be >= 8")
    if t >= p.y_horizon:
        raise HorizonExceeded(f"t = {t} is beyond the Y-norm horizon {p.y_horizon:.6g}")
    top = p.mu0 - p.gamma * t
    mus = mu_grid(top, mu_samples)
    ders = mixed_derivatives(f, 2)
    vals = np.zeros(len(mus))
    for m, mu in enumerate(mus):
        for (i, j), g in ders.items():
            v = y_mu_norm(g, mu, p)
            if i + j == 2:
                v *= (top - mu) ** p.alpha
            vals[m] += v
    return mus, vals


def y_norm(f: SpectralField, t: float, p: WeightParams, mu_samples: int = 16) -> float:
    _, vals = y_norm_profile(f, t, p, mu_samples)
    return float(np.max(vals))


def z_norm(f: SpectralField) -> float:
    """Sum of S norms of d_x^i d_y^j f over i + j <= 3."""
    return float(sum(s_norm(g, 0.5) for g in mixed_derivatives(f, 3, "d_y").values()))


@dataclass
class NormReport:
    t: float
    X: float
    Y: float
    Z: float
    S_mu: dict = field(default_factory=dict)
    per_mu: dict = field(default_factory=dict)
    per_order: dict = field(default_factory=dict)
    recession: str = "sqrt"

    @property
    def triple(self) -> float:
        return self.X + self.Y + self.Z


def triple_norm(f: SpectralField, t: float, p: WeightParams, mu_samples: int = 16,
                recession: str = "sqrt") -> NormReport:
    mus, xv, per_order = x_norm_profile(f, t, p, mu_samples, recession)
    ymus, yv = y_norm_profile(f, t, p, mu_samples)
    Z = z_norm(f)
    S_mu = {float(mu): s_mu_norm(f, mu) for mu in mus}
    return NormReport(
        t=t,
        X=float(np.max(xv)),
        Y=float(np.max(yv)),
        Z=Z,
        S_mu=S_mu,
        per_mu={"X": dict(zip(map(float, mus), map(float, xv))),
                "Y": dict(zip(map(float, ymus), map(float, yv)))},
        per_order=per_order,
        recession=recession,
    )
