"""Wall-normal grids, spectral fields and the differential operators on them.

A field is stored as its Fourier coefficients in x, one row per tangential
wavenumber xi in -K..K, sampled on a stretched wall-normal grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from .errors import InvalidGrid, SingularOperator

MIN_WALL_NODES = 8


def stretched_nodes(J: int, Ly: float, stretch: float) -> np.ndarray:
    """tanh map clustered at the wall, pinned to 0 and Ly."""
    s = np.linspace(0.0, 1.0, J)
    y = Ly * (1.0 - np.tanh(stretch * (1.0 - s)) / np.tanh(stretch))
    y[0] = 0.0
    y[-1] = Ly
    return y


def _fd_weights(x0: float, xs: np.ndarray, m: int) -> np.ndarray:
    # Taylor-matching weights for the m-th derivative at x0 on stencil xs.
    n = len(xs)
    d = xs - x0
    A = np.vander(d, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[m] = float(np.prod(np.arange(1, m + 1)))
    return np.linalg.solve(A, rhs)


class Grid:
    """Wall-normal grid plus the tangential mode range."""

    def __init__(self, K: int, J: int, Ly: float, stretch: float, nodes: np.ndarray):
        self.K = int(K)
        self.J = int(J)
        self.Ly = float(Ly)
        self.stretch = float(stretch)
        self.nodes = np.asarray(nodes, dtype=float)
        self.nodes.setflags(write=False)

    def __repr__(self):
        return f"Grid(K={self.K}, J={self.J}, Ly={self.Ly}, stretch={self.stretch})"

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.K, self.J, self.Ly, self.stretch) == (
            other.K, other.J, other.Ly, other.stretch
        ) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash((self.K, self.J, self.Ly, self.stretch))

    @property
    def xis(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def n_modes(self) -> int:
        return 2 * self.K + 1

    @cached_property
    def h_min(self) -> float:
        return float(np.min(np.diff(self.nodes)))

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights on the nodes."""
        h = np.diff(self.nodes)
        w = np.zeros(self.J)
        w[:-1] += h / 2
        w[1:] += h / 2
        return w

    @cached_property
    def D1(self) -> sp.csr_matrix:
        return self._diff_matrix(1)

    @cached_property
    def D2(self) -> sp.csr_matrix:
        return self._diff_matrix(2)

    def _diff_matrix(self, order: int) -> sp.csr_matrix:
        y = self.nodes
        J = self.J
        rows, cols, vals = [], [], []
        # second-order accuracy throughout: 3 points inside, 3 or 4 at the ends
        nb = 3 if order == 1 else 4
        for j in range(J):
            if j == 0:
                idx = np.arange(0, nb)
            elif j == J - 1:
                idx = np.arange(J - nb, J)
            else:
                idx = np.array([j - 1, j, j + 1])
            w = _fd_weights(y[j], y[idx], order)
            rows.extend([j] * len(idx))
            cols.extend(idx.tolist())
            vals.extend(w.tolist())
        return sp.csr_matrix((vals, (rows, cols)), shape=(J, J))

    @cached_property
    def laplacian_bands(self) -> np.ndarray:
        """Tridiagonal interior rows of D2 in solve_banded layout, Dirichlet ends."""
        D2 = self.D2.toarray()
        ab = np.zeros((3, self.J))
        for j in range(1, self.J - 1):
            ab[0, j + 1] = D2[j, j + 1]
            ab[1, j] = D2[j, j]
            ab[2, j - 1] = D2[j, j - 1]
        ab[1, 0] = 1.0
        ab[1, -1] = 1.0
        return ab


def make_grid(K: int, J: int, Ly: float, stretch: float, nu_min: float) -> Grid:
    if K < 1:
        raise InvalidGrid(f"K must be >= 1, got {K}")
    if J < 16:
        raise InvalidGrid(f"J must be >= 16, got {J}")
    if not Ly >= 1.11:
        raise InvalidGrid(f"Ly must be >= 1.11, got {Ly}")
    if not stretch > 0:
        raise InvalidGrid(f"stretch must be positive, got {stretch}")
    if not nu_min > 0:
        raise InvalidGrid(f"nu_min must be positive, got {nu_min}")
    y = stretched_nodes(J, Ly, stretch)
    if not np.all(np.diff(y) > 0):
        raise InvalidGrid("nodes are not strictly increasing")
    n_wall = int(np.count_nonzero(y <= np.sqrt(nu_min)))
    if n_wall < MIN_WALL_NODES:
        raise InvalidGrid(
            f"only {n_wall} nodes in [0, sqrt(nu_min)]; need {MIN_WALL_NODES}"
        )
    return Grid(K, J, Ly, stretch, y)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients c[xi + K, j] of a field on a Grid."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n_modes, self.grid.J):
            raise ValueError(
                f"coeffs shape {c.shape} does not match grid "
                f"{(self.grid.n_modes, self.grid.J)}"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros((grid.n_modes, grid.J), dtype=complex))

    @classmethod
    def from_modes(cls, grid: Grid, modes: dict) -> "SpectralField":
        """Build from {xi: profile}; profile is an array or a callable of y."""
        c = np.zeros((grid.n_modes, grid.J), dtype=complex)
        for xi, prof in modes.items():
            vals = prof(grid.nodes) if callable(prof) else prof
            c[xi + grid.K] = np.broadcast_to(vals, (grid.J,))
        return cls(grid, c)

    def mode(self, xi: int) -> np.ndarray:
        return self.coeffs[xi + self.grid.K]

    def with_coeffs(self, c: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, c)

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1])), initial=0.0) <= tol)

    def sup(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, a) -> "SpectralField":
        return self.with_coeffs(self.coeffs * a)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)


@dataclass(frozen=True)
class VelocityPair:
    u1: SpectralField
    u2: SpectralField


def d_y(f: SpectralField, order: int = 1) -> SpectralField:
    """Wall-normal derivative of every mode (order 1 or 2)."""
    if order == 1:
        D = f.grid.D1
    elif order == 2:
        D = f.grid.D2
    else:
        raise ValueError("order must be 1 or 2")
    return f.with_coeffs((D @ f.coeffs.T).T)


def d_x(f: SpectralField, order: int = 1) -> SpectralField:
    """Tangential derivative as the multiplier (i xi)^order."""
    m = (1j * f.grid.xis.astype(float)) ** order
    return f.with_coeffs(f.coeffs * m[:, None])


def y_d_y(f: SpectralField) -> SpectralField:
    """y times d_y f; the wall row is zero since y_0 = 0."""
    c = f.grid.nodes[None, :] * d_y(f, 1).coeffs
    c[:, 0] = 0.0
    return f.with_coeffs(c)


def poisson_solve(omega: SpectralField) -> SpectralField:
    """Stream function with (d_yy - xi^2) psi = omega, psi = 0 at both ends."""
    g = omega.grid
    base = g.laplacian_bands
    psi = np.zeros_like(omega.coeffs)
    for xi in range(0, g.K + 1):
        ab = base.copy()
        ab[1, 1:-1] -= xi * xi
        rows = [xi + g.K] if xi == 0 else [xi + g.K, -xi + g.K]
        rhs = omega.coeffs[rows].T.copy()
        rhs[0] = 0.0
        rhs[-1] = 0.0
        try:
            sol = solve_banded((1, 1), ab, rhs, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise SingularOperator(f"mode {xi}: {exc}") from exc
        if not np.all(np.isfinite(sol)):
            raise SingularOperator(f"mode {xi}: non-finite solution")
        psi[rows] = sol.T
    psi[:, 0] = 0.0
    psi[:, -1] = 0.0
    return omega.with_coeffs(psi)


def velocity_from_vorticity(omega: SpectralField) -> VelocityPair:
    """u = (d_y psi, -d_x psi) with Laplacian psi = omega."""
    psi = poisson_solve(omega)
    u1 = d_y(psi, 1)
    u2 = -d_x(psi, 1)
    return VelocityPair(u1, u2)


def divergence(u: VelocityPair) -> SpectralField:
    return d_x(u.u1) + d_y(u.u2)


def curl(u: VelocityPair) -> SpectralField:
    """Inverse of velocity_from_vorticity: omega = d_y u1 - d_x u2.

    With u = (d_y psi, -d_x psi) this is exactly Laplacian psi.
    """
    return d_y(u.u1) - d_x(u.u2)
