"""Half-space Stokes kernels for one tangential mode.

The discrete operator is nu (d_yy - xi^2) on the wall-normal grid with the
Robin wall condition nu (d_y + |xi|) w = B closed by a mirrored ghost node,
and w = 0 at the top of the strip.  Weighted by the trapezoid weights it is
symmetric, so its semigroup can be written through a symmetric tridiagonal
eigendecomposition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .errors import NumericalInstability
from .fields import Grid


def heat_kernel(t, xi, y, z, nu):
    """Reflected Gaussian with the 1/sqrt(4 pi nu t) normalisation."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    s = 4.0 * nu * t
    val = (np.exp(-(y - z) ** 2 / s) + np.exp(-(y + z) ** 2 / s)) / math.sqrt(math.pi * s)
    val = val * math.exp(-nu * xi * xi * t)
    return val if val.ndim else float(val)


def boundary_coefficient(xi: float, nu: float) -> float:
    return abs(xi) + 1.0 / math.sqrt(nu)


@dataclass(frozen=True)
class Envelope:
    theta0: float
    b: float
    variant: str = "dz"  # "dz": z-derivative bounds, "ydy": (y d_y)^k bounds

    def __post_init__(self):
        if not self.theta0 > 0:
            raise ValueError("theta0 must be positive")
        if self.variant not in ("dz", "ydy"):
            raise ValueError("variant must be 'dz' or 'ydy'")


def envelope_value(e: Envelope, t, y, z, nu, xi, k: int = 0):
    s = np.asarray(y, dtype=float) + np.asarray(z, dtype=float)
    damp = math.exp(-nu * xi * xi * t / 8.0)
    nt = nu * t
    if e.variant == "dz":
        val = e.b ** (k + 1) * np.exp(-e.theta0 * e.b * s) + nt ** (-(k + 1) / 2) * np.exp(
            -e.theta0 * s * s / nt
        ) * damp
    else:
        th = e.theta0 / 2.0
        val = e.b * np.exp(-th * e.b * s) + nt ** -0.5 * np.exp(-th * s * s / nt) * damp
    return val if np.ndim(val) else float(val)


class RobinOperator:
    """Semi-discrete nu (d_yy - c) with Robin coefficient r at the wall.

    Unknowns are the nodes 0..J-2; the top node is pinned to zero.
    """

    def __init__(self, grid: Grid, nu: float, robin: float, damping: float):
        self.grid = grid
        self.nu = float(nu)
        self.robin = float(robin)
        self.damping = float(damping)
        n = grid.J - 1
        self.n = n
        y = grid.nodes
        h0 = y[1] - y[0]
        ab = grid.laplacian_bands
        lower = np.zeros(n)  # lower[j] = A[j, j-1]
        diag = np.zeros(n)
        upper = np.zeros(n)  # upper[j] = A[j, j+1]
        diag[0] = nu * (-2.0 / h0 ** 2 + 2.0 * robin / h0)
        upper[0] = 2.0 * nu / h0 ** 2
        for j in range(1, n):
            lower[j] = nu * ab[2, j - 1]
            diag[j] = nu * ab[1, j]
            if j + 1 < n:
                upper[j] = nu * ab[0, j + 1]
        diag -= damping
        self.lower, self.diag, self.upper = lower, diag, upper
        self.weights = grid.quad_weights[:n].copy()
        # a wall flux B enters the wall row as -2 B / h0
        self.wall_gain = -2.0 / h0

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag[:, None] * v if v.ndim == 2 else self.diag * v
        out = np.array(out, dtype=np.result_type(v, float))
        out[:-1] += (self.upper[:-1, None] if v.ndim == 2 else self.upper[:-1]) * v[1:]
        out[1:] += (self.lower[1:, None] if v.ndim == 2 else self.lower[1:]) * v[:-1]
        return out

    def bands(self, scale: float, shift: float = 1.0) -> np.ndarray:
        """shift*I + scale*A in solve_banded layout."""
        ab = np.zeros((3, self.n))
        ab[0, 1:] = scale * self.upper[:-1]
        ab[1] = shift + scale * self.diag
        ab[2, :-1] = scale * self.lower[1:]
        return ab

    @property
    def eig(self):
        if not hasattr(self, "_eig"):
            off = np.sqrt(self.upper[:-1] * self.lower[1:])
            lam, Q = eigh_tridiagonal(self.diag, off)
            self._eig = (lam, Q)
        return self._eig

    def to_modal(self, v: np.ndarray) -> np.ndarray:
        lam, Q = self.eig
        sw = np.sqrt(self.weights)
        return Q.T @ (sw[:, None] * v if v.ndim == 2 else sw * v)

    def from_modal(self, c: np.ndarray) -> np.ndarray:
        lam, Q = self.eig
        sw = np.sqrt(self.weights)
        out = Q @ c
        return out / (sw[:, None] if out.ndim == 2 else sw)

    def kernel_exact(self, t: float) -> np.ndarray:
        """exp(tA) W^-1 on the unknowns (symmetric)."""
        lam, Q = self.eig
        sw = np.sqrt(self.weights)
        M = (Q * np.exp(lam * t)[None, :]) @ Q.T
        return M / sw[:, None] / sw[None, :]

    def kernel_cn(self, t: float, steps: int) -> np.ndarray:
        """Crank-Nicolson evolution of the delta columns diag(1/W)."""
        steps = max(int(steps), int(math.ceil(t * np.max(np.abs(self.diag)) / 2.0)), 1)
        dt = t / steps
        lhs = self.bands(-dt / 2.0)
        X = np.diag(1.0 / self.weights)
        for _ in range(steps):
            X = solve_banded((1, 1), lhs, X + (dt / 2.0) * self.matvec(X))
        return X


@lru_cache(maxsize=256)
def robin_operator(grid: Grid, nu: float, robin: float, damping: float = 0.0) -> RobinOperator:
    return RobinOperator(grid, nu, robin, damping)


@dataclass(frozen=True, eq=False)
class KernelTable:
    t: float
    xi: int
    nu: float
    grid: Grid
    G: np.ndarray
    qw: np.ndarray
    robin: float = 0.0


def _pad(grid: Grid, M: np.ndarray) -> np.ndarray:
    G = np.zeros((grid.J, grid.J))
    n = grid.J - 1
    G[:n, :n] = M
    return G


def green_numeric(t: float, xi: int, nu: float, grid: Grid, steps: int = 200,
                  method: str = "cn", robin: float | None = None) -> KernelTable:
    """Kernel G_xi(t, y_j, z_k) of the homogeneous Robin problem.

    The xi^2 damping is applied as the exact factor exp(-nu xi^2 t), so
    G_xi = exp(-nu xi^2 t) * G_Robin(|xi|) holds by construction.  method
    "cn" steps Crank-Nicolson (steps raised if needed for positivity);
    "exact" uses the eigendecomposition of the semi-discrete operator.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    r = abs(xi) if robin is None else robin
    op = robin_operator(grid, float(nu), float(r), 0.0)
    if method == "cn":
        M = op.kernel_cn(t, steps)
    elif method == "exact":
        M = op.kernel_exact(t)
    else:
        raise ValueError(f"unknown method {method!r}")
    G = _pad(grid, M) * math.exp(-nu * xi * xi * t)
    bound = 10.0 / math.sqrt(nu * t)
    if not np.all(np.isfinite(G)) or np.max(np.abs(G)) > bound:
        raise NumericalInstability(
            f"kernel entry {np.max(np.abs(G)):.3g} exceeds guard {bound:.3g}"
        )
    return KernelTable(t, xi, nu, grid, G, grid.quad_weights.copy(), r)


def neumann_numeric(t: float, xi: int, nu: float, grid: Grid, steps: int = 200,
                    method: str = "cn") -> KernelTable:
    """Same scheme with the wall condition switched to Neumann."""
    return green_numeric(t, xi, nu, grid, steps, method, robin=0.0)


def residual_kernel(table: KernelTable, reference: str = "discrete",
                    steps: int = 200, method: str = "exact") -> KernelTable:
    """R = G - H for a kernel table.

    reference="analytic" subtracts the closed-form heat kernel on the nodes.
    reference="discrete" subtracts the Neumann kernel of the same scheme, so
    the discretisation error of the Gaussian part cancels and only the part
    generated by the Robin term remains.
    """
    g = table.grid
    if reference == "analytic":
        y = g.nodes
        H = heat_kernel(table.t, table.xi, y[:, None], y[None, :], table.nu)
        H[-1, :] = 0.0
        H[:, -1] = 0.0
    elif reference == "discrete":
        H = neumann_numeric(table.t, table.xi, table.nu, g, steps, method).G
    else:
        raise ValueError(f"unknown reference {reference!r}")
    return KernelTable(table.t, table.xi, table.nu, g, table.G - H, table.qw, table.robin)


def trace_kernels(t: float, xi: int, nu: float, grid: Grid, steps: int = 200,
                  method: str = "exact"):
    """(T1, T2): heat kernel and residual kernel with the source at the wall."""
    T1 = np.asarray(heat_kernel(t, xi, grid.nodes, 0.0, nu))
    R = residual_kernel(green_numeric(t, xi, nu, grid, steps, method), "discrete",
                        steps, method)
    return T1, R.G[:, 0].copy()


def duhamel_apply(table: KernelTable, source: np.ndarray) -> np.ndarray:
    """sum_k G[j, k] source[k] qw[k]."""
    return table.G @ (np.asarray(source) * table.qw)


def envelope_ratio(R: KernelTable, theta0: float, k: int = 0, mask=None) -> float:
    """max |R| / envelope over the (optionally masked) node pairs."""
    y = R.grid.nodes
    env = envelope_value(Envelope(theta0, boundary_coefficient(R.xi, R.nu)), R.t,
                         y[:, None], y[None, :], R.nu, R.xi, k)
    ratio = np.abs(R.G) / env
    if mask is not None:
        ratio = ratio[mask]
    return float(np.max(ratio))


def resolved_mask(grid: Grid, nu: float, t: float, per_length: float = 4.0) -> np.ndarray:
    """Node pairs whose local spacing resolves the diffusion length sqrt(nu t)."""
    h = np.empty(grid.J)
    d = np.diff(grid.nodes)
    h[0] = d[0]
    h[-1] = d[-1]
    h[1:-1] = np.maximum(d[:-1], d[1:])
    ok = h <= math.sqrt(nu * t) / per_length
    ok[-1] = False
    return ok[:, None] & ok[None, :]
