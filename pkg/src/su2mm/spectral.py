"""Chebyshev collocation solver for the radial Schrodinger equation.

The half line ``r >= 0`` is compactified with ``z = tanh(r / L)`` and
discretized on Chebyshev-Gauss-Lobatto nodes ``z_j = cos(pi j / N)``.  The
radial function ``u(r)`` has definite parity ``(-1)**(ell + 1)`` under
``r -> -r``, so the full-interval operator is folded onto the interior nodes
with ``0 < z < 1``; this removes the ``r = 0`` row and column and imposes
``u(0) = 0`` together with decay at infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_L = 3.0
DEFAULT_N_GRID = 120
MIN_N_GRID = 16


@dataclass(frozen=True)
class SpectralGrid:
    """Collocation grid on ``[-1, 1]`` and its differentiation matrices.

    ``D2r`` is ``d^2/dr^2`` expressed on the z nodes; rows belonging to the
    endpoints ``z = +-1`` (``r = +-inf``) are zero.
    """

    L: float
    n_grid: int
    z_points: np.ndarray
    r_points: np.ndarray
    D1: np.ndarray
    D2r: np.ndarray
    cc_weights: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        """Indices of the interior nodes with ``z > 0``, ordered by increasing r."""
        j = np.arange(self.n_grid + 1)
        pos = j[(self.z_points > 0) & (self.z_points < 1)]
        return pos[np.argsort(self.z_points[pos])]

    def mirror(self, idx: np.ndarray) -> np.ndarray:
        return self.n_grid - np.asarray(idx)

    def jacobian(self) -> np.ndarray:
        """``p(z) = dr/dz = L / (1 - z^2)``; infinite at the endpoints."""
        with np.errstate(divide="ignore"):
            return self.L / (1.0 - self.z_points**2)


@dataclass(frozen=True)
class SpectrumResult:
    energies: np.ndarray
    eigenfunctions: np.ndarray  # shape (n_states, len(r_points)), unit norm
    overlaps: np.ndarray | None
    r_points: np.ndarray
    lam: float
    m: float
    ell: int
    grid: SpectralGrid

    def gaps(self) -> np.ndarray:
        """``E_n - E_0`` for every retained state."""
        return self.energies - self.energies[0]


def chebyshev_nodes(n_grid: int) -> np.ndarray:
    """``cos(pi j / n)`` written as a sine so that mirrored nodes are exact negatives."""
    j = np.arange(n_grid + 1)
    return np.sin(np.pi * (n_grid - 2 * j) / (2 * n_grid))


def differentiation_matrix(z: np.ndarray) -> np.ndarray:
    """Polynomial collocation derivative on arbitrary distinct nodes.

    Off-diagonal entries are ``a_i / (a_j (z_i - z_j))`` with
    ``a_j = prod_{k != j} (z_j - z_k)``; the diagonal is
    ``sum_{k != i} 1 / (z_i - z_k)``.
    """
    diff = z[:, None] - z[None, :]
    if np.any(np.abs(diff[~np.eye(len(z), dtype=bool)]) == 0):
        raise ValueError("collocation nodes must be distinct")
    off = diff.copy()
    np.fill_diagonal(off, 1.0)
    # products can under/overflow for large grids; work with logs and signs
    log_a = np.sum(np.log(np.abs(off)), axis=1)
    sign_a = np.prod(np.sign(off), axis=1)
    ratio = sign_a[:, None] * sign_a[None, :] * np.exp(log_a[:, None] - log_a[None, :])
    D = ratio / off
    inv = 1.0 / off
    np.fill_diagonal(inv, 0.0)
    np.fill_diagonal(D, inv.sum(axis=1))
    return D


def clenshaw_curtis_weights(n_grid: int) -> np.ndarray:
    """Quadrature weights on ``cos(pi j / n)``, exact for polynomials of degree <= n."""
    n = n_grid
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    interior = slice(1, n)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k * k - 1)
        v -= np.cos(n * theta[interior]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k * k - 1)
    w[interior] = 2.0 * v / n
    return w


def build_grid(L: float = DEFAULT_L, n_grid: int = DEFAULT_N_GRID) -> SpectralGrid:
    if n_grid < MIN_N_GRID:
        raise ValueError(f"n_grid must be >= {MIN_N_GRID}, got {n_grid}")
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    z = chebyshev_nodes(n_grid)
    D1 = differentiation_matrix(z)
    inner = np.abs(z) < 1.0
    inv_p = np.where(inner, (1.0 - z**2) / L, 0.0)
    Dr = inv_p[:, None] * D1
    D2r = Dr @ Dr
    r = np.zeros_like(z)
    r[inner] = L * np.arctanh(z[inner])
    r[~inner] = np.sign(z[~inner]) * np.inf
    return SpectralGrid(L, n_grid, z, r, D1, D2r, clenshaw_curtis_weights(n_grid))


def potential(r: np.ndarray, m: float, lam: float) -> np.ndarray:
    """``m^2 r^2 / 2 + lam r^4 / 64``."""
    return 0.5 * m * m * r**2 + lam * r**4 / 64.0


def radial_hamiltonian(grid: SpectralGrid, m: float, lam: float, ell: int = 0) -> np.ndarray:
    """Discrete radial Hamiltonian on the positive interior nodes."""
    if m <= 0 or lam < 0 or ell < 0:
        raise ValueError(f"need m > 0, lam >= 0 and ell >= 0 (got m={m}, lam={lam}, ell={ell})")
    pos = grid.positive
    sign = -1.0 if ell % 2 == 0 else 1.0
    A = grid.D2r[np.ix_(pos, pos)] + sign * grid.D2r[np.ix_(pos, grid.mirror(pos))]
    r = grid.r_points[pos]
    V = potential(r, m, lam) + ell * (ell + 1) / (2.0 * r**2)
    return -0.5 * A + np.diag(V)


def integrate(grid: SpectralGrid, f_pos: np.ndarray, method: str = "clenshaw-curtis") -> np.ndarray:
    """``int_0^inf f dr`` for an even function known on the positive nodes.

    ``"clenshaw-curtis"`` folds the integrand onto the whole z interval and
    uses ``int_0^inf f dr = 1/2 int_{-1}^{1} f(r(z)) p(z) dz``.
    ``"trapezoid"`` applies the trapezoidal rule on the non-uniform r nodes
    with ``f(0) = 0`` prepended.
    """
    f_pos = np.asarray(f_pos)
    if method == "clenshaw-curtis":
        pos = grid.positive
        p = grid.jacobian()[pos]
        w = grid.cc_weights[pos]
        shape = (-1,) + (1,) * (f_pos.ndim - 1)
        # the two mirrored halves contribute equally, cancelling the 1/2
        return np.sum((w * p).reshape(shape) * f_pos, axis=0)
    if method == "trapezoid":
        r = np.concatenate([[0.0], grid.r_points[grid.positive]])
        pad = np.zeros((1,) + f_pos.shape[1:])
        return np.trapezoid(np.concatenate([pad, f_pos]), r, axis=0)
    raise ValueError(f"unknown quadrature {method!r}")


def solve_spectrum(
    grid: SpectralGrid,
    m: float = 1.0,
    lam: float = 0.0,
    ell: int = 0,
    n_states: int = 32,
    quadrature: str = "clenshaw-curtis",
) -> SpectrumResult:
    """Lowest ``n_states`` eigenpairs of the radial problem.

    The collocation matrix is not symmetric, so a general eigensolver is
    used and the (numerically real) spectrum sorted ascending.
    """
    H = radial_hamiltonian(grid, m, lam, ell)
    try:
        w, v = np.linalg.eig(H)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"radial eigensolve failed (L={grid.L}, n_grid={grid.n_grid}, lam={lam}): {exc}") from exc
    order = np.argsort(w.real)
    n_states = min(n_states, len(w))
    order = order[:n_states]
    energies = w.real[order]
    worst = np.max(np.abs(w.imag[order])) if n_states else 0.0
    if worst > 1e-6 * max(1.0, np.max(np.abs(energies))):
        raise ArithmeticError(
            f"complex eigenvalues (max |Im E| = {worst:.3e}) on grid L={grid.L}, n_grid={grid.n_grid}")
    vecs = v[:, order].real
    norms = np.sqrt(integrate(grid, vecs**2, quadrature))
    vecs = vecs / norms
    # fix sign so each eigenfunction starts positive near the origin
    vecs = vecs * np.where(vecs[0] < 0, -1.0, 1.0)
    res = SpectrumResult(energies, vecs.T.copy(), None, grid.r_points[grid.positive].copy(),
                         lam, m, ell, grid)
    if ell == 0:
        res = SpectrumResult(energies, res.eigenfunctions, vacuum_overlaps(res, m, quadrature),
                             res.r_points, lam, m, ell, grid)
    return res


def free_vacuum_radial(r: np.ndarray, m: float = 1.0) -> np.ndarray:
    """``u(r) = r exp(-m r^2 / 2)`` normalized on the half line."""
    norm = math.sqrt(math.sqrt(math.pi) / (4.0 * m**1.5))
    return r * np.exp(-0.5 * m * r * r) / norm


def vacuum_overlaps(res: SpectrumResult, m: float = 1.0,
                    quadrature: str = "clenshaw-curtis") -> np.ndarray:
    """``|c_n|^2`` with ``c_n = int u_n u_vac dr``."""
    u_vac = free_vacuum_radial(res.r_points, m)
    c = integrate(res.grid, res.eigenfunctions.T * u_vac[:, None], quadrature)
    return c**2
