import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su2mm.spectral import (MIN_N_GRID, build_grid, chebyshev_nodes, differentiation_matrix,
                            free_vacuum_radial, integrate, potential, solve_spectrum)


@pytest.fixture(scope="module")
def grid():
    return build_grid(3.0, 120)


def test_nodes_are_gauss_lobatto(grid):
    j = np.arange(121)
    assert np.allclose(grid.z_points, np.cos(np.pi * j / 120), atol=1e-15)
    # mirrored nodes are exact negatives, so the middle node is exactly zero
    assert grid.z_points[60] == 0.0
    assert np.array_equal(chebyshev_nodes(8), -chebyshev_nodes(8)[::-1])


def test_differentiation_is_exact_on_polynomials(grid):
    z = grid.z_points
    assert np.max(np.abs(grid.D1 @ z - 1)) < 1e-10
    assert np.max(np.abs(grid.D1 @ z**2 - 2 * z)) < 1e-9
    assert np.max(np.abs(grid.D1.sum(axis=1))) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=10))
def test_differentiation_exact_random_polynomials(coeffs):
    z = chebyshev_nodes(24)
    D = differentiation_matrix(z)
    poly = np.polynomial.Polynomial(coeffs)
    assert np.allclose(D @ poly(z), poly.deriv()(z), atol=1e-8 * (1 + np.abs(coeffs).sum()))


def test_second_derivative_in_r(grid):
    inner = np.isfinite(grid.r_points)
    r = np.where(inner, grid.r_points, 0.0)
    f = np.where(inner, np.exp(-r**2 / 2), 0.0)
    got = (grid.D2r @ f)[inner]
    want = ((r**2 - 1) * np.exp(-r**2 / 2))[inner]
    assert np.max(np.abs(got - want)) < 1e-6


def test_grid_validation():
    with pytest.raises(ValueError):
        build_grid(3.0, MIN_N_GRID - 1)
    with pytest.raises(ValueError):
        build_grid(0.0, 120)


def test_free_spectrum(grid):
    res = solve_spectrum(grid, m=1.0, lam=0.0)
    n = np.arange(6)
    assert np.all(np.abs(res.energies[:6] / (2 * n + 1.5) - 1) < 1e-3)
    assert res.overlaps[0] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("lam,e0,e1", [(10.0, 1.879, 5.032), (20.0, 2.114, None)])
def test_interacting_energies(grid, lam, e0, e1):
    res = solve_spectrum(grid, lam=lam)
    assert res.energies[0] == pytest.approx(e0, abs=5e-3)
    if e1 is not None:
        assert res.energies[1] == pytest.approx(e1, abs=5e-3)


def test_overlaps(grid):
    res = solve_spectrum(grid, lam=10.0)
    assert res.overlaps[0] == pytest.approx(0.950, rel=0.02)
    assert res.overlaps[1] == pytest.approx(3.94e-2, rel=0.02)
    assert solve_spectrum(grid, lam=2.0).overlaps[0] == pytest.approx(0.994, rel=0.02)
    total = res.overlaps[:20].sum()
    assert 0.99 <= total <= 1.0 + 1e-10


def test_strictly_increasing_and_monotone_in_lambda(grid):
    prev = None
    for lam in (0.0, 2.0, 10.0, 20.0, 40.0):
        res = solve_spectrum(grid, lam=lam)
        e = res.energies[:6]
        assert np.all(np.diff(e) > 0)
        assert e[1] - e[0] >= 2.0 - 1e-9
        if prev is not None:
            assert np.all(e > prev[0])
            assert np.all(np.diff(e)[:3] > np.diff(prev[0])[:3])
        prev = (e,)


def test_cauchy_convergence():
    energies = [solve_spectrum(build_grid(3.0, n), lam=10.0).energies[:4] for n in (30, 60, 120)]
    d1 = np.max(np.abs(energies[1] - energies[0]))
    d2 = np.max(np.abs(energies[2] - energies[1]))
    assert d2 < d1 and d2 < 1e-8


def test_eigenfunctions_vanish_at_origin_and_decay(grid):
    res = solve_spectrum(grid, lam=10.0)
    r = res.r_points
    assert r[0] > 0 and np.all(np.diff(r) > 0)
    for n in range(4):
        u = np.abs(res.eigenfunctions[n])
        # u(r) ~ r near the origin
        assert u[0] / r[0] == pytest.approx(u[1] / r[1], rel=0.1)
        turning = r[np.nonzero(potential(r, 1.0, 10.0) > res.energies[n])[0][0]]
        tail = u[(r > turning) & (u > 1e-10 * u.max())]
        assert np.all(np.diff(tail) < 0)


def test_normalization_and_orthogonality(grid):
    res = solve_spectrum(grid, lam=20.0)
    u = res.eigenfunctions[:5]
    gram = np.array([[integrate(grid, a * b) for b in u] for a in u])
    assert np.allclose(gram, np.eye(5), atol=1e-8)
    vac = free_vacuum_radial(res.r_points)
    assert integrate(grid, vac * vac) == pytest.approx(1.0, abs=1e-10)


def test_quadrature_choice_barely_matters(grid):
    cc = solve_spectrum(grid, lam=10.0)
    tr = solve_spectrum(grid, lam=10.0, quadrature="trapezoid")
    assert np.allclose(cc.energies, tr.energies)
    assert np.allclose(cc.overlaps[:3], tr.overlaps[:3], rtol=1e-2)


def test_rejects_bad_parameters(grid):
    with pytest.raises(ValueError):
        solve_spectrum(grid, lam=-1.0)
    with pytest.raises(ValueError):
        solve_spectrum(grid, m=0.0)


@pytest.mark.parametrize("lam", [2.0, 10.0, 20.0])
def test_matches_finite_difference_oracle(lam):
    import scipy.linalg as sla

    def fd(n):
        h = 8.0 / (n + 1)
        r = h * np.arange(1, n + 1)
        diag = 1 / h**2 + potential(r, 1.0, lam)
        w, v = sla.eigh_tridiagonal(diag, -0.5 / h**2 * np.ones(n - 1), select="i", select_range=(0, 4))
        vac = r * np.exp(-r**2 / 2)
        return w, (v.T @ (vac / np.linalg.norm(vac))) ** 2

    (w1, _), (w2, c2) = fd(4000), fd(8000)
    res = solve_spectrum(build_grid(), lam=lam)
    # Richardson-extrapolated second-order finite differences
    assert np.allclose(res.energies[:5], (4 * w2 - w1) / 3, atol=1e-4)
    assert np.allclose(res.overlaps[:5], c2, rtol=1e-3)
