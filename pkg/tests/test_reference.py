import numpy as np
import pytest
import scipy.linalg as sla

from su2mm.encoding import TruncationConfig
from su2mm.model import build_hamiltonian, vacuum_state
from su2mm.pauli import DimensionError, PauliSum, ResourceError
from su2mm.reference import (EchoSeries, echo_exact, echo_fft, echo_from_spectrum, echo_radial,
                             energy_variance, exact_diag, find_peaks, time_grid)
from su2mm.spectral import build_grid, solve_spectrum


@pytest.fixture(scope="module")
def ops2():
    return build_hamiltonian(TruncationConfig(K=2, lam=20.0))


def dense_echo(h, h0, psi, times):
    out = []
    for t in times:
        a = sla.expm(-1j * h0 * t) @ psi
        b = sla.expm(-1j * h * t) @ psi
        out.append(abs(np.vdot(a, b)) ** 2)
    return np.array(out)


def test_time_grid():
    assert np.allclose(time_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    assert len(time_grid(10.0, 0.05)) == 201
    with pytest.raises(ValueError):
        time_grid(1.0, 0.3)
    with pytest.raises(ValueError):
        time_grid(1.0, 0.0)


def test_series_validation():
    with pytest.raises(ValueError):
        EchoSeries([0, 1], [1.0])
    with pytest.raises(ValueError):
        EchoSeries([0, 1, 3], [1, 1, 1]).dt
    s = EchoSeries([0, 1, 2], [1.0, 1.2, -0.1], stderr=[0, 0.01, 0.1])
    assert list(s.out_of_range()) == [False, True, False]


def test_exact_diag_free_ground():
    ops = build_hamiltonian(TruncationConfig(K=2, lam=0.0))
    w, v = exact_diag(ops.h_full)
    assert w[0] == pytest.approx(1.5)
    assert np.all(np.isreal(w))
    with pytest.raises(ResourceError):
        exact_diag(ops.h_full, cap=4)


def test_echo_vacuum_matches_dense(ops2):
    rng = np.random.default_rng(0)
    times = np.sort(rng.uniform(0, 5, 6))
    psi = vacuum_state(ops2.cfg)
    got = echo_exact(ops2.h_full, psi, times, ops2.h_free).values
    want = dense_echo(ops2.h_full.to_dense(), ops2.h_free.to_dense(), psi, times)
    assert np.max(np.abs(got - want)) < 1e-8


def test_echo_general_state_matches_dense(ops2):
    rng = np.random.default_rng(1)
    psi = rng.normal(size=64) + 1j * rng.normal(size=64)
    psi /= np.linalg.norm(psi)
    times = np.array([0.0, 0.3, 1.7])
    got = echo_exact(ops2.h_full, psi, times, ops2.h_free).values
    want = dense_echo(ops2.h_full.to_dense(), ops2.h_free.to_dense(), psi, times)
    assert np.max(np.abs(got - want)) < 1e-8


def test_echo_starts_at_one_and_sector_is_small(ops2):
    s = echo_exact(ops2.h_full, vacuum_state(ops2.cfg), time_grid(1.0, 0.5), ops2.h_free)
    assert s.values[0] == pytest.approx(1.0)
    assert s.meta["sector_dimension"] == 8


def test_echo_rejects_bad_states(ops2):
    with pytest.raises(DimensionError):
        echo_exact(ops2.h_full, np.ones(8), [0.0])
    with pytest.raises(ValueError):
        echo_exact(ops2.h_full, np.ones(64), [0.0])


def test_short_time_quadratic_decay(ops2):
    psi = vacuum_state(ops2.cfg)
    t = 1e-3
    m = echo_exact(ops2.h_full, psi, [t], ops2.h_free).values[0]
    var = energy_variance(ops2.h_full, psi)
    assert (1 - m) / t**2 == pytest.approx(var, rel=1e-4)


def test_echo_from_spectrum_single_level():
    assert np.allclose(echo_from_spectrum([2.0], [1.0], np.linspace(0, 3, 7)), 1.0)


def test_radial_echo_free_is_constant():
    res = solve_spectrum(build_grid(), lam=0.0)
    s = echo_radial(res, time_grid(2.0, 0.1))
    assert np.allclose(s.values, 1.0, atol=1e-10)
    assert s.source == "exact_radial"


def test_fft_constant_series():
    spec = echo_fft(EchoSeries(time_grid(1.0, 0.1), np.ones(11)))
    assert list(spec.peaks) == [0]
    assert spec.resolution == pytest.approx(2 * np.pi)
    with pytest.raises(ValueError):
        spec.dominant(1)


def test_fft_needs_four_samples():
    with pytest.raises(ValueError):
        echo_fft(EchoSeries([0, 1, 2], [1, 1, 1]))


def test_fft_locates_single_tone():
    t = time_grid(20.0, 0.05)
    omega = 2 * np.pi * 10 / t.size / 0.05  # exactly on bin 10
    s = EchoSeries(t, 0.5 + 0.5 * np.cos(omega * t))
    spec = echo_fft(s)
    assert spec.dominant(1)[0] == 10
    assert spec.omegas[10] == pytest.approx(omega)


def test_find_peaks_threshold_and_ties():
    mag = np.array([5.0, 1.0, 3.0, 1.0, 3.0, 1.0, 0.1, 0.12, 0.1])
    assert list(find_peaks(mag)) == [0, 2, 4]
    assert list(find_peaks(mag, threshold=0.0)) == [0, 2, 4, 7]
