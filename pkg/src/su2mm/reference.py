"""Classical oracles for the echo: exact diagonalization and spectral sums.

The Loschmidt echo of a reference state ``psi0`` is

    M(t) = |<psi0| exp(i H0 t) exp(-i H t) |psi0>|^2

and, when ``psi0`` is an eigenstate of ``H0``, reduces to
``|sum_n |c_n|^2 exp(-i E_n t)|^2`` with ``c_n = <psi_n|psi0>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pauli import DENSE_QUBIT_CAP, DimensionError, PauliSum, reachable_indices, restricted_matrix
from .spectral import SpectrumResult

SOURCES = ("exact_radial", "exact_truncated", "trotter_ideal", "shots_raw", "zne", "postselected")
DEFAULT_ECHO_STATES = 32
PEAK_THRESHOLD = 0.05


@dataclass(frozen=True)
class EchoSeries:
    """Echo values on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    source: str = "exact_truncated"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))
            if self.stderr.shape != self.values.shape:
                raise ValueError("stderr and values differ in shape")
        if self.times.shape != self.values.shape:
            raise ValueError(f"{len(self.times)} times but {len(self.values)} values")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        if len(self.times) < 2:
            raise ValueError("a single sample has no time step")
        steps = np.diff(self.times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("time grid is not uniform")
        return float(steps[0])

    def out_of_range(self) -> np.ndarray:
        """Points outside ``[-3 stderr, 1 + 3 stderr]``; flagged, never clipped."""
        eps = 3.0 * (self.stderr if self.stderr is not None else 0.0) + 1e-12
        return (self.values < -eps) | (self.values > 1.0 + eps)


@dataclass(frozen=True)
class EchoSpectrum:
    """Magnitude of the discrete Fourier transform of an echo series."""

    omegas: np.ndarray
    magnitudes: np.ndarray
    peaks: np.ndarray  # bin indices, strongest first
    resolution: float  # 2 pi / T

    def dominant(self, n: int = 3) -> np.ndarray:
        """The ``n`` strongest nonzero-frequency peak bins."""
        nz = self.peaks[self.peaks > 0]
        if len(nz) < n:
            raise ValueError(f"only {len(nz)} nonzero-frequency peaks, need {n}")
        return nz[:n]

    def peak_omegas(self, n: int = 3) -> np.ndarray:
        return self.omegas[self.dominant(n)]


def time_grid(T: float, dt: float) -> np.ndarray:
    """``0, dt, ..., T`` including both endpoints."""
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    n = int(round(T / dt))
    if not math.isclose(n * dt, T, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    return dt * np.arange(n + 1)


def exact_diag(h: PauliSum, cap: int = DENSE_QUBIT_CAP,
               indices: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Full Hermitian eigendecomposition, optionally on an invariant index subset."""
    if indices is None:
        mat = h.to_dense(cap)
    else:
        mat = restricted_matrix(h, indices)
    return np.linalg.eigh(mat)


def echo_from_spectrum(energies: np.ndarray, weights: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``|sum_n w_n exp(-i E_n t)|^2``."""
    amp = np.exp(-1j * np.outer(np.asarray(times), np.asarray(energies))) @ np.asarray(weights)
    return np.abs(amp) ** 2


def _is_eigenstate(h0: PauliSum, psi: np.ndarray, tol: float = 1e-10) -> bool:
    hpsi = h0.apply(psi)
    e = np.vdot(psi, hpsi)
    return float(np.linalg.norm(hpsi - e * psi)) < tol


def echo_exact(h: PauliSum, psi0: np.ndarray, times: np.ndarray, h0: PauliSum | None = None,
               cap: int = DENSE_QUBIT_CAP) -> EchoSeries:
    """Echo of ``psi0`` under ``h`` relative to free evolution under ``h0``.

    The computation is restricted to the basis states reachable from the
    support of ``psi0``; when ``psi0`` is an eigenstate of ``h0`` (or
    ``h0`` is omitted) the free factor is a global phase and is dropped.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    dim = 1 << h.n_qubits
    if psi0.shape != (dim,):
        raise DimensionError(f"state has shape {psi0.shape}, expected ({dim},)")
    if not math.isclose(np.linalg.norm(psi0), 1.0, abs_tol=1e-10):
        raise ValueError("reference state is not normalized")
    times = np.asarray(times, dtype=float)
    seeds = np.nonzero(np.abs(psi0) > 0)[0]
    if h0 is not None and not _is_eigenstate(h0, psi0):
        idx = reachable_indices(h + h0, seeds)
        w, v = exact_diag(h, cap, idx)
        w0, v0 = exact_diag(h0, cap, idx)
        phi = psi0[idx]
        a = v.conj().T @ phi
        a0 = v0.conj().T @ phi
        # <phi| e^{i H0 t} e^{-i H t} |phi> = (e^{-i H0 t} phi)^dag (e^{-i H t} phi)
        left = (v0 * 1.0) @ (np.exp(-1j * np.outer(w0, times)) * a0[:, None])
        right = v @ (np.exp(-1j * np.outer(w, times)) * a[:, None])
        values = np.abs(np.sum(left.conj() * right, axis=0)) ** 2
    else:
        idx = reachable_indices(h, seeds)
        w, v = exact_diag(h, cap, idx)
        weights = np.abs(v.conj().T @ psi0[idx]) ** 2
        values = echo_from_spectrum(w, weights, times)
    return EchoSeries(times, values, source="exact_truncated",
                      meta={"n_qubits": h.n_qubits, "sector_dimension": int(len(idx))})


def echo_radial(res: SpectrumResult, times: np.ndarray,
                n_states: int = DEFAULT_ECHO_STATES) -> EchoSeries:
    """Untruncated echo from the radial spectrum and vacuum overlaps."""
    if res.overlaps is None:
        raise ValueError("spectrum carries no vacuum overlaps (ell != 0)")
    n = min(n_states, len(res.energies))
    values = echo_from_spectrum(res.energies[:n], res.overlaps[:n], times)
    return EchoSeries(np.asarray(times, dtype=float), values, source="exact_radial",
                      meta={"n_states": n, "lambda": res.lam, "m": res.m})


def energy_variance(h: PauliSum, psi: np.ndarray) -> float:
    """``<H^2> - <H>^2``; the echo starts as ``1 - variance * t^2``."""
    hpsi = h.apply(np.asarray(psi, dtype=complex))
    mean = np.vdot(psi, hpsi).real
    return float(np.vdot(hpsi, hpsi).real - mean * mean)


def find_peaks(mag: np.ndarray, threshold: float = PEAK_THRESHOLD) -> np.ndarray:
    """Local maxima of a one-sided spectrum, strongest first.

    A nonzero bin is a peak when it strictly exceeds both neighbours and
    reaches ``threshold`` times the largest nonzero-frequency magnitude.  Bin
    0 is a peak when it exceeds bin 1.  Ties sort toward lower frequency.
    """
    mag = np.asarray(mag, dtype=float)
    n = len(mag)
    out = []
    if n > 1 and mag[0] > mag[1]:
        out.append(0)
    floor = threshold * (mag[1:].max() if n > 1 else 0.0)
    for k in range(1, n - 1):
        if mag[k] > mag[k - 1] and mag[k] > mag[k + 1] and mag[k] >= floor and mag[k] > 0:
            out.append(k)
    return np.array(sorted(out, key=lambda k: (-mag[k], k)), dtype=int)


def echo_fft(series: EchoSeries, threshold: float = PEAK_THRESHOLD) -> EchoSpectrum:
    """One-sided DFT magnitude of ``M(t)`` with angular frequencies.

    Bin ``k`` sits at ``omega_k = 2 pi k / (n dt)``; the quoted resolution is
    ``2 pi / T`` with ``T`` the last sample time.
    """
    n = len(series)
    if n < 4:
        raise ValueError(f"need at least 4 samples, got {n}")
    dt = series.dt
    mag = np.abs(np.fft.rfft(series.values))
    omegas = 2.0 * np.pi * np.fft.rfftfreq(n, dt)
    T = series.times[-1] - series.times[0]
    return EchoSpectrum(omegas, mag, find_peaks(mag, threshold), 2.0 * np.pi / T)
