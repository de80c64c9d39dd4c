"""Error mitigation and error metrics for echo experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .encoding import TruncationConfig, decode_occupations
from .reference import EchoSeries, EchoSpectrum
from .simulator import ShotSet


@dataclass(frozen=True)
class PostselectResult:
    retained: ShotSet
    discard_rate: float
    stderr: float  # Wilson half-width at one standard deviation
    empty: bool = False


@dataclass(frozen=True)
class MitigationReport:
    method: str
    raw_mae: float
    mitigated_mae: float
    improvements: np.ndarray  # per time point, 1 - |mitigated error| / |raw error|
    discard_rates: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def reduction(self) -> float:
        """Fractional reduction of the time-averaged error."""
        return 1.0 - self.mitigated_mae / self.raw_mae if self.raw_mae > 0 else 0.0


# -- zero-noise extrapolation ------------------------------------------------------

def zne_weights(factors: np.ndarray) -> np.ndarray:
    """Coefficients ``a`` with ``intercept = sum a_i y_i`` for a linear fit in f."""
    f = np.asarray(factors, dtype=float)
    if len(np.unique(f)) < 2:
        raise ValueError("zero-noise extrapolation needs at least two distinct folding factors")
    if len(f) == 2:
        f1, f2 = f
        return np.array([f2 / (f2 - f1), -f1 / (f2 - f1)])
    design = np.column_stack([np.ones_like(f), f])
    return np.linalg.pinv(design)[0]


def zne_extrapolate(points: Mapping[float, tuple[float, float] | float]) -> tuple[float, float]:
    """Linear extrapolation to ``f = 0`` from ``{f: (value, stderr)}``.

    With factors ``{1, 3}`` this is ``(3 M1 - M3) / 2``.  Results are not
    clipped to ``[0, 1]``.
    """
    factors = sorted(points)
    vals, errs = [], []
    for f in factors:
        v = points[f]
        value, err = (v if isinstance(v, tuple) else (v, 0.0))
        vals.append(value)
        errs.append(err)
    a = zne_weights(np.array(factors))
    value = float(a @ np.array(vals))
    stderr = float(math.sqrt(np.sum((a * np.array(errs)) ** 2)))
    return value, stderr


def zne_series(series_by_f: Mapping[float, EchoSeries]) -> EchoSeries:
    factors = sorted(series_by_f)
    first = series_by_f[factors[0]]
    for f in factors[1:]:
        if not np.allclose(series_by_f[f].times, first.times):
            raise ValueError("folding levels use different time grids")
    a = zne_weights(np.array(factors))
    vals = np.array([series_by_f[f].values for f in factors])
    errs = np.array([series_by_f[f].stderr if series_by_f[f].stderr is not None
                     else np.zeros(len(first)) for f in factors])
    return EchoSeries(first.times, a @ vals, np.sqrt((a[:, None] ** 2 * errs**2).sum(axis=0)),
                      source="zne", meta={"factors": factors})


# -- gauge-singlet post-selection ------------------------------------------------------

def wilson_interval(k: int, n: int, z: float = 1.0) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("Wilson interval needs n > 0")
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return centre - half, centre + half


def singlet_mask(indices: np.ndarray, cfg: TruncationConfig) -> np.ndarray:
    """True where every decoded occupation is even."""
    occ = decode_occupations(indices, cfg)
    return np.all(occ % 2 == 0, axis=-1)


def postselect_singlet(shots: ShotSet, cfg: TruncationConfig) -> PostselectResult:
    """Keep shots whose occupations are all even."""
    if shots.n_shots == 0:
        raise ValueError("empty shot set")
    idx, counts = shots.indices()
    keep = singlet_mask(idx, cfg)
    kept = {k: c for k, c, ok in zip(shots.counts, counts, keep) if ok}
    n_kept = int(sum(kept.values()))
    discarded = shots.n_shots - n_kept
    lo, hi = wilson_interval(discarded, shots.n_shots)
    meta = dict(shots.metadata)
    meta["postselected"] = True
    retained = ShotSet(kept, n_kept, shots.seed, meta)
    return PostselectResult(retained, discarded / shots.n_shots, 0.5 * (hi - lo), n_kept == 0)


def gauge_violation_rate(shots: ShotSet, cfg: TruncationConfig) -> tuple[float, float]:
    res = postselect_singlet(shots, cfg)
    return res.discard_rate, res.stderr


# -- error metrics --------------------------------------------------------------------

def time_mae(a: EchoSeries | np.ndarray, b: EchoSeries | np.ndarray) -> float:
    """Mean over time of ``|a(t) - b(t)|``."""
    if isinstance(a, EchoSeries) and isinstance(b, EchoSeries):
        if a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
            raise ValueError("series live on different time grids")
    va = a.values if isinstance(a, EchoSeries) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, EchoSeries) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise ValueError("series have different lengths")
    return float(np.mean(np.abs(va - vb)))


def peak_amplitude_error(reference: EchoSpectrum, candidate: EchoSpectrum, n_peaks: int = 3) -> float:
    """Mean relative amplitude error (percent) over the reference's dominant peaks.

    Each reference peak is matched to the candidate bin at the nearest
    frequency (the same bin on a shared grid) and compared against the
    reference height.
    """
    bins = reference.dominant(n_peaks)
    errs = []
    for k in bins:
        w = reference.omegas[k]
        j = int(np.argmin(np.abs(candidate.omegas - w)))
        if abs(candidate.omegas[j] - w) > reference.resolution:
            raise ValueError(f"no candidate bin within resolution of omega={w:.4g}")
        errs.append(abs(candidate.magnitudes[j] - reference.magnitudes[k]) / reference.magnitudes[k])
    return 100.0 * float(np.mean(errs))


def mitigation_report(method: str, raw: EchoSeries | np.ndarray, mitigated: EchoSeries | np.ndarray,
                      target: EchoSeries | np.ndarray,
                      discard_rates: np.ndarray | None = None) -> MitigationReport:
    """Compare raw and mitigated series against a target series."""
    def vals(s):
        return s.values if isinstance(s, EchoSeries) else np.asarray(s, dtype=float)
    raw_err = np.abs(vals(raw) - vals(target))
    mit_err = np.abs(vals(mitigated) - vals(target))
    with np.errstate(divide="ignore", invalid="ignore"):
        improvements = np.where(raw_err > 0, 1.0 - mit_err / raw_err, 0.0)
    return MitigationReport(method, float(raw_err.mean()), float(mit_err.mean()), improvements,
                            None if discard_rates is None else np.asarray(discard_rates))
