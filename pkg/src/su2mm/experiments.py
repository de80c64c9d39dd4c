"""Reproduction recipes: each returns plain tables ready to be written out."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import (gauge_violation_rate, peak_amplitude_error, postselect_singlet, time_mae,
                       zne_extrapolate)
from .encoding import TruncationConfig
from .model import build_hamiltonian, total_number_op, vacuum_state
from .pauli import expectation
from .reference import EchoSeries, echo_exact, echo_fft, echo_radial, time_grid
from .simulator import (NoiseModel, ShotSet, estimate_echo, estimate_number, run_circuit,
                        run_noisy_shots)
from .spectral import DEFAULT_L, DEFAULT_N_GRID, build_grid, solve_spectrum
from .trotter import build_trotter_circuit, circuit_metrics, fold_circuit, step_metrics

TARGETS = ("table1", "table2", "table3", "fig1", "fig3", "fig4", "fig5-sim", "fig6-sim")


@dataclass
class Table:
    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def echo_table(series: EchoSeries, name: str = "echo") -> Table:
    err = series.stderr if series.stderr is not None else np.zeros(len(series))
    rows = [(float(t), float(v), float(e), series.source)
            for t, v, e in zip(series.times, series.values, err)]
    return Table(name, ("t", "value", "stderr", "source"), rows, dict(series.meta))


def spectrum_fft_table(series: EchoSeries, name: str = "fft") -> tuple[Table, Table]:
    spec = echo_fft(series)
    fft = Table(name, ("k", "omega", "magnitude"),
                [(k, float(w), float(a)) for k, (w, a) in enumerate(zip(spec.omegas, spec.magnitudes))],
                {"resolution": spec.resolution})
    peaks = Table(name + "_peaks", ("rank", "k", "omega", "magnitude"),
                  [(i, int(k), float(spec.omegas[k]), float(spec.magnitudes[k]))
                   for i, k in enumerate(spec.peaks)], {"resolution": spec.resolution})
    return fft, peaks


# -- classical oracles --------------------------------------------------------------

def spectrum(lam: float, m: float = 1.0, n_states: int = 6, L: float = DEFAULT_L,
             n_grid: int = DEFAULT_N_GRID) -> Table:
    res = solve_spectrum(build_grid(L, n_grid), m=m, lam=lam)
    rows = [(n, float(res.energies[n]), float(res.overlaps[n])) for n in range(n_states)]
    return Table("spectrum", ("n", "E", "overlap"), rows,
                 {"lambda": lam, "m": m, "L": L, "n_grid": n_grid})


def table3(lams: Sequence[float] = (2.0, 10.0, 20.0), n_states: int = 5) -> list[Table]:
    rows = []
    for lam in lams:
        rows += [(lam,) + r for r in spectrum(lam, n_states=n_states).rows]
    return [Table("table3", ("lambda", "n", "E", "overlap"), rows,
                  {"m": 1.0, "L": DEFAULT_L, "n_grid": DEFAULT_N_GRID})]


def radial_echo(lam: float, T: float, dt: float, m: float = 1.0) -> EchoSeries:
    res = solve_spectrum(build_grid(DEFAULT_L, DEFAULT_N_GRID), m=m, lam=lam)
    return echo_radial(res, time_grid(T, dt))


def truncated_echo(K: int, lam: float, T: float, dt: float, m: float = 1.0) -> EchoSeries:
    cfg = TruncationConfig(K=K, lam=lam, m=m)
    ops = build_hamiltonian(cfg)
    return echo_exact(ops.h_full, vacuum_state(cfg), time_grid(T, dt), ops.h_free)


def table2(lam: float = 20.0, T: float = 10.0, dt: float = 0.05,
           Ks: Sequence[int] = (2, 3, 4)) -> list[Table]:
    exact = radial_echo(lam, T, dt)
    ref = echo_fft(exact)
    rows = []
    for K in Ks:
        trunc = truncated_echo(K, lam, T, dt)
        rows.append((K, time_mae(trunc, exact), peak_amplitude_error(ref, echo_fft(trunc))))
    return [Table("table2", ("K", "time_mae", "peak_amplitude_error_pct"), rows,
                  {"lambda": lam, "T": T, "dt": dt})]


def fig1(lam: float = 40.0, T: float = 10.0, dt: float = 0.05) -> list[Table]:
    series = radial_echo(lam, T, dt)
    fft, peaks = spectrum_fft_table(series, "fig1_fft")
    res = solve_spectrum(build_grid(DEFAULT_L, DEFAULT_N_GRID), lam=lam)
    gaps = Table("fig1_gaps", ("n1", "n2", "omega"),
                 [(a, b, float(res.energies[b] - res.energies[a]))
                  for a in range(3) for b in range(a + 1, 6)], {"lambda": lam})
    return [echo_table(series, "fig1_echo"), fft, peaks, gaps]


def fig3(lam: float = 20.0, T: float = 10.0, dt: float = 0.05,
         Ks: Sequence[int] = (2, 3, 4)) -> list[Table]:
    out = []
    for tag, series in [("exact", radial_echo(lam, T, dt))] + [
            (f"K{K}", truncated_echo(K, lam, T, dt)) for K in Ks]:
        fft, peaks = spectrum_fft_table(series, f"fig3_fft_{tag}")
        out += [echo_table(series, f"fig3_echo_{tag}"), fft, peaks]
    return out


def table1(Ks: Sequence[int] = (2, 3), strategies: Sequence[str] = ("grouped", "ladder")) -> list[Table]:
    rows = []
    for strategy in strategies:
        for K in Ks:
            m = step_metrics(build_hamiltonian(TruncationConfig(K=K, lam=10.0)), strategy=strategy)
            rows.append((K, strategy, m.depth, m.twoq_depth, m.twoq_count))
    return [Table("table1", ("K", "strategy", "depth", "twoq_depth", "twoq_count"), rows,
                  {"mode": "interaction"})]


# -- noisy simulation ---------------------------------------------------------------

def simulate(K: int, lam: float, dt: float, steps: int, shots: int, p2q: float,
             folds: Sequence[int] = (1,), seed: int = 0, observable: str = "echo",
             m: float = 1.0, keep_histograms: bool = False) -> dict:
    """Shots at ``t = r dt`` for ``r = 0..steps`` and every folding factor.

    Echo circuits compile the interaction only; number-operator circuits
    compile the full Hamiltonian.
    """
    if observable not in ("echo", "number"):
        raise ValueError(f"observable must be 'echo' or 'number', got {observable!r}")
    if steps < 0 or shots < 1 or dt <= 0:
        raise ValueError("need steps >= 0, shots >= 1 and dt > 0")
    for f in folds:
        if f < 1 or f % 2 == 0:
            raise ValueError(f"folding factor must be odd and positive, got {f}")
    cfg = TruncationConfig(K=K, lam=lam, m=m)
    ops = build_hamiltonian(cfg)
    psi0 = vacuum_state(cfg)
    mode = "interaction" if observable == "echo" else "full"
    times = dt * np.arange(steps + 1)
    exact = echo_exact(ops.h_full, psi0, times, ops.h_free).values if observable == "echo" else None
    if observable == "number":
        w, v = np.linalg.eigh(ops.h_full.to_dense())
        amps = v @ (np.exp(-1j * np.outer(w, times)) * (v.conj().T @ psi0)[:, None])
        n_op = total_number_op(cfg)
        exact = np.array([expectation(n_op, amps[:, j]).real for j in range(len(times))])

    ideal, depth2 = [], []
    per_fold = {f: {"values": [], "stderr": [], "gauge_violation_rate": [],
                    "gauge_violation_stderr": [], "twoq_depth": [], "histograms": []} for f in folds}
    for r, t in enumerate(times):
        base = build_trotter_circuit(ops, float(t), r, mode=mode)
        psi = run_circuit(base, psi0)
        ideal.append(abs(psi[0]) ** 2 if observable == "echo"
                     else expectation(total_number_op(cfg), psi).real)
        depth2.append(circuit_metrics(base).twoq_depth)
        for f in folds:
            c = fold_circuit(base, (f - 1) // 2)
            s = run_noisy_shots(c, psi0, NoiseModel(p2q, seed=seed), shots,
                                {"lambda": lam, "K": K})
            val, err = estimate_echo(s) if observable == "echo" else estimate_number(s, cfg)
            rate, rate_err = gauge_violation_rate(s, cfg)
            rec = per_fold[f]
            rec["values"].append(val)
            rec["stderr"].append(err)
            rec["gauge_violation_rate"].append(rate)
            rec["gauge_violation_stderr"].append(rate_err)
            rec["twoq_depth"].append(circuit_metrics(c).twoq_depth)
            if keep_histograms:
                rec["histograms"].append(s.counts)
    for rec in per_fold.values():
        if not keep_histograms:
            del rec["histograms"]
    return {
        "params": {"K": K, "lambda": lam, "m": m, "dt": dt, "steps": steps, "shots": shots,
                   "p2q": p2q, "folds": list(folds), "seed": seed, "observable": observable,
                   "mode": mode, "version": __version__},
        "times": times.tolist(),
        "exact_truncated": list(map(float, exact)),
        "trotter_ideal": list(map(float, ideal)),
        "twoq_depth": depth2,
        "folds": {str(f): per_fold[f] for f in folds},
    }


def mitigate_zne(record: dict) -> dict:
    folds = record["folds"]
    if len(folds) < 2:
        raise ValueError("zero-noise extrapolation needs a record with at least two folds")
    target = np.array(record["trotter_ideal"])
    values, errs = [], []
    for j in range(len(record["times"])):
        v, e = zne_extrapolate({int(f): (folds[f]["values"][j], folds[f]["stderr"][j]) for f in folds})
        values.append(v)
        errs.append(e)
    raw = np.array(folds[min(folds, key=int)]["values"])
    values = np.array(values)
    return {
        "method": "zne",
        "target": "trotter_ideal",
        "times": record["times"],
        "mitigated": values.tolist(),
        "mitigated_stderr": errs,
        "raw_mae": float(np.mean(np.abs(raw - target))),
        "mitigated_mae": float(np.mean(np.abs(values - target))),
        "improvements": _improvements(raw, values, target),
    }


def mitigate_postselect(record: dict) -> dict:
    params = record["params"]
    cfg = TruncationConfig(K=params["K"], lam=params["lambda"], m=params.get("m", 1.0))
    fold = min(record["folds"], key=int)
    rec = record["folds"][fold]
    if "histograms" not in rec:
        raise ValueError("post-selection needs shot histograms (simulate --histogram)")
    target = np.array(record["exact_truncated"])
    raw, mit, errs, discard, flagged = [], [], [], [], []
    for counts in rec["histograms"]:
        s = ShotSet(counts, int(sum(counts.values())))
        ps = postselect_singlet(s, cfg)
        est = estimate_echo if params["observable"] == "echo" else (lambda x: estimate_number(x, cfg))
        raw.append(est(s)[0])
        discard.append(ps.discard_rate)
        if ps.empty:
            mit.append(float("nan"))
            errs.append(float("nan"))
            flagged.append(True)
            continue
        v, e = est(ps.retained)
        mit.append(v)
        errs.append(e)
        flagged.append(False)
    raw, mit = np.array(raw), np.array(mit)
    ok = ~np.isnan(mit)
    return {
        "method": "postselect",
        "target": "exact_truncated",
        "times": record["times"],
        "mitigated": mit.tolist(),
        "mitigated_stderr": errs,
        "discard_rate": discard,
        "empty": flagged,
        "raw_mae": float(np.mean(np.abs(raw - target))),
        "mitigated_mae": float(np.mean(np.abs(mit[ok] - target[ok]))) if ok.any() else float("nan"),
        "improvements": _improvements(raw, mit, target),
    }


def _improvements(raw: np.ndarray, mit: np.ndarray, target: np.ndarray) -> list[float]:
    r = np.abs(raw - target)
    m = np.abs(mit - target)
    return [float(1.0 - b / a) if a > 0 else 0.0 for a, b in zip(r, m)]


def fig4(shots: int = 30000, seed: int = 0, p2q: float = 1e-3, dt: float = 0.1, steps: int = 5,
         lams: Sequence[float] = (10.0, 20.0)) -> list[Table]:
    rows = []
    for lam in lams:
        rec = simulate(2, lam, dt, steps, shots, p2q, (1,), seed)
        radial = radial_echo(lam, dt * steps, dt).values
        f1 = rec["folds"]["1"]
        for j, t in enumerate(rec["times"]):
            rows.append((lam, t, float(radial[j]), rec["exact_truncated"][j], rec["trotter_ideal"][j],
                         f1["values"][j], f1["stderr"][j]))
    return [Table("fig4", ("lambda", "t", "exact_radial", "exact_truncated", "trotter_ideal",
                           "shots_raw", "stderr"), rows,
                  {"K": 2, "shots": shots, "p2q": p2q, "seed": seed})]


def fig5_sim(shots: int = 250, seeds: Sequence[int] = (0,), p2q: float = 1e-3, dt: float = 0.1,
             steps: int = 5, lams: Sequence[float] = (10.0, 20.0)) -> list[Table]:
    echo_rows, viol_rows = [], []
    for lam in lams:
        for seed in seeds:
            rec = simulate(2, lam, dt, steps, shots, p2q, (1, 3), seed)
            zne = mitigate_zne(rec)
            f1, f3 = rec["folds"]["1"], rec["folds"]["3"]
            for j, t in enumerate(rec["times"]):
                echo_rows.append((lam, seed, t, rec["exact_truncated"][j], rec["trotter_ideal"][j],
                                  f1["values"][j], f1["stderr"][j], f3["values"][j], f3["stderr"][j],
                                  zne["mitigated"][j], zne["mitigated_stderr"][j]))
            for f, fr in rec["folds"].items():
                for j in range(len(rec["times"])):
                    viol_rows.append((lam, seed, int(f), j, fr["twoq_depth"][j],
                                      fr["gauge_violation_rate"][j], fr["gauge_violation_stderr"][j]))
    meta = {"K": 2, "shots": shots, "p2q": p2q, "folds": [1, 3]}
    return [Table("fig5_echo", ("lambda", "seed", "t", "exact_truncated", "trotter_ideal", "raw_f1",
                                "stderr_f1", "raw_f3", "stderr_f3", "zne", "zne_stderr"), echo_rows, meta),
            Table("fig5_violation", ("lambda", "seed", "fold", "r", "twoq_depth", "rate", "stderr"),
                  viol_rows, meta)]


def fig6_sim(shots: int = 250, seeds: Sequence[int] = (0,), p2q: float = 1e-3, dt: float = 0.1,
             steps: int = 5, lams: Sequence[float] = (10.0, 20.0)) -> list[Table]:
    rows = []
    for lam in lams:
        for seed in seeds:
            rec = simulate(2, lam, dt, steps, shots, p2q, (1,), seed, "number", keep_histograms=True)
            ps = mitigate_postselect(rec)
            f1 = rec["folds"]["1"]
            for j, t in enumerate(rec["times"]):
                rows.append((lam, seed, t, rec["exact_truncated"][j], rec["trotter_ideal"][j],
                             f1["values"][j], f1["stderr"][j], ps["mitigated"][j],
                             ps["mitigated_stderr"][j], ps["discard_rate"][j]))
    return [Table("fig6_number", ("lambda", "seed", "t", "exact_truncated", "trotter_ideal", "raw",
                                  "raw_stderr", "postselected", "postselected_stderr", "discard_rate"),
                  rows, {"K": 2, "shots": shots, "p2q": p2q})]


def reproduce(target: str, shots: int | None = None, seeds: Sequence[int] = (0,)) -> list[Table]:
    if target == "table1":
        return table1()
    if target == "table2":
        return table2()
    if target == "table3":
        return table3()
    if target == "fig1":
        return fig1()
    if target == "fig3":
        return fig3()
    if target == "fig4":
        return fig4(shots=shots or 30000, seed=seeds[0])
    if target == "fig5-sim":
        return fig5_sim(shots=shots or 250, seeds=seeds)
    if target == "fig6-sim":
        return fig6_sim(shots=shots or 250, seeds=seeds)
    raise ValueError(f"unknown target {target!r}; choose from {TARGETS}")
