import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from su2mm.analysis import (EchoSeries, gauge_violation_rate, mitigation_report,
                            peak_amplitude_error, postselect_singlet, time_mae, wilson_interval,
                            zne_extrapolate, zne_series, zne_weights)
from su2mm.encoding import TruncationConfig, fock_encode
from su2mm.model import build_hamiltonian, vacuum_state
from su2mm.reference import echo_fft, time_grid
from su2mm.simulator import NoiseModel, ShotSet, estimate_number, index_to_bits, run_noisy_shots
from su2mm.trotter import build_trotter_circuit

CFG = TruncationConfig(K=2)


def test_zne_two_point_examples():
    assert zne_extrapolate({1: 0.8, 3: 0.6})[0] == pytest.approx(0.9)
    assert zne_extrapolate({1: 0.42, 3: 0.42})[0] == pytest.approx(0.42)
    v, e = zne_extrapolate({1: (0.8, 0.03), 3: (0.6, 0.04)})
    assert v == pytest.approx(0.9)
    assert e == pytest.approx(np.hypot(1.5 * 0.03, 0.5 * 0.04))


@settings(max_examples=50)
@given(st.floats(-1, 2), st.floats(-1, 2))
def test_zne_two_point_formula_exact(m1, m3):
    assert zne_extrapolate({1: m1, 3: m3})[0] == pytest.approx((3 * m1 - m3) / 2, abs=1e-12)


@settings(max_examples=50)
@given(st.floats(-2, 2), st.floats(-1, 1))
def test_zne_least_squares_recovers_line(a, b):
    pts = {f: a + b * f for f in (1, 3, 5)}
    assert zne_extrapolate(pts)[0] == pytest.approx(a, abs=1e-10)


def test_zne_needs_two_factors():
    with pytest.raises(ValueError):
        zne_extrapolate({1: 0.5})
    with pytest.raises(ValueError):
        zne_weights(np.array([3.0, 3.0]))


def test_zne_is_not_clipped():
    assert zne_extrapolate({1: 0.99, 3: 0.9})[0] > 1.0


def test_zne_series():
    t = time_grid(0.3, 0.1)
    s = zne_series({1: EchoSeries(t, [1, 0.9, 0.8, 0.7], [0, 0.01, 0.01, 0.01]),
                    3: EchoSeries(t, [1, 0.8, 0.6, 0.4], [0, 0.01, 0.01, 0.01])})
    assert np.allclose(s.values, [1, 0.95, 0.9, 0.85])
    assert s.source == "zne"
    with pytest.raises(ValueError):
        zne_series({1: EchoSeries(t, np.ones(4)), 3: EchoSeries(t + 1, np.ones(4))})


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12) and 0 < hi < 0.02
    lo, hi = wilson_interval(50, 100)
    assert (lo + hi) / 2 == pytest.approx(0.5)
    assert (hi - lo) / 2 == pytest.approx(0.05, rel=0.02)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_postselect_examples():
    odd = fock_encode((1, 0, 2), CFG)
    even = fock_encode((0, 2, 2), CFG)
    res = postselect_singlet(ShotSet({odd: 3, even: 7}, 10), CFG)
    assert res.retained.counts == {even: 7}
    assert res.discard_rate == pytest.approx(0.3)
    assert res.retained.n_shots + 3 == 10
    assert not res.empty


def test_postselect_all_discarded_is_flagged():
    res = postselect_singlet(ShotSet({fock_encode((1, 1, 1), CFG): 5}, 5), CFG)
    assert res.empty and res.retained.n_shots == 0 and res.discard_rate == 1.0
    with pytest.raises(ValueError):
        estimate_number(res.retained, CFG)
    with pytest.raises(ValueError):
        postselect_singlet(ShotSet({}, 0), CFG)


def test_uniform_random_bitstrings_discard_seven_eighths():
    rng = np.random.default_rng(5)
    s = ShotSet.from_indices(rng.integers(0, 64, 40000), 6)
    rate, err = gauge_violation_rate(s, CFG)
    assert abs(rate - 7 / 8) < 4 * err


def test_postselection_is_inert_on_noiseless_vacuum_runs():
    cfg = TruncationConfig(K=2, lam=10.0)
    ops = build_hamiltonian(cfg)
    c = build_trotter_circuit(ops, 0.4, 4, mode="full")
    s = run_noisy_shots(c, vacuum_state(cfg), NoiseModel(0.0, seed=1), 3000)
    res = postselect_singlet(s, cfg)
    assert res.discard_rate == 0.0
    assert estimate_number(res.retained, cfg) == estimate_number(s, cfg)


series_values = st.lists(st.floats(-1, 2), min_size=5, max_size=5)


@settings(max_examples=50)
@given(series_values, series_values, series_values)
def test_time_mae_is_a_metric(a, b, c):
    t = time_grid(0.4, 0.1)
    sa, sb, sc = (EchoSeries(t, v) for v in (a, b, c))
    assert time_mae(sa, sa) == 0
    assert time_mae(sa, sb) == pytest.approx(time_mae(sb, sa))
    assert time_mae(sa, sc) <= time_mae(sa, sb) + time_mae(sb, sc) + 1e-12
    if a != b:
        assert time_mae(sa, sb) > 0


def test_time_mae_grid_mismatch():
    t = time_grid(0.4, 0.1)
    with pytest.raises(ValueError):
        time_mae(EchoSeries(t, np.ones(5)), EchoSeries(t + 0.05, np.ones(5)))


def two_tone(amps):
    t = time_grid(10.0, 0.05)
    vals = 0.5 + sum(a * np.cos(w * t) for a, w in zip(amps, (3.77, 8.17, 13.2)))
    return EchoSeries(t, vals)


def test_peak_amplitude_error():
    ref = echo_fft(two_tone([0.2, 0.1, 0.05]))
    assert peak_amplitude_error(ref, ref) == 0.0
    scaled = echo_fft(two_tone([0.1, 0.05, 0.025]))
    assert peak_amplitude_error(ref, scaled) == pytest.approx(50.0, abs=3.0)
    with pytest.raises(ValueError):
        peak_amplitude_error(echo_fft(EchoSeries(time_grid(1.0, 0.1), np.ones(11))), ref)


def test_mitigation_report():
    rep = mitigation_report("zne", [0.8, 0.6], [0.95, 0.9], [1.0, 1.0], discard_rates=[0.0, 0.1])
    assert rep.raw_mae == pytest.approx(0.3)
    assert rep.mitigated_mae == pytest.approx(0.075)
    assert rep.reduction == pytest.approx(0.75)
    assert np.allclose(rep.improvements, [0.75, 0.75])


def test_index_to_bits_roundtrip_through_shotset():
    s = ShotSet.from_indices(np.array([5, 5, 2]), 3)
    assert s.counts == {index_to_bits(5, 3): 2, index_to_bits(2, 3): 1}
    idx, counts = s.indices()
    assert dict(zip(idx.tolist(), counts.tolist())) == {5: 2, 2: 1}
