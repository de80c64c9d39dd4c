import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from su2mm.encoding import (FockIndex, TruncationConfig, decode_occupations, embed, fock_decode,
                            fock_encode, fock_index, lowering_op, momentum_op, number_op,
                            position_op, raising_op)
from su2mm.pauli import PauliSum, expectation


def ladder(K):
    n = 2**K
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


def test_config_invariants():
    cfg = TruncationConfig(K=3)
    assert cfg.Lambda == 8
    assert cfg.n_qubits() == 9
    with pytest.raises(ValueError):
        TruncationConfig(K=0)
    with pytest.raises(ValueError):
        TruncationConfig(K=2, m=0)


def test_lowering_k1():
    a = lowering_op(1)
    assert a.allclose(PauliSum(1, {"X": 0.5, "Y": 0.5j}))
    assert raising_op(1).allclose(PauliSum(1, {"X": 0.5, "Y": -0.5j}))


@pytest.mark.parametrize("K", [1, 2, 3])
def test_lowering_matches_ladder(K):
    mat = lowering_op(K).to_dense()
    assert np.allclose(mat, ladder(K), atol=1e-12)
    assert np.allclose(raising_op(K).to_dense(), mat.conj().T)


def test_lowering_boundaries_k2():
    a = lowering_op(2).to_dense()
    top = np.zeros(4)
    top[3] = 1
    assert np.allclose(a @ top, [0, 0, math.sqrt(3), 0])
    assert np.allclose(a[:, 0], 0)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_modified_commutator(K):
    a = lowering_op(K).to_dense()
    n = 2**K
    boundary = np.zeros((n, n))
    boundary[-1, -1] = n
    assert np.linalg.norm(a @ a.conj().T - a.conj().T @ a - (np.eye(n) - boundary)) < 1e-10


@pytest.mark.parametrize("K", [1, 2, 3])
def test_position_momentum(K):
    m = 1.7
    cfg = TruncationConfig(K=K, m=m)
    a = ladder(K)
    x, p = position_op(cfg), momentum_op(cfg)
    assert x.is_hermitian() and p.is_hermitian()
    assert np.allclose(x.to_dense(), (a + a.T) / math.sqrt(2 * m))
    assert np.allclose(p.to_dense(), 1j * math.sqrt(m / 2) * (a.T - a))
    vac = np.zeros(2**K)
    vac[0] = 1
    assert expectation(x @ x, vac).real == pytest.approx(1 / (2 * m))
    # [X, P] = i (1 - Lambda |top><top|)
    n = 2**K
    boundary = np.zeros((n, n))
    boundary[-1, -1] = n
    comm = x.to_dense() @ p.to_dense() - p.to_dense() @ x.to_dense()
    assert np.allclose(comm, 1j * (np.eye(n) - boundary), atol=1e-10)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_number_operator(K):
    cfg = TruncationConfig(K=K)
    n = number_op(cfg).to_dense()
    assert np.allclose(n, np.diag(np.arange(2**K)))
    a = ladder(K)
    assert np.allclose(n, a.T @ a)
    assert sorted(np.linalg.eigvalsh(n).round(12)) == list(range(2**K))


def test_number_op_on_three():
    cfg = TruncationConfig(K=2)
    state = np.zeros(4)
    state[3] = 1
    assert expectation(number_op(cfg), state).real == pytest.approx(3)


def test_parity_commutes_with_squares():
    for K in (1, 2, 3):
        cfg = TruncationConfig(K=K)
        parity = np.diag([(-1) ** k for k in range(2**K)])
        for op in (position_op(cfg), momentum_op(cfg)):
            sq = (op @ op).to_dense()
            assert np.allclose(parity @ sq, sq @ parity)


def test_embed_layout():
    cfg = TruncationConfig(K=2)
    z0 = PauliSum.single("ZI")
    e = embed(z0, 1, cfg)
    assert e.labels() == ["IIZIII"]
    assert e.max_weight() == z0.max_weight()
    with pytest.raises(ValueError):
        embed(z0, 3, cfg)


def test_embed_factorizes_on_product_states():
    cfg = TruncationConfig(K=1)
    rng = np.random.default_rng(3)
    locals_ = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(3)]
    locals_ = [v / np.linalg.norm(v) for v in locals_]
    psi = np.kron(np.kron(locals_[2], locals_[1]), locals_[0])
    x = position_op(cfg)
    for a in range(3):
        want = np.vdot(locals_[a], x.to_dense() @ locals_[a])
        assert abs(expectation(embed(x, a, cfg), psi) - want) < 1e-12


def test_fock_encoding_examples():
    cfg = TruncationConfig(K=2)
    assert fock_encode((0, 0, 0), cfg) == "000000"
    # per mode, least significant bit first: 3 -> 11, 1 -> 10, 2 -> 01
    assert fock_encode((3, 1, 2), cfg) == "111001"
    assert fock_decode("111001", cfg) == FockIndex(3, 1, 2)
    with pytest.raises(ValueError):
        fock_encode((4, 0, 0), cfg)


def test_fock_roundtrip_exhaustive_k2():
    cfg = TruncationConfig(K=2)
    for f in itertools.product(range(4), repeat=3):
        assert fock_decode(fock_encode(f, cfg), cfg) == f
        assert tuple(decode_occupations(np.array([fock_index(f, cfg)]), cfg)[0]) == f


@given(st.integers(1, 4), st.data())
def test_fock_roundtrip_property(K, data):
    cfg = TruncationConfig(K=K)
    f = tuple(data.draw(st.integers(0, 2**K - 1)) for _ in range(3))
    assert fock_decode(fock_index(f, cfg), cfg) == f
