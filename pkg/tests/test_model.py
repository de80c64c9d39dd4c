import numpy as np
import pytest
from oracles import dense_fock_hamiltonian

from su2mm.encoding import TruncationConfig, fock_encode, fock_index
from su2mm.model import (UnsupportedModelError, build_gauge_generators, build_hamiltonian,
                         build_singlet_basis, casimir, free_spectrum, is_diagonal, mode_parity_op,
                         total_number_op, vacuum_state)
from su2mm.pauli import commutes, dumps, expectation, reachable_indices, restricted_matrix


@pytest.mark.parametrize("ordering", ["truncate", "normal"])
@pytest.mark.parametrize("K", [1, 2, 3])
def test_hamiltonian_matches_fock_oracle(K, ordering):
    cfg = TruncationConfig(K=K, lam=7.5, m=1.3)
    ops = build_hamiltonian(cfg, ordering)
    assert np.max(np.abs(ops.h_full.to_dense() - dense_fock_hamiltonian(cfg, ordering))) < 1e-10


def test_parts_sum_and_hermitian():
    ops = build_hamiltonian(TruncationConfig(K=2, lam=10))
    assert (ops.h_free + ops.h_int).allclose(ops.h_full, atol=1e-12)
    for op in (ops.h_full, ops.h_free, ops.h_int, *ops.gauge_generators):
        assert max(abs(c.imag) for _, c in op) < 1e-12


@pytest.mark.parametrize("K", [1, 2, 3])
def test_free_ground_energy(K):
    ops = build_hamiltonian(TruncationConfig(K=K, lam=0.0))
    assert np.linalg.eigvalsh(ops.h_full.to_dense())[0] == pytest.approx(1.5, abs=1e-12)
    assert expectation(ops.h_free, vacuum_state(ops.cfg)).real == pytest.approx(1.5)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_free_spectrum_normal_ordering(K):
    cfg = TruncationConfig(K=K, lam=0.0, m=0.8)
    evals = np.linalg.eigvalsh(build_hamiltonian(cfg, "normal").h_full.to_dense())
    assert np.allclose(evals, free_spectrum(cfg))


def test_free_spectrum_truncate_ordering_below_top_level():
    cfg = TruncationConfig(K=2, lam=0.0)
    diag = np.diag(build_hamiltonian(cfg).h_free.to_dense()).real
    for f in np.ndindex(3, 3, 3):  # occupations below Lambda - 1
        assert diag[fock_index(f, cfg)] == pytest.approx(sum(f) + 1.5)
    # the top level carries (Lambda - 1) / 2 instead of Lambda - 1/2
    assert diag[fock_index((3, 0, 0), cfg)] == pytest.approx(1.5 + 1.0)


@pytest.mark.parametrize("K", [2, 3])
def test_free_part_is_diagonal(K):
    assert is_diagonal(build_hamiltonian(TruncationConfig(K=K, lam=1.0)).h_free)


@pytest.mark.parametrize("K", [1, 2, 3, 4])
def test_max_weight(K):
    ops = build_hamiltonian(TruncationConfig(K=K, lam=1.0))
    assert ops.h_full.max_weight() <= 2 * K


def test_term_counts_grow():
    counts = [len(build_hamiltonian(TruncationConfig(K=K, lam=1.0)).h_full) for K in (1, 2, 3, 4)]
    assert counts == sorted(counts) and len(set(counts)) == 4
    assert counts[1:] == [61, 643, 4495]
    # exponentially sparse against the 64^K strings on 3K qubits
    assert all(c < 0.1 * 64**K for c, K in zip(counts[1:], (2, 3, 4)))


@pytest.mark.parametrize("K", [1, 2, 3])
def test_terms_commute_with_mode_parity(K):
    cfg = TruncationConfig(K=K, lam=3.0)
    ops = build_hamiltonian(cfg)
    for a in range(3):
        par = mode_parity_op(a, cfg).labels()[0]
        assert all(commutes(lab, par) for lab in ops.h_full.labels())


def test_mode_parity_is_minus_one_to_the_n():
    cfg = TruncationConfig(K=2)
    diag = np.diag(mode_parity_op(1, cfg).to_dense()).real
    for f in np.ndindex(4, 4, 4):
        assert diag[fock_index(f, cfg)] == (-1) ** f[1]


def test_unsupported_n():
    with pytest.raises(UnsupportedModelError):
        build_hamiltonian(TruncationConfig(K=1, N=3))


def test_deterministic_build():
    cfg = TruncationConfig(K=2, lam=10)
    assert dumps(build_hamiltonian(cfg).h_full) == dumps(build_hamiltonian(cfg).h_full)


def test_gauge_generators():
    cfg = TruncationConfig(K=2, lam=10)
    ops = build_hamiltonian(cfg)
    vac = vacuum_state(cfg)
    for g in build_gauge_generators(cfg):
        assert np.linalg.norm(g.apply(vac)) < 1e-12
    h = ops.h_full.to_dense()
    g = ops.gauge_generators[2].to_dense()
    assert np.linalg.norm(g @ h - h @ g) > 1e-6


def test_gauge_violation_of_ground_state_shrinks_with_K():
    values = []
    for K in (2, 3, 4):
        cfg = TruncationConfig(K=K, lam=10.0)
        ops = build_hamiltonian(cfg)
        c = casimir(ops)
        idx = reachable_indices(ops.h_full + c, [0])
        _, v = np.linalg.eigh(restricted_matrix(ops.h_full, idx))
        values.append(np.real(v[:, 0].conj() @ restricted_matrix(c, idx) @ v[:, 0]))
    assert 1e-2 > values[0] > values[1] > values[2] >= 0


def test_constructed_singlets_inside_cutoff_are_exact():
    cfg = TruncationConfig(K=3)
    c = casimir(cfg)
    for vec in build_singlet_basis(cfg).vectors[:3]:
        assert abs(expectation(c, vec)) < 1e-10


def test_singlet_basis():
    cfg = TruncationConfig(K=2)
    basis = build_singlet_basis(cfg)
    assert basis.dimension == 2
    assert np.allclose(basis.vectors[0], vacuum_state(cfg))
    v1 = basis.vectors[1]
    idx = [fock_index(f, cfg) for f in ((2, 0, 0), (0, 2, 0), (0, 0, 2))]
    assert np.allclose(np.abs(v1[idx]), 1 / np.sqrt(3))
    assert np.isclose(np.linalg.norm(v1[idx]), 1)


@pytest.mark.parametrize("K", [2, 3, 4])
def test_singlet_basis_support_and_dimension(K):
    cfg = TruncationConfig(K=K)
    basis = build_singlet_basis(cfg)
    assert basis.dimension == 2 ** (K - 1)
    gram = basis.vectors.conj() @ basis.vectors.T
    assert np.allclose(gram, np.eye(basis.dimension), atol=1e-10)
    odd = np.array([any(int(b) for b in fock_encode(f, cfg)[::K]) for f in np.ndindex(*(2**K,) * 3)])
    order = [fock_index(f, cfg) for f in np.ndindex(*(2**K,) * 3)]
    assert np.allclose(basis.vectors[:, np.array(order)[odd]], 0)


def test_total_number_op():
    cfg = TruncationConfig(K=2)
    n = total_number_op(cfg)
    assert is_diagonal(n)
    assert np.diag(n.to_dense())[fock_index((1, 2, 3), cfg)].real == pytest.approx(6)
    for a in range(3):
        assert commutes(n.labels()[-1], mode_parity_op(a, cfg).labels()[0])
