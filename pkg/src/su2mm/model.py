"""Truncated N=2 matrix-model operators.

The Hamiltonian is

    H = 1/2 sum_a (P_a^2 + m^2 X_a^2) + (lam/64) (sum_a X_a^2)^2

on three oscillator modes.  Two truncation orders are supported:

``"truncate"`` (default)
    Truncate X and P first, then form every product with the truncated
    operators.
``"normal"``
    Expand every monomial in ladder operators, normal-order it with the
    canonical commutator, then substitute truncated ladders.

The two differ only through matrix elements touching occupation ``2**K - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import (
    LadderPoly,
    TruncationConfig,
    embed,
    lowering_op,
    matrix_to_paulisum,
    momentum_op,
    momentum_poly,
    number_op,
    position_op,
    position_poly,
)
from .pauli import PauliSum

ORDERINGS = ("truncate", "normal")
_HERMITIAN_TOL = 1e-12


class UnsupportedModelError(NotImplementedError):
    pass


@dataclass(frozen=True)
class ModelOperators:
    h_full: PauliSum
    h_free: PauliSum
    h_int: PauliSum
    gauge_generators: tuple[PauliSum, PauliSum, PauliSum]
    cfg: TruncationConfig
    ordering: str = "truncate"
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SingletBasis:
    vectors: np.ndarray  # shape (k_max + 1, 2**n_qubits)
    k_max: int

    @property
    def dimension(self) -> int:
        return self.vectors.shape[0]


def _require_su2(cfg: TruncationConfig) -> None:
    if cfg.N != 2:
        raise UnsupportedModelError(
            f"N={cfg.N}: only SU(2) is built; the d_abc interaction for N>2 is not implemented")


def _hermitian(op: PauliSum, what: str) -> PauliSum:
    worst = max((abs(c.imag) for _, c in op), default=0.0)
    if worst >= _HERMITIAN_TOL:
        raise ArithmeticError(f"{what} is not Hermitian (max |Im c| = {worst:.3e})")
    return op.real()


def mode_blocks(cfg: TruncationConfig, ordering: str = "truncate") -> dict[str, PauliSum]:
    """Single-mode pieces ``h0``, ``x2``, ``x4`` on K qubits."""
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}, got {ordering!r}")
    K, m = cfg.K, cfg.m
    if ordering == "truncate":
        x = position_op(cfg)
        p = momentum_op(cfg)
        x2 = x @ x
        h0 = (p @ p + x2.scale(m * m)).scale(0.5)
        x4 = x2 @ x2
    else:
        xp = position_poly(m)
        pp = momentum_poly(m)
        x2p = xp.power(2)
        h0p = (pp.power(2) + x2p.scale(m * m)).scale(0.5)
        x2 = matrix_to_paulisum(x2p.truncate(K), K)
        h0 = matrix_to_paulisum(h0p.truncate(K), K)
        x4 = matrix_to_paulisum(xp.power(4).truncate(K), K)
    return {"h0": h0.real(), "x2": x2.real(), "x4": x4.real()}


def build_hamiltonian(cfg: TruncationConfig, ordering: str = "truncate") -> ModelOperators:
    _require_su2(cfg)
    blocks = mode_blocks(cfg, ordering)
    n_modes = cfg.n_modes
    n_q = cfg.n_qubits()

    h_free = PauliSum.zero(n_q)
    for a in range(n_modes):
        h_free = h_free + embed(blocks["h0"], a, cfg)

    x2 = [embed(blocks["x2"], a, cfg) for a in range(n_modes)]
    quartic = PauliSum.zero(n_q)
    for a in range(n_modes):
        quartic = quartic + embed(blocks["x4"], a, cfg)
        for b in range(n_modes):
            if a != b:
                quartic = quartic + x2[a] @ x2[b]
    h_int = quartic.scale(cfg.lam / 64.0)

    h_free = _hermitian(h_free, "free Hamiltonian")
    h_int = _hermitian(h_int, "interaction")
    h_full = h_free + h_int
    gens = build_gauge_generators(cfg)
    meta = {
        "K": cfg.K,
        "lambda": cfg.lam,
        "m": cfg.m,
        "n_qubits": n_q,
        "n_terms": len(h_full),
        "max_weight": h_full.max_weight(),
        "ordering": ordering,
        "qubit_layout": "mode-major; mode a on qubits [aK, aK+K), bit l of n_a on qubit aK+l",
        "h_free_diagonal": is_diagonal(h_free),
    }
    return ModelOperators(h_full, h_free, h_int, gens, cfg, ordering, meta)


def is_diagonal(op: PauliSum) -> bool:
    """True when every string is built from I and Z only."""
    return all(set(label) <= {"I", "Z"} for label, _ in op)


def build_gauge_generators(cfg: TruncationConfig) -> tuple[PauliSum, PauliSum, PauliSum]:
    """``G_a = i sum_bc eps_abc a_b^dag a_c`` with truncated ladders."""
    _require_su2(cfg)
    a = lowering_op(cfg.K)
    low = [embed(a, b, cfg) for b in range(3)]
    up = [op.dagger() for op in low]
    gens = []
    for g in range(3):
        b, c = (g + 1) % 3, (g + 2) % 3
        # eps_gbc = +1, eps_gcb = -1
        gen = (up[b] @ low[c] - up[c] @ low[b]).scale(1j)
        gens.append(_hermitian(gen, f"gauge generator {g}"))
    return tuple(gens)  # type: ignore[return-value]


def total_number_op(cfg: TruncationConfig) -> PauliSum:
    n1 = number_op(cfg)
    total = PauliSum.zero(cfg.n_qubits())
    for a in range(cfg.n_modes):
        total = total + embed(n1, a, cfg)
    return total


def mode_parity_op(mode: int, cfg: TruncationConfig) -> PauliSum:
    """``(-1)**n_a``: a single Z on the least significant qubit of the mode."""
    label = ["I"] * cfg.n_qubits()
    label[mode * cfg.K] = "Z"
    return PauliSum.single("".join(label))


def pair_creation_op(cfg: TruncationConfig) -> PauliSum:
    """Truncated ``sum_a (a_a^dag)^2``."""
    ad = lowering_op(cfg.K).dagger()
    ad2 = ad @ ad
    total = PauliSum.zero(cfg.n_qubits())
    for a in range(cfg.n_modes):
        total = total + embed(ad2, a, cfg)
    return total


def build_singlet_basis(cfg: TruncationConfig) -> SingletBasis:
    _require_su2(cfg)
    k_max = (1 << (cfg.K - 1)) - 1
    dim = 1 << cfg.n_qubits()
    pair = pair_creation_op(cfg)
    vec = np.zeros(dim, dtype=complex)
    vec[0] = 1.0
    vectors = []
    for k in range(k_max + 1):
        if k > 0:
            vec = pair.apply(vec)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ArithmeticError(f"singlet vector k={k} vanished under truncation")
        vectors.append(vec / norm)
    basis = np.array(vectors)
    gram = basis.conj() @ basis.T
    if not np.allclose(gram, np.eye(k_max + 1), atol=1e-10):
        raise ArithmeticError("singlet vectors are not orthonormal")
    return SingletBasis(basis, k_max)


def casimir(ops: ModelOperators | TruncationConfig) -> PauliSum:
    gens = ops.gauge_generators if isinstance(ops, ModelOperators) else build_gauge_generators(ops)
    return sum((g @ g for g in gens[1:]), gens[0] @ gens[0])


def free_spectrum(cfg: TruncationConfig) -> np.ndarray:
    """Sorted ``m (n_x + n_y + n_z + 3/2)`` over the truncated occupations."""
    n = np.arange(cfg.Lambda)
    tot = (n[:, None, None] + n[None, :, None] + n[None, None, :]).ravel()
    return np.sort(cfg.m * (tot + 1.5))


def vacuum_state(cfg: TruncationConfig) -> np.ndarray:
    psi = np.zeros(1 << cfg.n_qubits(), dtype=complex)
    psi[0] = 1.0
    return psi
