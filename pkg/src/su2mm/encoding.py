"""Fock-space truncation and binary qubit encoding of oscillator modes.

Register layout: mode ``a`` occupies qubits ``[a*K, a*K + K)`` and bit ``l``
of its occupation number sits on qubit ``a*K + l`` (least significant bit
first).  Bitstrings produced here list qubits in register order, i.e.
character ``q`` of the string is the value of qubit ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, factorial
from typing import NamedTuple, Sequence

import numpy as np

from .pauli import PauliSum

# |0><0| = (I+Z)/2, |1><1| = (I-Z)/2, |0><1| = (X+iY)/2, |1><0| = (X-iY)/2
_TRANSITIONS = {
    (0, 0): {"I": 0.5, "Z": 0.5},
    (1, 1): {"I": 0.5, "Z": -0.5},
    (0, 1): {"X": 0.5, "Y": 0.5j},
    (1, 0): {"X": 0.5, "Y": -0.5j},
}


@dataclass(frozen=True)
class TruncationConfig:
    """Truncation level and couplings of the N=2 matrix model.

    ``lam`` is the 't Hooft coupling (``lambda`` is reserved in Python).
    """

    K: int
    lam: float = 0.0
    m: float = 1.0
    N: int = 2

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.lam < 0:
            raise ValueError(f"coupling must be non-negative, got {self.lam}")

    @property
    def Lambda(self) -> int:
        return 1 << self.K

    @property
    def n_modes(self) -> int:
        return self.N * self.N - 1

    def n_qubits(self) -> int:
        return self.n_modes * self.K

    def mode_qubits(self, mode: int) -> range:
        return range(mode * self.K, (mode + 1) * self.K)


class FockIndex(NamedTuple):
    nx: int
    ny: int
    nz: int


# -- bit-level encoding -------------------------------------------------------

def fock_index(f: Sequence[int], cfg: TruncationConfig) -> int:
    """Computational-basis index of an occupation tuple."""
    if len(f) != cfg.n_modes:
        raise ValueError(f"expected {cfg.n_modes} occupations, got {len(f)}")
    idx = 0
    for a, n in enumerate(f):
        if not 0 <= n < cfg.Lambda:
            raise ValueError(f"occupation {n} of mode {a} outside [0, {cfg.Lambda - 1}]")
        idx |= int(n) << (a * cfg.K)
    return idx


def fock_encode(f: Sequence[int], cfg: TruncationConfig) -> str:
    idx = fock_index(f, cfg)
    return "".join(str((idx >> q) & 1) for q in range(cfg.n_qubits()))


def fock_decode(bits: str | int, cfg: TruncationConfig) -> FockIndex:
    n_q = cfg.n_qubits()
    if isinstance(bits, str):
        if len(bits) != n_q or set(bits) - {"0", "1"}:
            raise ValueError(f"expected a {n_q}-character bitstring, got {bits!r}")
        idx = sum(int(b) << q for q, b in enumerate(bits))
    else:
        idx = int(bits)
        if not 0 <= idx < (1 << n_q):
            raise ValueError(f"basis index {idx} outside the {n_q}-qubit register")
    mask = cfg.Lambda - 1
    occ = tuple((idx >> (a * cfg.K)) & mask for a in range(cfg.n_modes))
    return FockIndex(*occ) if cfg.n_modes == 3 else occ  # type: ignore[return-value]


def decode_occupations(indices: np.ndarray, cfg: TruncationConfig) -> np.ndarray:
    """Vectorized decode: basis indices -> (len, n_modes) occupation array."""
    indices = np.asarray(indices, dtype=np.int64)
    mask = cfg.Lambda - 1
    return np.stack([(indices >> (a * cfg.K)) & mask for a in range(cfg.n_modes)], axis=-1)


# -- operators on a single mode ----------------------------------------------

def transition_op(i: int, j: int, K: int) -> PauliSum:
    """Pauli expansion of the Fock transition ``|i><j|`` on K qubits."""
    out = None
    for ell in range(K):
        bit = PauliSum(1, _TRANSITIONS[((i >> ell) & 1, (j >> ell) & 1)])
        out = bit if out is None else out.tensor(bit)
    return out


def matrix_to_paulisum(mat: np.ndarray, K: int, tol: float = 1e-14) -> PauliSum:
    """Expand a ``2**K x 2**K`` matrix on one mode into Pauli strings."""
    mat = np.asarray(mat)
    dim = 1 << K
    if mat.shape != (dim, dim):
        raise ValueError(f"matrix shape {mat.shape} does not match K={K}")
    total = PauliSum.zero(K)
    for i, j in zip(*np.nonzero(np.abs(mat) > tol)):
        total = total + transition_op(int(i), int(j), K).scale(mat[i, j])
    return total


def lowering_matrix(K: int) -> np.ndarray:
    lam = 1 << K
    return np.diag(np.sqrt(np.arange(1, lam, dtype=float)), 1)


def lowering_op(K: int) -> PauliSum:
    """Truncated annihilator: ``a|k> = sqrt(k)|k-1>`` for ``1 <= k < 2**K``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    total = PauliSum.zero(K)
    for k in range(1, 1 << K):
        total = total + transition_op(k - 1, k, K).scale(math.sqrt(k))
    return total


def raising_op(K: int) -> PauliSum:
    return lowering_op(K).dagger()


def position_op(cfg: TruncationConfig) -> PauliSum:
    """``X = (a + a^dag) / sqrt(2m)`` on one mode."""
    a = lowering_op(cfg.K)
    return (a + a.dagger()).scale(1.0 / math.sqrt(2.0 * cfg.m)).real()


def momentum_op(cfg: TruncationConfig) -> PauliSum:
    """``P = i sqrt(m/2) (a^dag - a)`` on one mode."""
    a = lowering_op(cfg.K)
    return (a.dagger() - a).scale(1j * math.sqrt(cfg.m / 2.0)).real()


def number_op(cfg: TruncationConfig) -> PauliSum:
    """``sum_i 2**i (1 - Z_i) / 2`` on one mode; eigenvalue k on |k>."""
    K = cfg.K
    terms: dict[str, float] = {"I" * K: (cfg.Lambda - 1) / 2.0}
    for i in range(K):
        label = "I" * i + "Z" + "I" * (K - i - 1)
        terms[label] = -(1 << i) / 2.0
    return PauliSum(K, terms)


def embed(mode_op: PauliSum, mode_index: int, cfg: TruncationConfig) -> PauliSum:
    """Place a single-mode operator on its register slot, identity elsewhere."""
    if not 0 <= mode_index < cfg.n_modes:
        raise ValueError(f"mode {mode_index} outside [0, {cfg.n_modes})")
    if mode_op.n_qubits != cfg.K:
        raise ValueError(f"operator acts on {mode_op.n_qubits} qubits, expected K={cfg.K}")
    out = None
    for a in range(cfg.n_modes):
        piece = mode_op if a == mode_index else PauliSum.identity(cfg.K)
        out = piece if out is None else out.tensor(piece)
    return out


# -- normal-ordered ladder polynomials ----------------------------------------

class LadderPoly(dict):
    """Single-mode polynomial in normal order: ``{(p, q): c}`` means c a^dag^p a^q."""

    def __mul__(self, other: "LadderPoly") -> "LadderPoly":
        out = LadderPoly()
        for (p, q), c1 in self.items():
            for (s, t), c2 in other.items():
                # a^q a^dag^s = sum_k C(q,k) C(s,k) k! a^dag^(s-k) a^(q-k)
                for k in range(min(q, s) + 1):
                    key = (p + s - k, q + t - k)
                    out[key] = out.get(key, 0.0) + c1 * c2 * comb(q, k) * comb(s, k) * factorial(k)
        return out

    def __add__(self, other: "LadderPoly") -> "LadderPoly":
        out = LadderPoly(self)
        for k, v in other.items():
            out[k] = out.get(k, 0.0) + v
        return out

    def scale(self, f: complex) -> "LadderPoly":
        return LadderPoly({k: v * f for k, v in self.items()})

    def power(self, n: int) -> "LadderPoly":
        out = LadderPoly({(0, 0): 1.0})
        for _ in range(n):
            out = out * self
        return out

    def truncate(self, K: int) -> np.ndarray:
        """Replace ladders by their truncated matrices (creators left)."""
        a = lowering_matrix(K)
        ad = a.T
        mat = np.zeros((1 << K, 1 << K), dtype=complex)
        for (p, q), c in self.items():
            mat += c * np.linalg.matrix_power(ad, p) @ np.linalg.matrix_power(a, q)
        return mat


def position_poly(m: float) -> LadderPoly:
    s = 1.0 / math.sqrt(2.0 * m)
    return LadderPoly({(1, 0): s, (0, 1): s})


def momentum_poly(m: float) -> LadderPoly:
    s = math.sqrt(m / 2.0)
    return LadderPoly({(1, 0): 1j * s, (0, 1): -1j * s})
