"""Statevector execution, stochastic Pauli noise and shot sampling.

Noise model: after every entangler, with probability ``p_twoq``, one of the
15 non-identity two-qubit Paulis is applied to the gate's qubits, chosen
uniformly.  Optional single-qubit noise (after ``h``/``rx``/``rz``, one of
X, Y, Z) and symmetric readout flips are off by default.

Random numbers come from a counter-based Philox generator keyed by
``(seed, shot)``, so every shot owns an independent stream and the result
does not depend on how shots are partitioned.  Draw order within a shot:

1. one uniform per entangler, in gate order (error iff ``u < p_twoq``);
2. if ``p_oneq > 0``, one uniform per single-qubit gate, in gate order;
3. one integer per triggered error, in gate order: ``1..15`` for two-qubit
   errors (letters ``IXYZ[i // 4]`` on the first qubit and ``IXYZ[i % 4]``
   on the second), ``1..3`` for single-qubit errors;
4. one uniform for the measurement, inverted through the cumulative Born
   distribution in basis-index order;
5. if ``p_meas > 0``, one uniform per qubit (flip iff ``u < p_meas``).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .encoding import TruncationConfig, decode_occupations
from .pauli import DimensionError
from .trotter import Circuit, Gate

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF
_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LETTERS = "IXYZ"
SUFFIX_MEMORY_BYTES = 512 * 2**20


@dataclass(frozen=True)
class NoiseModel:
    p_twoq: float = 1e-3
    p_oneq: float = 0.0
    p_meas: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p_twoq", "p_oneq", "p_meas"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class ShotSet:
    """Measured bitstrings (character ``q`` is qubit ``q``) with counts."""

    counts: dict[str, int]
    n_shots: int
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", dict(sorted(self.counts.items())))
        if sum(self.counts.values()) != self.n_shots:
            raise ValueError("counts do not sum to n_shots")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("negative count")

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.counts))) if self.counts else 0

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Basis indices and their counts."""
        keys = list(self.counts)
        idx = np.array([int(k[::-1], 2) for k in keys], dtype=np.int64)
        return idx, np.array([self.counts[k] for k in keys], dtype=np.int64)

    @classmethod
    def from_indices(cls, indices: np.ndarray, n_qubits: int, seed: int | None = None,
                     metadata: dict | None = None) -> "ShotSet":
        tally = Counter(int(i) for i in np.asarray(indices).ravel())
        counts = {index_to_bits(i, n_qubits): c for i, c in tally.items()}
        return cls(counts, int(sum(tally.values())), seed, dict(metadata or {}))


def index_to_bits(index: int, n_qubits: int) -> str:
    return "".join(str((index >> q) & 1) for q in range(n_qubits))


# -- gate application ----------------------------------------------------------

def _as_batch(state: np.ndarray) -> tuple[np.ndarray, bool]:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return state[:, None].copy(), True
    return state.copy(), False


def _apply_1q(state: np.ndarray, mat: np.ndarray, q: int) -> np.ndarray:
    dim, batch = state.shape
    view = state.reshape(dim >> (q + 1), 2, 1 << q, batch)
    return np.einsum("ab,ibjk->iajk", mat, view).reshape(dim, batch)


def _index(dim: int) -> np.ndarray:
    return np.arange(dim, dtype=np.int64)


def apply_gate(state: np.ndarray, gate: Gate) -> np.ndarray:
    """Apply one gate to a ``(dim, batch)`` array of states."""
    dim = state.shape[0]
    if gate.kind == "h":
        return _apply_1q(state, _H, gate.qubits[0])
    if gate.kind == "rx":
        c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
        return _apply_1q(state, np.array([[c, -1j * s], [-1j * s, c]]), gate.qubits[0])
    idx = _index(dim)
    if gate.kind == "rz":
        bit = (idx >> gate.qubits[0]) & 1
        phase = np.exp(-0.5j * gate.angle * (1 - 2 * bit))
        return state * phase[:, None]
    if gate.kind == "cx":
        c, t = gate.qubits
        src = idx ^ (((idx >> c) & 1) << t)
        return state[src]
    raise ValueError(f"unsupported gate {gate.kind}")


def apply_pauli(state: np.ndarray, letters: str, qubits: tuple[int, ...]) -> np.ndarray:
    for ch, q in zip(letters, qubits):
        if ch != "I":
            state = _apply_1q(state, _PAULI_1Q[ch], q)
    return state


def run_circuit(c: Circuit, psi0: np.ndarray, check_norm: bool = True) -> np.ndarray:
    """Noiseless statevector after the whole circuit."""
    state, single = _as_batch(psi0)
    if state.shape[0] != 1 << c.n_qubits:
        raise DimensionError(f"state dimension {state.shape[0]} does not match {c.n_qubits} qubits")
    for g in c.gates:
        state = apply_gate(state, g)
    if check_norm:
        norms = np.linalg.norm(state, axis=0)
        ref = np.linalg.norm(np.asarray(psi0, dtype=complex).reshape(state.shape[0], -1), axis=0)
        if not np.allclose(norms, ref, atol=1e-10):
            raise ArithmeticError("norm drifted during circuit execution")
    return state[:, 0] if single else state


def circuit_unitary(c: Circuit) -> np.ndarray:
    return run_circuit(c, np.eye(1 << c.n_qubits, dtype=complex))


def basis_state(index: int, n_qubits: int) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


# -- noisy trajectories ------------------------------------------------------------

def shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, shot]))


def _sample_index(prob_cdf: np.ndarray, u: float) -> int:
    i = int(np.searchsorted(prob_cdf, u * prob_cdf[-1], side="right"))
    return min(i, len(prob_cdf) - 1)


class _ShotPlan:
    """Per-shot error list and measurement uniform, drawn in the documented order."""

    __slots__ = ("errors", "u_meas", "flips")

    def __init__(self, rng: np.random.Generator, ent_pos: np.ndarray, one_pos: np.ndarray,
                 noise: NoiseModel, n_qubits: int) -> None:
        hits: list[tuple[int, int]] = []  # (gate position, width)
        if len(ent_pos):
            u = rng.random(len(ent_pos))
            hits += [(int(ent_pos[i]), 2) for i in np.nonzero(u < noise.p_twoq)[0]]
        if noise.p_oneq > 0 and len(one_pos):
            u = rng.random(len(one_pos))
            hits += [(int(one_pos[i]), 1) for i in np.nonzero(u < noise.p_oneq)[0]]
        hits.sort()
        errors = []
        for pos, width in hits:
            if width == 2:
                k = int(rng.integers(1, 16))
                errors.append((pos, PAULI_LETTERS[k // 4] + PAULI_LETTERS[k % 4]))
            else:
                errors.append((pos, PAULI_LETTERS[int(rng.integers(1, 4))]))
        self.errors = errors
        self.u_meas = float(rng.random())
        self.flips = (rng.random(n_qubits) < noise.p_meas) if noise.p_meas > 0 else None


def run_noisy_shots(c: Circuit, psi0: np.ndarray, noise: NoiseModel, n_shots: int,
                    metadata: dict | None = None, first_shot: int = 0) -> ShotSet:
    """Sample shots ``first_shot .. first_shot + n_shots - 1`` of ``c`` under ``noise``.

    Shot ``s`` always draws from the stream keyed by ``(seed, s)``, so
    disjoint shot ranges can be run separately and their counts added.
    Shots without errors sample the ideal output.  Trajectories with errors
    reuse prefix states and suffix unitaries when they fit in memory, else a
    batched forward sweep.
    """
    if n_shots < 0 or first_shot < 0:
        raise ValueError("n_shots and first_shot must be non-negative")
    n = c.n_qubits
    dim = 1 << n
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (dim,):
        raise DimensionError(f"state has shape {psi0.shape}, expected ({dim},)")
    ent_pos = np.array([i for i, g in enumerate(c.gates) if g.is_entangler], dtype=np.int64)
    one_pos = np.array([i for i, g in enumerate(c.gates) if not g.is_entangler], dtype=np.int64)

    plans = [_ShotPlan(shot_rng(noise.seed, s), ent_pos, one_pos, noise, n)
             for s in range(first_shot, first_shot + n_shots)]
    outcomes = np.zeros(n_shots, dtype=np.int64)
    ideal = run_circuit(c, psi0)
    ideal_cdf = np.cumsum(np.abs(ideal) ** 2)
    noisy = [s for s, p in enumerate(plans) if p.errors]
    for s, p in enumerate(plans):
        if not p.errors:
            outcomes[s] = _sample_index(ideal_cdf, p.u_meas)
    if noisy:
        locations = sorted({pos for s in noisy for pos, _ in plans[s].errors})
        if dim * dim * 16 * len(locations) <= SUFFIX_MEMORY_BYTES:
            finals = _finals_by_suffix(c, psi0, [plans[s].errors for s in noisy], locations)
        else:
            finals = _finals_by_sweep(c, psi0, [plans[s].errors for s in noisy])
        for j, s in enumerate(noisy):
            cdf = np.cumsum(np.abs(finals[:, j]) ** 2)
            outcomes[s] = _sample_index(cdf, plans[s].u_meas)
    if noise.p_meas > 0:
        for s, p in enumerate(plans):
            for q in np.nonzero(p.flips)[0]:
                outcomes[s] ^= 1 << int(q)
    meta = dict(c.metadata)
    meta.update(metadata or {})
    meta.update({"p_twoq": noise.p_twoq, "p_oneq": noise.p_oneq, "p_meas": noise.p_meas})
    return ShotSet.from_indices(outcomes, n, noise.seed, meta)


def _finals_by_suffix(c: Circuit, psi0: np.ndarray, error_lists: list, locations: list[int]) -> np.ndarray:
    """Final states via ``S_g P psi_g`` with ``S_g`` the unitary after gate g."""
    dim = psi0.shape[0]
    prefix: dict[int, np.ndarray] = {}
    state = psi0[:, None].copy()
    wanted = set(locations)
    for i, g in enumerate(c.gates):
        state = apply_gate(state, g)
        if i in wanted:
            prefix[i] = state[:, 0].copy()
    suffix: dict[int, np.ndarray] = {}
    acc = np.eye(dim, dtype=complex)  # unitary of gates after the current position
    next_loc = len(locations) - 1
    for i in range(len(c.gates) - 1, -1, -1):
        if next_loc >= 0 and locations[next_loc] == i:
            suffix[i] = acc.copy()
            next_loc -= 1
        # acc <- acc U_i = (U_i^dag acc^dag)^dag
        acc = apply_gate(acc.conj().T, c.gates[i].inverse()).conj().T
    finals = np.zeros((dim, len(error_lists)), dtype=complex)
    for j, errors in enumerate(error_lists):
        pos0, letters = errors[0]
        w = apply_pauli(prefix[pos0][:, None], letters, c.gates[pos0].qubits)
        w = suffix[pos0] @ w
        for pos, letters in errors[1:]:
            s = suffix[pos]
            w = s.conj().T @ w
            w = apply_pauli(w, letters, c.gates[pos].qubits)
            w = s @ w
        finals[:, j] = w[:, 0]
    return finals


def _finals_by_sweep(c: Circuit, psi0: np.ndarray, error_lists: list, chunk: int = 256) -> np.ndarray:
    dim = psi0.shape[0]
    finals = np.zeros((dim, len(error_lists)), dtype=complex)
    for start in range(0, len(error_lists), chunk):
        block = error_lists[start:start + chunk]
        at: dict[int, list[tuple[int, str]]] = {}
        for j, errors in enumerate(block):
            for pos, letters in errors:
                at.setdefault(pos, []).append((j, letters))
        state = np.repeat(psi0[:, None], len(block), axis=1)
        for i, g in enumerate(c.gates):
            state = apply_gate(state, g)
            for j, letters in at.get(i, ()):
                state[:, j:j + 1] = apply_pauli(state[:, j:j + 1], letters, g.qubits)
        finals[:, start:start + len(block)] = state
    return finals


# -- density-matrix cross-check ---------------------------------------------------

def run_density(c: Circuit, rho0: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Exact channel evolution; intended for a handful of qubits."""
    rho = np.asarray(rho0, dtype=complex).copy()
    for g in c.gates:
        rho = apply_gate(apply_gate(rho, g).conj().T, g).conj().T
        if g.is_entangler and noise.p_twoq > 0:
            rho = _depolarize(rho, g.qubits, noise.p_twoq, 2)
        elif not g.is_entangler and noise.p_oneq > 0:
            rho = _depolarize(rho, g.qubits, noise.p_oneq, 1)
    return rho


def _depolarize(rho: np.ndarray, qubits: tuple[int, ...], p: float, width: int) -> np.ndarray:
    n_ops = 4**width - 1
    acc = np.zeros_like(rho)
    for k in range(1, n_ops + 1):
        letters = PAULI_LETTERS[k // 4] + PAULI_LETTERS[k % 4] if width == 2 else PAULI_LETTERS[k]
        half = apply_pauli(rho, letters, qubits)
        acc += apply_pauli(half.conj().T, letters, qubits).conj().T
    return (1 - p) * rho + (p / n_ops) * acc


# -- estimators ------------------------------------------------------------------------

def estimate_echo(shots: ShotSet, reference: int = 0) -> tuple[float, float]:
    """Fraction of shots returning to ``reference`` with its binomial error."""
    if shots.n_shots == 0:
        raise ValueError("empty shot set")
    key = index_to_bits(reference, shots.n_qubits)
    p = shots.counts.get(key, 0) / shots.n_shots
    return p, math.sqrt(p * (1 - p) / shots.n_shots)


def estimate_number(shots: ShotSet, cfg: TruncationConfig) -> tuple[float, float]:
    """Mean total occupation and its standard error."""
    if shots.n_shots == 0:
        raise ValueError("empty shot set")
    idx, counts = shots.indices()
    totals = decode_occupations(idx, cfg).sum(axis=1).astype(float)
    mean = float(np.sum(totals * counts) / shots.n_shots)
    if shots.n_shots < 2:
        return mean, 0.0
    var = float(np.sum(counts * (totals - mean) ** 2) / (shots.n_shots - 1))
    return mean, math.sqrt(var / shots.n_shots)
