"""First-order Trotter circuits, circuit metrics and gate folding.

Gate conventions (all angles in radians):

``h``
    Hadamard.
``rx``
    ``Rx(a) = exp(-i a X / 2)``; ``Rx(pi/2)`` maps Y to Z under conjugation.
``rz``
    ``Rz(a) = exp(-i a Z / 2)``.
``cx``
    CNOT with ``qubits = (control, target)``; the only entangler, and the
    gate that noise and folding act on.

Two synthesis strategies are available.  ``"ladder"`` compiles every Pauli
exponential on its own with a CNOT chain over the support.  ``"grouped"``
(default) collects strings sharing the same X/Y support, maps them all to
diagonal strings with one Clifford (a CNOT fan-out onto a pivot qubit plus a
basis change), and realizes the diagonal phases with a chain of ``rz``
rotations on one target qubit, CNOTs folding each string's parity onto it
in a cheap visiting order.  Both realize an
exact product of the individual term exponentials; they differ only in term
order and gate cost.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

from .model import ModelOperators
from .pauli import PauliSum, label_to_masks, support

ENTANGLERS = ("cx",)
STRATEGIES = ("grouped", "ladder")
MODES = ("interaction", "full")
_KINDS = ("h", "rx", "rz", "cx")


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n = 2 if self.kind in ENTANGLERS else 1
        if len(self.qubits) != n or len(set(self.qubits)) != n:
            raise ValueError(f"{self.kind} needs {n} distinct qubits, got {self.qubits}")
        if not math.isfinite(self.angle):
            raise ValueError("gate angle must be finite")

    @property
    def is_entangler(self) -> bool:
        return self.kind in ENTANGLERS

    def inverse(self) -> "Gate":
        if self.kind in ("h", "cx"):
            return self
        return Gate(self.kind, self.qubits, -self.angle)

    def to_text(self) -> str:
        qs = " ".join(str(q) for q in self.qubits)
        if self.kind in ("h", "cx"):
            return f"{self.kind} {qs}"
        return f"{self.kind} {qs} {self.angle:.17g}"

    @classmethod
    def from_text(cls, line: str) -> "Gate":
        parts = line.split()
        kind = parts[0]
        n = 2 if kind in ENTANGLERS else 1
        qubits = tuple(int(p) for p in parts[1:1 + n])
        angle = float(parts[1 + n]) if len(parts) > 1 + n else 0.0
        return cls(kind, qubits, angle)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits or min(g.qubits) < 0:
                raise ValueError(f"gate {g} outside a {self.n_qubits}-qubit register")

    def __len__(self) -> int:
        return len(self.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)),
                       dict(self.metadata))

    def to_text(self) -> str:
        """Line-oriented dump: a header comment then one gate per line."""
        head = f"# n_qubits {self.n_qubits}"
        meta = "".join(f"\n# {k} {v}" for k, v in sorted(self.metadata.items()))
        body = "".join("\n" + g.to_text() for g in self.gates)
        return head + meta + body + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        n = None
        gates = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("# n_qubits"):
                n = int(line.split()[2])
            elif not line.startswith("#"):
                gates.append(Gate.from_text(line))
        if n is None:
            raise ValueError("missing '# n_qubits' header")
        return cls(n, tuple(gates))


class CircuitMetrics(NamedTuple):
    depth: int
    twoq_depth: int
    twoq_count: int


@dataclass(frozen=True)
class TrotterPlan:
    """Ordered Hermitian terms of one Trotter step and their parallel layers."""

    terms: tuple[tuple[str, float], ...]
    layers: tuple[tuple[int, ...], ...]  # indices into ``terms``
    ordering: str = "descending |c|, then label"

    def ordered(self) -> list[tuple[str, float]]:
        """Terms in the order the step applies them (layer by layer)."""
        return [self.terms[i] for layer in self.layers for i in layer]


# -- term ordering and per-term synthesis ------------------------------------

def _hermitian_terms(h: PauliSum) -> list[tuple[str, float]]:
    if not h.is_hermitian():
        raise ValueError("Trotter compilation needs a Hermitian operator (real coefficients)")
    return [(lab, c.real) for lab, c in h.items() if set(lab) != {"I"}]


def order_terms(h: PauliSum) -> TrotterPlan:
    """Sort by descending ``|c|`` (label tie-break), then first-fit layering.

    The identity string is dropped (global phase).  Each term joins the first
    layer whose members all have support disjoint from it.
    """
    terms = sorted(_hermitian_terms(h), key=lambda t: (-abs(t[1]), t[0]))
    layers: list[list[int]] = []
    occupied: list[set[int]] = []
    for i, (lab, _) in enumerate(terms):
        sup = set(support(lab))
        for layer, used in zip(layers, occupied):
            if not (used & sup):
                layer.append(i)
                used |= sup
                break
        else:
            layers.append([i])
            occupied.append(set(sup))
    return TrotterPlan(tuple(terms), tuple(tuple(layer) for layer in layers))


def synthesize_term(label: str, theta: float) -> list[Gate]:
    """Gates for ``exp(-i theta P)`` with a CNOT ladder over the support.

    X letters are rotated to Z by ``h``, Y letters by ``rx(pi/2)``; the
    ladder runs in ascending qubit order and the ``rz(2 theta)`` sits on the
    last support qubit.  The identity string yields no gates.
    """
    sup = support(label)
    if not sup:
        return []
    pre: list[Gate] = []
    for q in sup:
        if label[q] == "X":
            pre.append(Gate("h", (q,)))
        elif label[q] == "Y":
            pre.append(Gate("rx", (q,), math.pi / 2))
    ladder = [Gate("cx", (a, b)) for a, b in zip(sup, sup[1:])]
    core = [Gate("rz", (sup[-1],), 2.0 * theta)]
    post = [g.inverse() for g in reversed(pre + ladder)]
    return pre + ladder + core + post


# -- grouped synthesis ---------------------------------------------------------

def _bits(v: int) -> list[int]:
    return [q for q in range(v.bit_length()) if (v >> q) & 1]


def _gray_rank(v: int) -> int:
    r = 0
    while v:
        r ^= v
        v >>= 1
    return r


def _conj_cx(c: int, t: int, x: int, z: int, e: int) -> tuple[int, int, int]:
    # CX: X_c -> X_c X_t, Z_t -> Z_c Z_t; X and Z parts stay separated
    return x ^ (((x >> c) & 1) << t), z ^ (((z >> t) & 1) << c), e


def _conj_h(q: int, x: int, z: int, e: int) -> tuple[int, int, int]:
    xq, zq = (x >> q) & 1, (z >> q) & 1
    if xq and zq:
        e += 2  # X Z -> Z X = -X Z
    x = (x & ~(1 << q)) | (zq << q)
    z = (z & ~(1 << q)) | (xq << q)
    return x, z, e


def _conj_rx(q: int, x: int, z: int, e: int) -> tuple[int, int, int]:
    # Rx(pi/2): X -> X, Z -> -Y = -i X Z
    if (z >> q) & 1:
        e += 3
        x ^= 1 << q
    return x, z, e


class _Block(NamedTuple):
    xmask: int
    pivot: int | None
    fanout: tuple[tuple[int, int], ...]
    basis: str | None  # "h", "rx" or None
    target: int | None
    diag: tuple[tuple[int, float, str, float], ...]  # (z mask, sign, label, coeff)


def _plan_blocks(terms: Sequence[tuple[str, float]], n_qubits: int) -> list[_Block]:
    groups: dict[int, list[tuple[int, int, str, float]]] = defaultdict(list)
    for lab, c in terms:
        x, z = label_to_masks(lab)
        groups[x].append((x, z, lab, c))
    blocks: list[_Block] = []
    for xm in sorted(groups, key=lambda k: (-len(groups[k]), k)):
        pivot = (xm & -xm).bit_length() - 1 if xm else None
        fanout = tuple((pivot, s) for s in _bits(xm) if s != pivot) if xm else ()
        subs: dict[str | None, list] = defaultdict(list)
        for x, z, lab, c in groups[xm]:
            e = (x & z).bit_count()
            for a, b in fanout:
                x, z, e = _conj_cx(a, b, x, z, e)
            kind = None
            if xm:
                if (z >> pivot) & 1:
                    kind = "rx"
                    x, z, e = _conj_rx(pivot, x, z, e)
                else:
                    kind = "h"
                    x, z, e = _conj_h(pivot, x, z, e)
            if x or e % 2:
                raise AssertionError(f"conjugation of {lab} did not diagonalize it")
            subs[kind].append((z, 1.0 if e % 4 == 0 else -1.0, lab, c))
        for kind in sorted(subs, key=str):
            if kind is None:
                by_target: dict[int, list] = defaultdict(list)
                for item in subs[kind]:
                    by_target[item[0].bit_length() - 1].append(item)
                for t in sorted(by_target):
                    blocks.append(_Block(xm, None, (), None, t, tuple(by_target[t])))
            else:
                blocks.append(_Block(xm, pivot, fanout, kind, pivot, tuple(subs[kind])))
    return blocks


_EXACT_CHAIN_LIMIT = 10


def _chain_cost(rests: Sequence[int], order: Sequence[int]) -> int:
    held = cost = 0
    for i in order:
        cost += (held ^ rests[i]).bit_count()
        held = rests[i]
    return cost + held.bit_count()


def _exact_chain(rests: Sequence[int]) -> list[int]:
    """Cheapest visiting order from and back to the empty parity (Held-Karp)."""
    n = len(rests)
    best: dict[tuple[int, int], tuple[int, int]] = {}
    for i in range(n):
        best[(1 << i, i)] = (rests[i].bit_count(), -1)
    for mask in range(1, 1 << n):
        for i in range(n):
            entry = best.get((mask, i))
            if entry is None:
                continue
            cost = entry[0]
            for k in range(n):
                if (mask >> k) & 1:
                    continue
                key = (mask | (1 << k), k)
                new = cost + (rests[i] ^ rests[k]).bit_count()
                if key not in best or new < best[key][0]:
                    best[key] = (new, i)
    full = (1 << n) - 1
    last = min(range(n), key=lambda i: (best[(full, i)][0] + rests[i].bit_count(), i))
    order = []
    mask = full
    while last >= 0:
        order.append(last)
        prev = best[(mask, last)][1]
        mask ^= 1 << last
        last = prev
    return order[::-1]


def _greedy_chain(rests: Sequence[int]) -> list[int]:
    left = set(range(len(rests)))
    held = 0
    order = []
    while left:
        i = min(left, key=lambda k: ((held ^ rests[k]).bit_count(), _gray_rank(rests[k]), k))
        order.append(i)
        left.remove(i)
        held = rests[i]
    return order


def _chain_order(rests: Sequence[int]) -> list[int]:
    if len(rests) <= _EXACT_CHAIN_LIMIT:
        return _exact_chain(rests)
    gray = sorted(range(len(rests)), key=lambda k: (_gray_rank(rests[k]), k))
    greedy = _greedy_chain(rests)
    return min((gray, greedy), key=lambda o: _chain_cost(rests, o))


def _parity_chain(block: _Block, dt: float) -> tuple[list[Gate], list[tuple[str, float]]]:
    """Rz rotations on the target, with CNOTs folding each string's parity onto it."""
    t = block.target
    for zmask, *_ in block.diag:
        if not (zmask >> t) & 1:
            raise AssertionError("diagonal string misses its target qubit")
    rests = [zmask ^ (1 << t) for zmask, *_ in block.diag]
    gates: list[Gate] = []
    order: list[tuple[str, float]] = []
    held = 0
    for i in _chain_order(rests):
        _, sign, lab, c = block.diag[i]
        gates += [Gate("cx", (s, t)) for s in _bits(held ^ rests[i])]
        held = rests[i]
        gates.append(Gate("rz", (t,), 2.0 * sign * c * dt))
        order.append((lab, c))
    gates += [Gate("cx", (s, t)) for s in _bits(held)]
    return gates, order


def synthesize_grouped(terms: Sequence[tuple[str, float]], n_qubits: int,
                       dt: float) -> tuple[list[Gate], list[tuple[str, float]]]:
    """One Trotter step for ``terms`` and the realized term order."""
    gates: list[Gate] = []
    order: list[tuple[str, float]] = []
    for blk in _plan_blocks(terms, n_qubits):
        pre = [Gate("cx", pair) for pair in blk.fanout]
        if blk.basis == "h":
            pre.append(Gate("h", (blk.pivot,)))
        elif blk.basis == "rx":
            pre.append(Gate("rx", (blk.pivot,), math.pi / 2))
        chain, realized = _parity_chain(blk, dt)
        gates += pre + chain + [g.inverse() for g in reversed(pre)]
        order += realized
    return gates, order


def cancel_adjacent(gates: Iterable[Gate]) -> list[Gate]:
    """Remove pairs ``g, g^-1`` that are adjacent on every qubit they touch."""
    out: list[Gate | None] = []
    last: dict[int, list[int]] = defaultdict(list)  # qubit -> stack of gate indices
    for g in gates:
        tops = [last[q][-1] if last[q] else None for q in g.qubits]
        i = tops[0]
        if i is not None and all(j == i for j in tops):
            prev = out[i]
            if prev is not None and prev.qubits == g.qubits and prev.inverse() == g \
                    and prev.kind in ("h", "cx", "rx"):
                out[i] = None
                for q in g.qubits:
                    last[q].pop()
                continue
        out.append(g)
        for q in g.qubits:
            last[q].append(len(out) - 1)
    return [g for g in out if g is not None]


# -- circuits ------------------------------------------------------------------

def _select(ops: ModelOperators | PauliSum, mode: str) -> PauliSum:
    if isinstance(ops, PauliSum):
        return ops
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return ops.h_int if mode == "interaction" else ops.h_full


def trotter_step(h: PauliSum, dt: float,
                 strategy: str = "grouped") -> tuple[list[Gate], list[tuple[str, float]]]:
    """Gates of one first-order step and the order in which terms are applied."""
    if strategy == "ladder":
        order = order_terms(h).ordered()
        gates = [g for lab, c in order for g in synthesize_term(lab, c * dt)]
    elif strategy == "grouped":
        gates, order = synthesize_grouped(_hermitian_terms(h), h.n_qubits, dt)
    else:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    return cancel_adjacent(gates), order


def build_trotter_circuit(
    ops: ModelOperators | PauliSum,
    t: float,
    r: int,
    mode: str = "interaction",
    strategy: str = "grouped",
) -> Circuit:
    """``r`` repetitions of one first-order step of size ``t / r``.

    ``mode="interaction"`` compiles ``exp(-i H_int t)`` only, which is all the
    vacuum echo needs; ``mode="full"`` compiles the whole Hamiltonian.  A bare
    PauliSum is compiled as given.  ``r = 0`` gives the empty circuit.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    h = _select(ops, mode)
    meta = {"t": float(t), "r": int(r), "dt": float(t / r) if r else 0.0, "fold": 1,
            "mode": mode if not isinstance(ops, PauliSum) else "custom",
            "strategy": strategy,
            "ordering": ("x-support groups by size, cheapest parity chains" if strategy == "grouped"
                         else order_terms(h).ordering)}
    if r == 0:
        return Circuit(h.n_qubits, (), meta)
    step, _ = trotter_step(h, t / r, strategy)
    return Circuit(h.n_qubits, tuple(step) * r, meta)


def circuit_metrics(c: Circuit) -> CircuitMetrics:
    """Depth, entangler depth and entangler count of the scheduled gate list.

    Gates are scheduled as soon as all their qubits are free; the depth is
    the longest chain of qubit-sharing gates, and the entangler depth the
    longest such chain counting entanglers only.
    """
    level: dict[int, int] = {}
    level2: dict[int, int] = {}
    depth = depth2 = count2 = 0
    for g in c.gates:
        d = max(level.get(q, 0) for q in g.qubits) + 1
        d2 = max(level2.get(q, 0) for q in g.qubits) + (1 if g.is_entangler else 0)
        for q in g.qubits:
            level[q] = d
            level2[q] = d2
        depth = max(depth, d)
        depth2 = max(depth2, d2)
        count2 += g.is_entangler
    return CircuitMetrics(depth, depth2, count2)


def fold_circuit(c: Circuit, k: int) -> Circuit:
    """Replace each entangler ``U`` by ``U (U^dag U)^k``."""
    if k < 0:
        raise ValueError("fold k must be non-negative")
    gates: list[Gate] = []
    for g in c.gates:
        gates.append(g)
        if g.is_entangler:
            gates += [g.inverse(), g] * k
    meta = dict(c.metadata)
    meta["fold"] = (2 * k + 1) * int(c.metadata.get("fold", 1))
    return replace(c, gates=tuple(gates), metadata=meta)


def step_metrics(ops: ModelOperators, mode: str = "interaction", strategy: str = "grouped",
                 dt: float = 0.1) -> CircuitMetrics:
    """Metrics of a single Trotter step."""
    return circuit_metrics(build_trotter_circuit(ops, dt, 1, mode, strategy))

