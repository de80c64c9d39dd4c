"""Sparse algebra over n-qubit Pauli strings.

A Pauli string is stored as a pair of integer bit masks ``(x, z)``: bit ``q``
of ``x`` (``z``) is set when qubit ``q`` carries an X (Z) factor, and a Y is
both bits together.  The operator represented by ``(x, z)`` is::

    P = i**popcount(x & z) * X**x * Z**z

Letter strings index qubits left to right, so ``"IZ"`` is Z on qubit 1.
Computational-basis index ``j`` has qubit ``q`` equal to bit ``q`` of ``j``
(little endian), and ``Z|0> = +|0>``.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

import numpy as np

LETTERS = "IXYZ"
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = "IXZY"  # indexed by x_bit | z_bit << 1

_PHASES = (1, 1j, -1, -1j)

DEFAULT_PRUNE = 1e-12
DENSE_QUBIT_CAP = 14


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class ResourceError(RuntimeError):
    """A dense materialization would exceed the configured qubit cap."""


def label_to_masks(label: str) -> tuple[int, int]:
    x = z = 0
    for q, ch in enumerate(label):
        try:
            bx, bz = _LETTER_BITS[ch]
        except KeyError:
            raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
        x |= bx << q
        z |= bz << q
    return x, z


def masks_to_label(x: int, z: int, n_qubits: int) -> str:
    return "".join(_BITS_LETTER[((x >> q) & 1) | (((z >> q) & 1) << 1)]
                   for q in range(n_qubits))


def weight(label: str) -> int:
    """Number of non-identity letters."""
    return sum(ch != "I" for ch in label)


def support(label: str) -> tuple[int, ...]:
    return tuple(q for q, ch in enumerate(label) if ch != "I")


def commutes(p: str, q: str) -> bool:
    """True iff the two Pauli strings commute.

    They anticommute on every site where both letters are non-identity and
    differ; the strings commute when the count of such sites is even.
    """
    if len(p) != len(q):
        raise DimensionError(f"length mismatch: {len(p)} vs {len(q)}")
    clashes = sum(a != "I" and b != "I" and a != b for a, b in zip(p, q))
    return clashes % 2 == 0


def _mul_masks(x1: int, z1: int, x2: int, z2: int) -> tuple[complex, int, int]:
    """Product of two Pauli strings as (phase, x, z)."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    # i^{y1} X^{x1} Z^{z1} i^{y2} X^{x2} Z^{z2} = i^{y1+y2} (-1)^{|z1&x2|} X^{x3} Z^{z3}
    k = (x1 & z1).bit_count() + (x2 & z2).bit_count() - (x3 & z3).bit_count()
    k += 2 * (z1 & x2).bit_count()
    return _PHASES[k % 4], x3, z3


class PauliSum:
    """Weighted sum of Pauli strings on a fixed number of qubits.

    Instances are treated as immutable; every arithmetic operation returns a
    new sum pruned at ``prune_tolerance``.
    """

    __slots__ = ("n_qubits", "prune_tolerance", "_terms")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[str, complex] | Iterable[tuple[str, complex]] = (),
        prune_tolerance: float = DEFAULT_PRUNE,
    ) -> None:
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if prune_tolerance < 0:
            raise ValueError("prune_tolerance must be non-negative")
        self.n_qubits = int(n_qubits)
        self.prune_tolerance = float(prune_tolerance)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, int], complex] = {}
        for label, coeff in items:
            if len(label) != self.n_qubits:
                raise DimensionError(
                    f"label {label!r} has length {len(label)}, expected {self.n_qubits}")
            key = label_to_masks(label)
            acc[key] = acc.get(key, 0.0) + complex(coeff)
        self._terms = self._pruned(acc)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _from_masks(cls, n_qubits: int, terms: dict[tuple[int, int], complex],
                    prune_tolerance: float) -> "PauliSum":
        obj = cls.__new__(cls)
        obj.n_qubits = n_qubits
        obj.prune_tolerance = prune_tolerance
        obj._terms = obj._pruned(terms)
        return obj

    def _pruned(self, terms: dict[tuple[int, int], complex]) -> dict[tuple[int, int], complex]:
        tol = self.prune_tolerance
        return {k: v for k, v in terms.items() if abs(v) >= tol and v != 0}

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {"I" * n_qubits: coeff})

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @classmethod
    def single(cls, label: str, coeff: complex = 1.0) -> "PauliSum":
        return cls(len(label), {label: coeff})

    # -- inspection ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[str, complex]]:
        return iter(self.items())

    def items(self) -> list[tuple[str, complex]]:
        """Terms as ``(label, coeff)`` sorted lexicographically by label."""
        out = [(masks_to_label(x, z, self.n_qubits), c) for (x, z), c in self._terms.items()]
        out.sort(key=lambda t: t[0])
        return out

    def masks(self) -> list[tuple[int, int, complex]]:
        return [(x, z, c) for (x, z), c in self._terms.items()]

    def coefficient(self, label: str) -> complex:
        return self._terms.get(label_to_masks(label), 0.0)

    def labels(self) -> list[str]:
        return [lab for lab, _ in self.items()]

    def max_weight(self) -> int:
        return max(((x | z).bit_count() for x, z in self._terms), default=0)

    def weight_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for x, z in self._terms:
            w = (x | z).bit_count()
            hist[w] = hist.get(w, 0) + 1
        return dict(sorted(hist.items()))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) < tol for c in self._terms.values())

    def real(self) -> "PauliSum":
        """Drop imaginary parts (use only on sums already known Hermitian)."""
        return PauliSum._from_masks(
            self.n_qubits, {k: complex(v.real) for k, v in self._terms.items()},
            self.prune_tolerance)

    # -- arithmetic ------------------------------------------------------------

    def _check(self, other: "PauliSum") -> None:
        if not isinstance(other, PauliSum):
            raise TypeError(f"expected PauliSum, got {type(other).__name__}")
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"qubit mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return add(self, other)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return add(self, other.scale(-1.0))

    def __neg__(self) -> "PauliSum":
        return self.scale(-1.0)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return multiply(self, other)

    def scale(self, factor: complex) -> "PauliSum":
        f = complex(factor)
        return PauliSum._from_masks(
            self.n_qubits, {k: v * f for k, v in self._terms.items()}, self.prune_tolerance)

    def dagger(self) -> "PauliSum":
        return PauliSum._from_masks(
            self.n_qubits, {k: v.conjugate() for k, v in self._terms.items()},
            self.prune_tolerance)

    def tensor(self, other: "PauliSum") -> "PauliSum":
        """``self`` on the low qubits, ``other`` on the following ones."""
        shift = self.n_qubits
        out: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            for (x2, z2), c2 in other._terms.items():
                key = (x1 | (x2 << shift), z1 | (z2 << shift))
                out[key] = out.get(key, 0.0) + c1 * c2
        return PauliSum._from_masks(self.n_qubits + other.n_qubits, out,
                                    min(self.prune_tolerance, other.prune_tolerance))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= atol for k in keys)

    def __repr__(self) -> str:
        head = ", ".join(f"{c:.4g}*{lab}" for lab, c in self.items()[:4])
        more = "" if len(self) <= 4 else f", ... ({len(self)} terms)"
        return f"PauliSum(n_qubits={self.n_qubits}, [{head}{more}])"

    # -- dense / statevector ---------------------------------------------------

    def to_dense(self, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
        return to_dense(self, cap)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Matrix-free action ``A @ psi``."""
        psi = np.asarray(psi)
        dim = 1 << self.n_qubits
        if psi.shape[0] != dim:
            raise DimensionError(f"state has dimension {psi.shape[0]}, expected {dim}")
        idx = np.arange(dim)
        out = np.zeros(psi.shape, dtype=complex)
        for (x, z), c in self._terms.items():
            # P|j> = i^{|x&z|} (-1)^{|j&z|} |j^x>
            sign = _parity(idx & z)
            amp = c * _PHASES[(x & z).bit_count() % 4] * np.where(sign, -1.0, 1.0)
            if psi.ndim == 1:
                out[idx ^ x] += amp * psi
            else:
                out[idx ^ x] += amp[:, None] * psi
        return out


def _parity(arr: np.ndarray) -> np.ndarray:
    """Bitwise parity of each non-negative integer in ``arr``."""
    arr = arr.astype(np.uint64, copy=True)
    for shift in (32, 16, 8, 4, 2, 1):
        arr ^= arr >> np.uint64(shift)
    return (arr & np.uint64(1)).astype(bool)


def add(a: PauliSum, b: PauliSum) -> PauliSum:
    a._check(b)
    out = dict(a._terms)
    for k, v in b._terms.items():
        out[k] = out.get(k, 0.0) + v
    return PauliSum._from_masks(a.n_qubits, out, min(a.prune_tolerance, b.prune_tolerance))


def multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product ``a @ b`` with Pauli phase rules."""
    a._check(b)
    out: dict[tuple[int, int], complex] = {}
    for (x1, z1), c1 in a._terms.items():
        for (x2, z2), c2 in b._terms.items():
            phase, x3, z3 = _mul_masks(x1, z1, x2, z2)
            key = (x3, z3)
            out[key] = out.get(key, 0.0) + phase * c1 * c2
    return PauliSum._from_masks(a.n_qubits, out, min(a.prune_tolerance, b.prune_tolerance))


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    return multiply(a, b) - multiply(b, a)


def to_dense(a: PauliSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    """Materialize ``a`` as a ``2**n x 2**n`` complex matrix."""
    if a.n_qubits > cap:
        raise ResourceError(f"{a.n_qubits} qubits exceeds the dense cap of {cap}")
    dim = 1 << a.n_qubits
    idx = np.arange(dim)
    mat = np.zeros((dim, dim), dtype=complex)
    for (x, z), c in a._terms.items():
        sign = np.where(_parity(idx & z), -1.0, 1.0)
        mat[idx ^ x, idx] += c * _PHASES[(x & z).bit_count() % 4] * sign
    return mat


def restricted_matrix(a: PauliSum, indices: np.ndarray) -> np.ndarray:
    """Matrix of ``a`` on the span of the given basis states.

    ``indices`` must be closed under every X mask of ``a`` (an invariant
    subspace), otherwise a ``ValueError`` is raised.
    """
    idx = np.unique(np.asarray(indices, dtype=np.int64))
    mat = np.zeros((len(idx), len(idx)), dtype=complex)
    for (x, z), c in a._terms.items():
        dest = idx ^ x
        pos = np.searchsorted(idx, dest)
        if np.any(pos >= len(idx)) or np.any(idx[np.minimum(pos, len(idx) - 1)] != dest):
            raise ValueError("index set is not invariant under the operator")
        sign = np.where(_parity(idx & z), -1.0, 1.0)
        mat[pos, np.arange(len(idx))] += c * _PHASES[(x & z).bit_count() % 4] * sign
    return mat


def reachable_indices(a: PauliSum, seeds: Iterable[int]) -> np.ndarray:
    """Smallest index set containing ``seeds`` and closed under the X masks of ``a``."""
    basis: list[int] = []  # GF(2) row-echelon basis of the X masks
    for x, _ in a._terms:
        v = x
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    span = np.zeros(1, dtype=np.int64)
    for b in basis:
        span = np.concatenate([span, span ^ b])
    seeds = np.unique(np.asarray(list(seeds), dtype=np.int64))
    return np.unique((seeds[:, None] ^ span[None, :]).ravel())


def expectation(a: PauliSum, psi: np.ndarray) -> complex:
    """``<psi|A|psi>`` evaluated term by term."""
    psi = np.asarray(psi, dtype=complex)
    dim = 1 << a.n_qubits
    if psi.shape != (dim,):
        raise DimensionError(f"state has shape {psi.shape}, expected ({dim},)")
    idx = np.arange(dim)
    total = 0.0 + 0.0j
    for (x, z), c in a._terms.items():
        sign = np.where(_parity(idx & z), -1.0, 1.0)
        total += c * _PHASES[(x & z).bit_count() % 4] * np.vdot(psi[idx ^ x], sign * psi)
    return complex(total)


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a single Pauli string (oracle helper, little endian)."""
    single = {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }
    out = np.array([[1.0 + 0j]])
    for ch in label:  # qubit 0 is least significant, so it goes rightmost
        out = np.kron(single[ch], out)
    return out


# -- text serialization -------------------------------------------------------

def dumps(a: PauliSum) -> str:
    """One term per line: ``coeff_re coeff_im LETTERS``, sorted by label."""
    lines = [f"{c.real:.17g} {c.imag:.17g} {lab}" for lab, c in a.items()]
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str, n_qubits: int | None = None) -> PauliSum:
    terms = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        re_s, im_s, label = line.split()
        terms.append((label, complex(float(re_s), float(im_s))))
    if n_qubits is None:
        if not terms:
            raise ValueError("cannot infer qubit count from an empty listing")
        n_qubits = len(terms[0][0])
    return PauliSum(n_qubits, terms)
