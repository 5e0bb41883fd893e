"""Signed n-qubit Pauli words stored as x/z bit masks.

A word on ``n`` qubits keeps one x bit and one z bit per qubit; qubit 1 (the
leftmost factor) lives in bit ``n - 1``. ``Y`` sets both bits, so the operator
is ``sign * i**popcount(x & z) * X**x Z**z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from mcpc.errors import DimensionError, InvariantViolation

LETTERS = "IXYZ"
# letter -> (x bit, z bit)
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_S = 1 / np.sqrt(2)
# columns: eigenvector for eigenvalue +1, then the second one
_EIGVECS = {
    "I": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    "X": (np.array([_S, _S], dtype=complex), np.array([_S, -_S], dtype=complex)),
    "Y": (np.array([_S, 1j * _S], dtype=complex), np.array([_S, -1j * _S], dtype=complex)),
    "Z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
}
_EIGVALS = {"I": (1, 1), "X": (1, -1), "Y": (1, -1), "Z": (1, -1)}

MAX_WORD_QUBITS = 12


@dataclass(frozen=True, order=True)
class PauliWord:
    n: int
    x: int
    z: int
    sign: int = 1

    def __post_init__(self):
        if not 1 <= self.n <= MAX_WORD_QUBITS:
            raise DimensionError(f"word length {self.n} outside 1..{MAX_WORD_QUBITS}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise DimensionError("bit masks exceed word length")

    @classmethod
    def from_label(cls, label: str) -> "PauliWord":
        """Parse ``"-IYZY"``, ``"+XZ"`` or ``"XX"``."""
        label = label.strip()
        sign = 1
        if label[:1] in ("+", "-"):
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        if not label or any(c not in _BITS for c in label.upper()):
            raise ValueError(f"bad Pauli label {label!r}")
        x = z = 0
        for c in label.upper():
            bx, bz = _BITS[c]
            x, z = (x << 1) | bx, (z << 1) | bz
        return cls(len(label), x, z, sign)

    @classmethod
    def identity(cls, n: int) -> "PauliWord":
        return cls(n, 0, 0)

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliWord":
        """Word at position ``index`` of the base-4 ordering (I=0, X=1, Y=2, Z=3)."""
        if not 0 <= index < 4**n:
            raise DimensionError(f"index {index} out of range for n={n}")
        letters = []
        for _ in range(n):
            letters.append(LETTERS[index % 4])
            index //= 4
        return cls.from_label("".join(reversed(letters)))

    @property
    def letters(self) -> str:
        bits = range(self.n - 1, -1, -1)
        return "".join(_letter((self.x >> b) & 1, (self.z >> b) & 1) for b in bits)

    @property
    def label(self) -> str:
        return ("-" if self.sign < 0 else "") + self.letters

    def __str__(self) -> str:
        return self.label

    @property
    def index(self) -> int:
        i = 0
        for c in self.letters:
            i = 4 * i + LETTERS.index(c)
        return i

    @property
    def support(self) -> int:
        """Bit mask of the non-identity positions."""
        return self.x | self.z

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    @property
    def is_identity(self) -> bool:
        return self.support == 0

    def unsigned(self) -> "PauliWord":
        return PauliWord(self.n, self.x, self.z)

    def __neg__(self) -> "PauliWord":
        return PauliWord(self.n, self.x, self.z, -self.sign)

    def tensor(self, other: "PauliWord") -> "PauliWord":
        """``self`` on the leading qubits, ``other`` on the trailing ones."""
        return PauliWord(
            self.n + other.n,
            (self.x << other.n) | other.x,
            (self.z << other.n) | other.z,
            self.sign * other.sign,
        )

    def split(self, n_first: int) -> tuple["PauliWord", "PauliWord"]:
        """Split into the first ``n_first`` factors and the rest; the sign stays on the first."""
        rest = self.n - n_first
        if not 0 < n_first < self.n:
            raise DimensionError(f"cannot split a {self.n}-factor word at {n_first}")
        mask = (1 << rest) - 1
        head = PauliWord(n_first, self.x >> rest, self.z >> rest, self.sign)
        tail = PauliWord(rest, self.x & mask, self.z & mask)
        return head, tail

    def commutes_with(self, other: "PauliWord") -> bool:
        _check_lengths(self, other)
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0


def _letter(bx: int, bz: int) -> str:
    return "IXZY"[bx | (bz << 1)]


def _check_lengths(a: PauliWord, b: PauliWord) -> None:
    if a.n != b.n:
        raise DimensionError(f"word lengths differ: {a.n} vs {b.n}")


def enumerate_words(n: int) -> list[PauliWord]:
    """All ``4**n`` unsigned words in base-4 order, qubit 1 most significant."""
    if not 1 <= n <= 6:
        raise DimensionError(f"n must be in 1..6, got {n}")
    return [PauliWord.from_index(i, n) for i in range(4**n)]


def iter_words(n: int) -> Iterator[PauliWord]:
    """Like :func:`enumerate_words` but lazy and allowed up to 12 factors."""
    for i in range(4**n):
        yield PauliWord.from_index(i, n)


_PHASES = (1, 1j, -1, -1j)


def word_product(a: PauliWord, b: PauliWord) -> tuple[PauliWord, complex]:
    """Multiply two words factorwise.

    Returns the product word carrying ``a.sign * b.sign`` and the exact phase
    in ``{1, i, -1, -i}`` so that ``dense(a) @ dense(b) == phase * dense(word)``.
    """
    _check_lengths(a, b)
    xa, za, xb, zb = a.x, a.z, b.x, b.z
    a_x, a_y, a_z = xa & ~za, xa & za, ~xa & za
    b_x, b_y, b_z = xb & ~zb, xb & zb, ~xb & zb
    plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x)
    minus = (a_y & b_x) | (a_z & b_y) | (a_x & b_z)
    k = (plus.bit_count() - minus.bit_count()) % 4
    word = PauliWord(a.n, xa ^ xb, za ^ zb, a.sign * b.sign)
    return word, _PHASES[k]


def signed_product(a: PauliWord, b: PauliWord) -> PauliWord:
    """Product folded into a real-signed word; imaginary phases are rejected."""
    word, phase = word_product(a, b)
    if phase.imag != 0:
        raise InvariantViolation(f"{a} * {b} carries an imaginary phase {phase}")
    return PauliWord(word.n, word.x, word.z, word.sign * int(phase.real))


def dense(word: PauliWord) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for c in word.letters:
        out = np.kron(out, SIGMA[c])
    return word.sign * out


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def action(word: PauliWord) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and coefficients with ``dense(word) |j> = coef[j] |perm[j]>``."""
    j = np.arange(1 << word.n)
    ys = (word.x & word.z).bit_count()
    coef = word.sign * (1j**ys) * (1 - 2 * (_popcount(j & word.z) & 1))
    return j ^ word.x, coef.astype(complex)


def expectation(rho: np.ndarray, word: PauliWord) -> float:
    """``Re tr[rho dense(word)]`` without building the dense word."""
    perm, coef = action(word)
    j = np.arange(perm.size)
    # tr[rho P] = sum_j <j|rho P|j> = sum_j coef[j] rho[j, perm[j]]
    return float(np.real(np.sum(coef * rho[j, perm])))


def expectation_pure(psi: np.ndarray, word: PauliWord) -> float:
    perm, coef = action(word)
    return float(np.real(np.vdot(psi[perm], coef * psi)))


@dataclass(frozen=True)
class PauliEigenbasis:
    word: PauliWord
    vectors: np.ndarray  # row j is the j-th product eigenvector
    eigenvalues: np.ndarray


def eigenbasis(word: PauliWord) -> PauliEigenbasis:
    """Product eigenvectors of ``word``, indexed like computational-basis states.

    Bit k of the index (qubit 1 most significant) picks the first or second
    single-qubit eigenvector of factor k. Identity factors use ``|0>, |1>``
    with eigenvalue +1 for both.
    """
    n, letters = word.n, word.letters
    vecs = np.empty((1 << n, 1 << n), dtype=complex)
    vals = np.empty(1 << n, dtype=int)
    for j in range(1 << n):
        v = np.ones(1, dtype=complex)
        a = word.sign
        for k, c in enumerate(letters):
            b = (j >> (n - 1 - k)) & 1
            v = np.kron(v, _EIGVECS[c][b])
            a *= _EIGVALS[c][b]
        vecs[j], vals[j] = v, a
    return PauliEigenbasis(word, vecs, vals)


def conjugate_state(v: np.ndarray) -> np.ndarray:
    """Entrywise complex conjugate in the computational basis."""
    return np.conj(np.asarray(v, dtype=complex))
