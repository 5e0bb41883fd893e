"""Kraus-map channels, the gate and noise libraries, and Choi matrices."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mcpc import linalg
from mcpc.errors import DimensionError, InvariantViolation
from mcpc.pauli import SIGMA

GATES = ("cnot", "cphase", "toffoli", "cphase_chain")


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """A trace-preserving map on ``n`` qubits given by its Kraus operators."""

    n: int
    kraus: np.ndarray  # shape (m, d, d)

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        d = 1 << self.n
        if k.ndim != 3 or k.shape[1:] != (d, d) or k.shape[0] == 0:
            raise DimensionError(f"Kraus stack of shape {k.shape} does not act on {self.n} qubits")
        completeness = np.einsum("kji,kjl->il", k.conj(), k)
        if not np.allclose(completeness, np.eye(d), rtol=0, atol=linalg.STRUCTURAL_ATOL):
            raise InvariantViolation("Kraus operators are not trace preserving")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def apply(self, rho: np.ndarray) -> np.ndarray:
        k = self.kraus
        return np.einsum("kij,jl,kml->im", k, rho, k.conj(), optimize=True)

    def apply_pure(self, psi: np.ndarray) -> np.ndarray:
        """Output density matrix for the pure input ``psi``."""
        out = self.kraus @ psi  # (m, d)
        return out.T @ out.conj()


def unitary_channel(u) -> QuantumChannel:
    u = linalg.as_matrix(u)
    if not linalg.is_unitary(u):
        raise InvariantViolation("matrix is not unitary")
    return QuantumChannel(linalg.num_qubits(u.shape[0]), u[None])


def identity_channel(n: int) -> QuantumChannel:
    return QuantumChannel(n, np.eye(1 << n, dtype=complex)[None])


def _controlled_phase(n: int, a: int, b: int) -> np.ndarray:
    """Diagonal CPHASE between 0-based qubits ``a`` and ``b`` of an n-qubit register."""
    i = np.arange(1 << n)
    both = ((i >> (n - 1 - a)) & 1) & ((i >> (n - 1 - b)) & 1)
    return np.diag(1.0 - 2.0 * both).astype(complex)


def gate_unitary(name: str) -> np.ndarray:
    if name == "cnot":
        return np.eye(4, dtype=complex)[[0, 1, 3, 2]]
    if name == "cphase":
        return _controlled_phase(2, 0, 1)
    if name == "toffoli":
        return np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]]
    if name == "cphase_chain":
        # CPHASE(1,2) acts first, then CPHASE(2,3)
        return _controlled_phase(3, 1, 2) @ _controlled_phase(3, 0, 1)
    raise KeyError(f"unknown gate {name!r}; expected one of {', '.join(GATES)}")


def gate_library(name: str) -> QuantumChannel:
    return unitary_channel(gate_unitary(name))


def gate_qubits(name: str) -> int:
    return linalg.num_qubits(gate_unitary(name).shape[0])


# --- noise ----------------------------------------------------------------


def depolarizing(p: float, n: int) -> QuantumChannel:
    """``rho -> (1 - p) rho + p I / 2**n`` through the uniform Pauli Kraus set."""
    if not 0 <= p <= 1:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    m = 4**n
    ops = [np.sqrt(1 - p + p / m) * np.eye(1 << n, dtype=complex)]
    if p > 0:
        for letters in itertools.islice(itertools.product("IXYZ", repeat=n), 1, None):
            ops.append(np.sqrt(p / m) * linalg.kron_all(SIGMA[c] for c in letters))
    return QuantumChannel(n, np.array(ops))


def amplitude_damping(gamma: float, n: int = 1) -> QuantumChannel:
    """Independent amplitude damping of strength ``gamma`` on every qubit."""
    if not 0 <= gamma <= 1:
        raise ValueError(f"damping {gamma} outside [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    ops = [linalg.kron_all(c) for c in itertools.product((k0, k1), repeat=n)]
    return QuantumChannel(n, _prune(np.array(ops)))


def rotation(axis: str, theta: float) -> np.ndarray:
    """Single-qubit ``exp(-i theta sigma_axis / 2)``."""
    s = SIGMA[axis.upper()]
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * s


def overrotation(axis: str, theta: float, n: int, qubits: Sequence[int] | None = None) -> QuantumChannel:
    """Coherent over-rotation on the listed 1-based qubits (all qubits if omitted)."""
    if axis.lower() not in ("x", "y", "z"):
        raise ValueError(f"rotation axis must be x, y or z, got {axis!r}")
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    targets = set(range(1, n + 1) if qubits is None else qubits)
    if not targets <= set(range(1, n + 1)):
        raise ValueError(f"qubits {sorted(targets)} outside 1..{n}")
    r = rotation(axis, theta)
    u = linalg.kron_all(r if q in targets else np.eye(2) for q in range(1, n + 1))
    return QuantumChannel(n, u[None])


def _prune(kraus: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(kraus, axis=(1, 2))
    keep = norms > 1e-14
    return kraus[keep] if keep.any() else kraus[:1]


def compose(first: QuantumChannel, second: QuantumChannel) -> QuantumChannel:
    """Channel applying ``first`` and then ``second``."""
    if first.n != second.n:
        raise DimensionError(f"cannot compose {first.n}- and {second.n}-qubit channels")
    prods = np.einsum("jab,ibc->jiac", second.kraus, first.kraus)
    d = first.dim
    return QuantumChannel(first.n, _prune(prods.reshape(-1, d, d)))


# --- noise descriptors ----------------------------------------------------


@dataclass(frozen=True)
class NoiseTerm:
    kind: str  # "depolarizing" | "amp_damp" | "overrot"
    value: float
    axis: str | None = None
    qubit: int | None = None

    def render(self) -> str:
        if self.kind == "overrot":
            s = f"overrot:{self.axis}:{self.value!r}"
            return s if self.qubit is None else f"{s}:{self.qubit}"
        return f"{self.kind}:{self.value!r}"

    def channel(self, n: int) -> QuantumChannel:
        if self.kind == "depolarizing":
            return depolarizing(self.value, n)
        if self.kind == "amp_damp":
            return amplitude_damping(self.value, n)
        qubits = None if self.qubit is None else [self.qubit]
        return overrotation(self.axis, self.value, n, qubits)


@dataclass(frozen=True)
class NoiseModel:
    terms: tuple[NoiseTerm, ...] = field(default_factory=tuple)

    def render(self) -> str:
        return "+".join(t.render() for t in self.terms) or "none"

    def channel(self, n: int) -> QuantumChannel:
        ch = identity_channel(n)
        for t in self.terms:
            ch = compose(ch, t.channel(n))
        return ch


def parse_noise(descriptor: str) -> NoiseModel:
    """Parse e.g. ``"depolarizing:0.1+overrot:y:0.05:2"``; terms apply left to right."""
    text = descriptor.strip()
    if text.lower() in ("", "none"):
        return NoiseModel()
    terms = []
    for part in text.split("+"):
        fields = part.strip().split(":")
        kind = fields[0]
        try:
            if kind in ("depolarizing", "amp_damp") and len(fields) == 2:
                value = float(fields[1])
                if not 0 <= value <= 1:
                    raise ValueError(f"{kind} parameter {value} outside [0, 1]")
                terms.append(NoiseTerm(kind, value))
            elif kind == "overrot" and len(fields) in (3, 4):
                axis = fields[1].lower()
                if axis not in ("x", "y", "z"):
                    raise ValueError(f"bad axis {fields[1]!r}")
                theta = float(fields[2])
                if not math.isfinite(theta):
                    raise ValueError("angle must be finite")
                qubit = int(fields[3]) if len(fields) == 4 else None
                if qubit is not None and qubit < 1:
                    raise ValueError("qubit indices start at 1")
                terms.append(NoiseTerm(kind, theta, axis, qubit))
            else:
                raise ValueError("unrecognized term")
        except ValueError as exc:
            raise ValueError(f"malformed noise term {part!r}: {exc}") from None
    return NoiseModel(tuple(terms))


def noisy_gate(gate: str, noise: str | NoiseModel = "none", before: bool = False) -> QuantumChannel:
    """The named gate with noise attached after it (or before, if requested)."""
    model = parse_noise(noise) if isinstance(noise, str) else noise
    u = gate_library(gate)
    if not model.terms:
        return u
    for t in model.terms:
        if t.qubit is not None and t.qubit > u.n:
            raise ValueError(f"noise term {t.render()} addresses qubit beyond {u.n}")
    nz = model.channel(u.n)
    return compose(nz, u) if before else compose(u, nz)


# --- Choi matrices --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Unit-trace Choi state on ``[copy register][output register]``."""

    n: int
    matrix: np.ndarray

    @property
    def d(self) -> int:
        return 1 << self.n

    def check(self, atol: float = linalg.STRUCTURAL_ATOL) -> None:
        m = self.matrix
        if not linalg.is_hermitian(m, atol):
            raise InvariantViolation("Choi matrix is not Hermitian")
        if abs(np.trace(m) - 1) > atol:
            raise InvariantViolation("Choi matrix trace differs from 1")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise InvariantViolation("Choi matrix has negative eigenvalues")
        reduced = linalg.partial_trace(m, [0], [self.d, self.d])
        if not np.allclose(reduced, np.eye(self.d) / self.d, rtol=0, atol=atol):
            raise InvariantViolation("Choi matrix is not trace preserving")


def choi(ch: QuantumChannel) -> ChoiMatrix:
    """``(1 x E)(|phi><phi|)`` with ``|phi> = sum_i |i>|i> / sqrt(d)``."""
    d = ch.dim
    # (1 x K)|phi> reshaped to a d x d array is K^T / sqrt(d)
    vecs = np.transpose(ch.kraus, (0, 2, 1)).reshape(len(ch.kraus), d * d) / math.sqrt(d)
    return ChoiMatrix(ch.n, vecs.T @ vecs.conj())


def choi_overlap(a: ChoiMatrix, b: ChoiMatrix) -> float:
    """Process fidelity ``tr[a b]``, exact when ``a`` is the Choi state of a unitary."""
    if a.matrix.shape != b.matrix.shape:
        raise DimensionError(f"Choi dimensions differ: {a.matrix.shape} vs {b.matrix.shape}")
    value = float(np.real(np.einsum("ij,ji->", a.matrix, b.matrix)))
    if not -linalg.STRUCTURAL_ATOL <= value <= 1 + linalg.STRUCTURAL_ATOL:
        raise InvariantViolation(f"overlap {value} outside [0, 1]")
    return value
