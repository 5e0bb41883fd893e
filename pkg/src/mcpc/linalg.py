"""Dense complex linear algebra on small multi-qubit Hilbert spaces.

Matrices and state vectors are plain ``numpy`` arrays. Qubit 1 is the leftmost
tensor factor and the most significant bit of a computational-basis index.
"""

from __future__ import annotations

import functools
from typing import Iterable, Sequence

import numpy as np

from mcpc.errors import DimensionError, InvariantViolation

STRUCTURAL_ATOL = 1e-9
ARITHMETIC_ATOL = 1e-12
MAX_QUBITS = 12  # doubled space of a 6-qubit process


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def kron(a, b) -> np.ndarray:
    """Tensor product with ``a`` as the most significant index block."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(factors: Iterable) -> np.ndarray:
    """Tensor product of matrices or of vectors, leftmost factor most significant."""
    factors = [np.asarray(f, dtype=complex) for f in factors]
    if not factors:
        return np.eye(1, dtype=complex)
    return functools.reduce(np.kron, factors)


def mat_mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def dagger(m) -> np.ndarray:
    return as_matrix(m).conj().T


def trace(m) -> complex:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"trace of non-square matrix {m.shape}")
    return complex(np.trace(m))


def partial_trace(m, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem whose position is not in ``keep``.

    Args:
        m: square matrix on the space ``dims[0] x dims[1] x ...``.
        keep: positions (0-based) of the subsystems to retain, any order;
            the result keeps them in ascending order.
        dims: local dimension of each subsystem.
    """
    m = as_matrix(m)
    dims = [int(x) for x in dims]
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionError(f"dims {dims} do not match matrix shape {m.shape}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep {keep} out of range for {len(dims)} subsystems")
    k = len(dims)
    t = m.reshape(dims + dims)
    # trace from the highest position down so remaining axis numbers stay valid
    for pos in reversed(range(k)):
        if pos in keep:
            continue
        t = np.trace(t, axis1=pos, axis2=pos + t.ndim // 2)
    kept = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(kept, kept)


def is_hermitian(m, atol: float = STRUCTURAL_ATOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=atol)


def is_unitary(m, atol: float = STRUCTURAL_ATOL) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return np.allclose(m @ m.conj().T, np.eye(m.shape[0]), rtol=0, atol=atol)


def is_psd(m, atol: float = STRUCTURAL_ATOL) -> bool:
    if not is_hermitian(m, atol):
        return False
    return bool(np.linalg.eigvalsh(as_matrix(m)).min() >= -atol)


def is_density_matrix(m, atol: float = STRUCTURAL_ATOL) -> bool:
    return is_psd(m, atol) and abs(trace(m) - 1) <= atol


def hermitian_expectation(rho, obs, atol: float = STRUCTURAL_ATOL) -> float:
    """Return ``Re tr[rho obs]`` after checking both operands are Hermitian."""
    rho, obs = as_matrix(rho), as_matrix(obs)
    if rho.shape != obs.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {obs.shape}")
    if not is_hermitian(rho, atol) or abs(np.trace(rho) - 1) > atol:
        raise InvariantViolation("rho is not a Hermitian unit-trace matrix")
    if not is_hermitian(obs, atol):
        raise InvariantViolation("observable is not Hermitian")
    value = np.einsum("ij,ji->", rho, obs)
    if abs(value.imag) > atol:
        raise InvariantViolation(f"expectation has imaginary residue {value.imag:.3g}")
    return float(value.real)


def normalized(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return v / np.linalg.norm(v)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n
