"""Process tomography baseline: four preparations per qubit, Pauli readout, linear inversion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mcpc import linalg, pauli
from mcpc.certification import substream
from mcpc.channels import ChoiMatrix, QuantumChannel
from mcpc.errors import DimensionError, InvariantViolation
from mcpc.pauli import PauliWord
from mcpc.readout import Readout, ReadoutCalibration, rotated_populations

_S = 1 / math.sqrt(2)
# |0>, |0>+|1>, |0>-i|1>, |1>
MENU = (
    np.array([1, 0], dtype=complex),
    np.array([_S, _S], dtype=complex),
    np.array([_S, -1j * _S], dtype=complex),
    np.array([0, 1], dtype=complex),
)
CSV_COLUMNS = ("input_index", "observable", "value", "variance")


def input_state(label: str) -> np.ndarray:
    """Product state for a base-4 label such as ``"03"`` (qubit 1 first)."""
    return linalg.kron_all(MENU[int(c)] for c in label)


def input_labels(n: int) -> list[str]:
    return [np.base_repr(i, 4).zfill(n) for i in range(4**n)]


@dataclass(frozen=True, eq=False)
class TomographyRecord:
    input_index: str
    input_state: np.ndarray
    observable: PauliWord
    value: float
    variance: float


def collect(
    ch: QuantumChannel,
    cal: ReadoutCalibration | None = None,
    shots: int | None = None,
    seed: int = 0,
) -> list[TomographyRecord]:
    """All ``4**n`` preparations times ``4**n`` Pauli observables, read out jointly."""
    if ch.n > 3:
        raise DimensionError("tomography is limited to three qubits")
    cal = cal or ReadoutCalibration.default(ch.n)
    words = pauli.enumerate_words(ch.n)
    readers = {w.index: Readout(w, cal) for w in words if not w.is_identity}
    records = []
    for m, label in enumerate(input_labels(ch.n)):
        psi = input_state(label)
        rho = ch.apply_pure(psi)
        for w in words:
            if w.is_identity:
                value, var = 1.0, 0.0
            else:
                rng = substream(seed, 7, m, w.index) if shots else None
                probs = rotated_populations(rho, w)
                v, s2 = readers[w.index].extract(probs, shots, rng)
                value, var = float(v), float(s2)
            records.append(TomographyRecord(label, psi, w, value, var))
    return records


def _menu_to_pauli() -> np.ndarray:
    """``M[P, m]`` with single-qubit Pauli ``P = sum_m M[P, m] |m><m|`` over the menu."""
    s = np.array([[np.real(np.vdot(v, pauli.SIGMA[c] @ v)) for c in pauli.LETTERS] for v in MENU])
    # |m><m| = (1/2) sum_P s[m, P] P  =>  P = sum_m (2 s^-1)[P, m] |m><m|
    if np.linalg.matrix_rank(s) < 4:
        raise InvariantViolation("preparation menu is not tomographically complete")
    return 2 * np.linalg.inv(s)


@dataclass(frozen=True, eq=False)
class ChoiEstimate:
    matrix: np.ndarray
    physical: bool = False

    @property
    def n(self) -> int:
        return linalg.num_qubits(self.matrix.shape[0]) // 2

    def check(self) -> None:
        m = self.matrix
        if not linalg.is_hermitian(m):
            raise InvariantViolation("estimate is not Hermitian")
        if abs(np.trace(m) - 1) > 1e-6:
            raise InvariantViolation("estimate trace differs from 1")
        if self.physical and np.linalg.eigvalsh(m).min() < -linalg.STRUCTURAL_ATOL:
            raise InvariantViolation("estimate flagged physical has negative eigenvalues")


def invert(records: list[TomographyRecord]) -> ChoiEstimate:
    """Linear inversion of a complete record set straight to the Choi matrix.

    With ``v[m, B] = <B>`` for preparation ``m`` the Choi Pauli coefficients
    are ``tr[(A x B) choi] = tr[B E(A^T)] / d``, and ``E(A)`` is a known linear
    combination of the preparations.
    """
    if not records:
        raise ValueError("no records")
    n = records[0].observable.n
    d, size = 1 << n, 4**n
    v = np.full((size, size), np.nan)
    for r in records:
        v[int(r.input_index, 4), r.observable.index] = r.value
    if np.isnan(v).any():
        raise ValueError("record set is incomplete")
    m1 = _menu_to_pauli()
    mix = linalg.kron_all([m1] * n).real  # (A, m)
    words = pauli.enumerate_words(n)
    transpose_sign = np.array([(-1) ** w.letters.count("Y") for w in words])
    coeff = transpose_sign[:, None] * (mix @ v) / d  # (A, B)
    basis = np.array([pauli.dense(w) for w in words])
    out = np.zeros((d * d, d * d), dtype=complex)
    for a, wa in enumerate(words):
        block = np.tensordot(coeff[a], basis, axes=1)
        out += np.kron(basis[a], block)
    out /= d * d
    out = (out + out.conj().T) / 2
    return ChoiEstimate(out, physical=False)


def _truncate_eigenvalues(values: np.ndarray) -> np.ndarray:
    """Zero negative eigenvalues, spreading the removed mass over the rest."""
    order = np.argsort(values)[::-1]
    mu = values[order].astype(float)
    out = np.zeros_like(mu)
    i, deficit = len(mu), 0.0
    while i > 0 and mu[i - 1] + deficit / i < 0:
        deficit += mu[i - 1]
        i -= 1
    out[:i] = mu[:i] + deficit / i if i else 0.0
    result = np.empty_like(out)
    result[order] = out
    return result


def project_physical(est: ChoiEstimate) -> ChoiEstimate:
    """Trace-preserving eigenvalue truncation to a positive semidefinite matrix."""
    m = est.matrix
    if not linalg.is_hermitian(m):
        raise InvariantViolation("projection needs a Hermitian input")
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if vals.min() >= 0:
        return ChoiEstimate(m.copy(), physical=True)
    lam = _truncate_eigenvalues(vals)
    out = (vecs * lam) @ vecs.conj().T
    return ChoiEstimate((out + out.conj().T) / 2, physical=True)


def fidelity_from_tomography(ideal: ChoiMatrix, est: ChoiEstimate) -> float:
    if ideal.matrix.shape != est.matrix.shape:
        raise DimensionError(f"shape mismatch {ideal.matrix.shape} vs {est.matrix.shape}")
    return float(np.real(np.einsum("ij,ji->", ideal.matrix, est.matrix)))


def write_records_csv(records: list[TomographyRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([r.input_index, r.observable.letters, repr(r.value), repr(r.variance)])


def read_records_csv(path: str | Path) -> list[TomographyRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"expected columns {CSV_COLUMNS}, got {reader.fieldnames}")
        for row in reader:
            label = row["input_index"]
            records.append(
                TomographyRecord(
                    label,
                    input_state(label),
                    PauliWord.from_label(row["observable"]),
                    float(row["value"]),
                    float(row["variance"]),
                )
            )
    return records
