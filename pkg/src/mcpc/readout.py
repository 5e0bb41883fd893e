"""Joint dispersive readout: one weighted measurement over all qubits.

A single shot returns the level response ``alpha[i]`` of the computational
basis outcome ``i``. Writing the measurement operator in the identity/sigma_z
basis gives coefficients ``beta[s]`` (a scaled Walsh-Hadamard transform of
``alpha``). A target Pauli word is read out by rotating each supported qubit so
the word maps onto a product of sigma_z, then averaging the measurement over a
group of pi-pulse toggle patterns; the average keeps only the identity term
and the target term, and the latter is solved for.

Conventions fixed here:

* basis rotation ``U`` per qubit satisfies ``U^dag Z U = sigma``:
  ``X`` uses ``Ry(-pi/2)``, ``Y`` uses ``Rx(pi/2)``, ``Z`` and ``I`` use nothing;
* a pi pulse on a qubit flips its outcome bit, so pattern ``t`` reports
  ``alpha[i ^ t]`` for outcome ``i`` (the sign of that qubit's sigma_z flips).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mcpc import linalg
from mcpc.channels import rotation
from mcpc.errors import CalibrationError, DimensionError
from mcpc.pauli import PauliWord

BETA_THRESHOLD = 1e-12
DEFAULT_CONTRAST = 0.8


def _fwht(values) -> np.ndarray:
    a = np.array(values, dtype=float)
    size = a.size
    if size == 0 or size & (size - 1):
        raise DimensionError(f"length {size} is not a power of two")
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1)
        h *= 2
    return a.reshape(size)


def walsh_beta(alpha) -> np.ndarray:
    """``beta[s] = 2**-n * sum_i (-1)**popcount(i & s) * alpha[i]``."""
    out = _fwht(alpha)
    return out / out.size


def walsh_alpha(beta) -> np.ndarray:
    """Inverse of :func:`walsh_beta`."""
    return _fwht(beta)


@dataclass(frozen=True, eq=False)
class ReadoutCalibration:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float).reshape(-1)
        linalg.num_qubits(a.size)
        if not np.all(np.isfinite(a)):
            raise CalibrationError("level responses must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        b = walsh_beta(a)
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    @property
    def n(self) -> int:
        return linalg.num_qubits(self.alpha.size)

    @classmethod
    def default(cls, n: int, contrast: float = DEFAULT_CONTRAST) -> "ReadoutCalibration":
        """Product-form levels ``(1 + c)**(n - k) * (1 - c)**k`` for ``k`` excited qubits.

        Every ``beta[s]`` equals ``c**popcount(s)``, so no term is degenerate.
        """
        k = np.bitwise_count(np.arange(1 << n)).astype(int)
        return cls((1 + contrast) ** (n - k) * (1 - contrast) ** k)

    @classmethod
    def randomized(cls, n: int, seed: int) -> "ReadoutCalibration":
        rng = np.random.default_rng([seed, n])
        return cls(rng.uniform(0.0, 1.0, 1 << n))

    @classmethod
    def from_file(cls, path: str | Path) -> "ReadoutCalibration":
        """Read a JSON list or whitespace/comma separated text of ``2**n`` levels."""
        text = Path(path).read_text()
        try:
            values = json.loads(text)
        except json.JSONDecodeError:
            values = [float(t) for t in text.replace(",", " ").split()]
        if isinstance(values, dict):
            values = values["alpha"]
        return cls(values)


def calibration_from_source(source: str, n: int) -> ReadoutCalibration:
    """``"default"``, ``"randomized:<seed>"`` or a file path."""
    if source == "default":
        return ReadoutCalibration.default(n)
    if source.startswith("randomized"):
        _, _, seed = source.partition(":")
        return ReadoutCalibration.randomized(n, int(seed or 0))
    cal = ReadoutCalibration.from_file(source)
    if cal.n != n:
        raise CalibrationError(f"calibration file has {cal.n} qubits, need {n}")
    return cal


@dataclass(frozen=True)
class ToggleScheme:
    n: int
    target_support: int
    patterns: tuple[int, ...]


def toggle_scheme(target: PauliWord) -> ToggleScheme:
    """All ``2**(n-1)`` pi-pulse masks with even parity on the target's support."""
    if target.is_identity:
        raise ValueError("the identity needs no readout settings")
    supp = target.support
    patterns = tuple(t for t in range(1 << target.n) if (t & supp).bit_count() % 2 == 0)
    return ToggleScheme(target.n, supp, patterns)


_PRE_ROTATION = {
    "I": np.eye(2, dtype=complex),
    "Z": np.eye(2, dtype=complex),
    "X": rotation("y", -math.pi / 2),
    "Y": rotation("x", math.pi / 2),
}


def basis_rotation(target: PauliWord) -> np.ndarray:
    """Unitary ``U`` with ``U^dag Z^supp U`` equal to the unsigned target."""
    return linalg.kron_all(_PRE_ROTATION[c] for c in target.letters)


def rotated_populations(rho: np.ndarray, target: PauliWord) -> np.ndarray:
    """Computational-basis outcome probabilities after the target's basis rotation."""
    u = basis_rotation(target)
    p = np.real(np.einsum("ij,jk,ik->i", u, rho, u.conj()))
    return p


class Readout:
    """Target-specific extraction: levels per toggle pattern and the solve for ``<target>``."""

    def __init__(self, target: PauliWord, cal: ReadoutCalibration):
        if cal.n != target.n:
            raise DimensionError(f"calibration for {cal.n} qubits, target has {target.n}")
        self.target = target
        self.scheme = toggle_scheme(target)
        self.beta_identity = float(cal.beta[0])
        self.beta_target = float(cal.beta[self.scheme.target_support])
        if abs(self.beta_target) <= BETA_THRESHOLD:
            raise CalibrationError(f"calibration cannot resolve {target.unsigned()}")
        idx = np.arange(1 << target.n)
        self.levels = np.stack([cal.alpha[idx ^ t] for t in self.scheme.patterns])  # (P, D)

    @property
    def n_settings(self) -> int:
        return len(self.scheme.patterns)

    def extract(self, probs: np.ndarray, shots: int | None = None, rng=None):
        """Estimate ``<target>`` from outcome probabilities of shape ``(..., D)``.

        Returns ``(value, variance)`` arrays over the leading axes. Exact mode
        (``shots=None``) has zero variance.
        """
        probs = np.asarray(probs, dtype=float)
        if shots is None:
            means = probs @ self.levels.T  # (..., P)
            var = np.zeros(means.shape[:-1])
        else:
            if shots < 2:
                raise ValueError("shot mode needs at least 2 repetitions per setting")
            p = np.clip(probs, 0.0, None)
            p = p / p.sum(axis=-1, keepdims=True)
            shape = p.shape[:-1] + self.levels.shape
            counts = rng.multinomial(shots, np.broadcast_to(p[..., None, :], shape))
            means = (counts * self.levels).sum(-1) / shots
            second = (counts * self.levels**2).sum(-1) / shots
            level_var = np.clip(second - means**2, 0.0, None) * shots / (shots - 1)
            var = (level_var / shots).sum(-1) / self.n_settings**2
        avg = means.mean(-1)
        value = self.target.sign * (avg - self.beta_identity) / self.beta_target
        return value, var / self.beta_target**2


def measure_pauli(
    rho: np.ndarray,
    target: PauliWord,
    cal: ReadoutCalibration,
    shots: int | None = None,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Read ``<target>`` on ``rho`` through the joint readout.

    Exact mode reproduces ``tr[rho dense(target)]``; with ``shots`` each toggle
    pattern is repeated that many times and the variance of the returned value
    is estimated from the sampled levels.
    """
    reader = Readout(target, cal)
    probs = rotated_populations(np.asarray(rho, dtype=complex), target)
    if shots is not None and rng is None:
        rng = np.random.default_rng(seed)
    value, var = reader.extract(probs, shots, rng)
    return float(value), float(var)
