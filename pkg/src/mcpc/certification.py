"""Monte Carlo process certification against a unitary target.

The fidelity of a channel to a unitary target is a relevance-weighted average
of ratios ``s_i / w_i``, where ``w_i`` is the expectation of a Pauli word on
the target's Choi state and ``s_i`` the same expectation on the channel's Choi
state. Each ``s_i`` is measured without ancillas: the first half of the word
(``A``) selects input states (complex-conjugated eigenvectors of ``A``), the
channel acts on them, and the second half (``B``) is read out.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from mcpc import pauli
from mcpc.channels import ChoiMatrix, QuantumChannel
from mcpc.errors import InvariantViolation
from mcpc.pauli import PauliWord
from mcpc.readout import Readout, ReadoutCalibration, rotated_populations, toggle_scheme

RELEVANCE_TOLERANCE = 1e-9
SUSPICIOUS_BELOW = 1e-6
RATIO_WARNING = 3.0
Z90 = NormalDist().inv_cdf(0.95)


@dataclass(frozen=True)
class RelevantOperator:
    word: PauliWord  # unsigned, 2n factors: copy register then output register
    w: float
    pr: float

    @property
    def signed_word(self) -> PauliWord:
        return -self.word if self.w < 0 else self.word

    @property
    def label(self) -> str:
        return self.signed_word.label


def enumerate_relevant(ideal: ChoiMatrix, tolerance: float = RELEVANCE_TOLERANCE) -> list[RelevantOperator]:
    """Scan all ``4**(2n)`` words and keep those with non-vanishing ideal expectation.

    Relevance is ``w**2 / 4**n``; it sums to one only for a pure Choi state,
    which is checked.
    """
    n2 = 2 * ideal.n
    m = ideal.matrix
    kept = []
    for index in range(4**n2):
        word = PauliWord.from_index(index, n2)
        w = pauli.expectation(m, word)
        if abs(w) > tolerance:
            if abs(w) < SUSPICIOUS_BELOW:
                warnings.warn(f"{word} has a tiny ideal expectation {w:.3g}", RuntimeWarning)
            kept.append((word, w))
    norm = 4**ideal.n
    ops = [RelevantOperator(word, w, w * w / norm) for word, w in kept]
    total = math.fsum(op.pr for op in ops)
    if abs(total - 1) > 1e-6:
        raise InvariantViolation(f"relevance sums to {total:.9f}; the target is not unitary")
    return ops


# --- stabilizer structure ---------------------------------------------------

_GENERATORS = {
    "cnot": ("XIXX", "ZIZI", "IXIX", "IZZZ"),
    "cphase": ("XIXZ", "ZIZI", "IXZX", "IZIZ"),
    "cphase_chain": ("XIIXZI", "ZIIZII", "IXIZXZ", "IZIIZI", "IIXIZX", "IIZIIZ"),
}


@dataclass(frozen=True)
class StabilizerGeneratorSet:
    generators: tuple[PauliWord, ...]

    def elements(self) -> list[PauliWord]:
        """Signed products over every subset of the generators."""
        n2 = self.generators[0].n
        out = []
        for picks in itertools.product((0, 1), repeat=len(self.generators)):
            word = PauliWord.identity(n2)
            for g, take in zip(self.generators, picks):
                if take:
                    word = pauli.signed_product(word, g)
            out.append(word)
        return out

    def check(self) -> None:
        gens = self.generators
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes_with(b):
                raise InvariantViolation(f"generators {a} and {b} anticommute")
        unsigned = {w.unsigned() for w in self.elements()}
        if len(unsigned) != 2 ** len(gens):
            raise InvariantViolation("generators are not independent")


def stabilizer_generators(gate: str) -> StabilizerGeneratorSet:
    if gate not in _GENERATORS:
        raise ValueError(f"{gate!r} is not a Clifford gate with a stabilizer Choi state")
    return StabilizerGeneratorSet(tuple(PauliWord.from_label(s) for s in _GENERATORS[gate]))


# --- measurement plan -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasurementSetting:
    operator_index: int
    input_index: int
    input_state: np.ndarray
    input_eigenvalue: int
    measured_word: PauliWord
    readout_variant: int
    toggle_pattern: int


def _split(word: PauliWord) -> tuple[PauliWord, PauliWord]:
    return word.split(word.n // 2)


def build_plan(relevant: list[RelevantOperator]) -> list[MeasurementSetting]:
    """Every (operator, conjugated input eigenvector, toggle pattern) triple.

    The identity word is known to have expectation one and gets no settings.
    """
    if not relevant:
        raise ValueError("empty operator list")
    plan = []
    for i, op in enumerate(relevant):
        if op.word.is_identity:
            continue
        a, b = _split(op.word)
        if b.is_identity:
            continue  # <I> on a trace-preserved output needs no measurement
        basis = pauli.eigenbasis(a)
        patterns = toggle_scheme(b).patterns
        for j, (vec, val) in enumerate(zip(basis.vectors, basis.eigenvalues)):
            state = pauli.conjugate_state(vec)
            for v, t in enumerate(patterns):
                plan.append(MeasurementSetting(i, j, state, int(val), b, v, t))
    return plan


def plan_size(relevant: list[RelevantOperator]) -> int:
    n = relevant[0].word.n // 2
    measured = sum(1 for op in relevant if not _split(op.word)[1].is_identity)
    return measured * (1 << n) * (1 << (n - 1))


# --- simulated measurement ---------------------------------------------------


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Generator keyed by ``(seed, *keys)``; independent of evaluation order."""
    return np.random.default_rng([int(seed), *map(int, keys)])


class _Probe:
    """Cached exact readout probabilities for one relevant word on one channel."""

    def __init__(self, ch: QuantumChannel, word: PauliWord, cal: ReadoutCalibration):
        a, b = _split(word)
        basis = pauli.eigenbasis(a)
        self.eigenvalues = basis.eigenvalues.astype(float)
        self.d = len(self.eigenvalues)
        self.readout = None
        self.probs = None
        if not b.is_identity:
            self.readout = Readout(b, cal)
            inputs = pauli.conjugate_state(basis.vectors)
            self.probs = np.stack([rotated_populations(ch.apply_pure(v), b) for v in inputs])

    @property
    def n_settings(self) -> int:
        return 0 if self.readout is None else self.d * self.readout.n_settings

    def per_input(self, shots, rng, inputs=None):
        """Readout values and variances of ``B`` for the selected input indices."""
        if self.readout is None:
            k = self.d if inputs is None else len(inputs)
            return np.ones(k), np.zeros(k)
        probs = self.probs if inputs is None else self.probs[inputs]
        return self.readout.extract(probs, shots, rng)

    def expectation(self, shots, rng) -> tuple[float, float]:
        vals, var = self.per_input(shots, rng)
        return float(np.mean(self.eigenvalues * vals)), float(np.sum(var)) / self.d**2

    def single_input(self, j: int, shots, rng) -> tuple[float, float]:
        vals, var = self.per_input(shots, rng, [j])
        return float(self.eigenvalues[j] * vals[0]), float(var[0])


def expectation_via_inputs(
    ch: QuantumChannel,
    word: PauliWord,
    cal: ReadoutCalibration | None = None,
    shots: int | None = None,
    seed: int = 0,
) -> tuple[float, float]:
    """``tr[(A x B) choi(ch)]`` from single-register preparations and readouts.

    Averages ``a_j <B>`` over the conjugated eigenvectors ``|a_j>`` of ``A``
    sent through ``ch``; ``word`` must have ``2 * ch.n`` factors.
    """
    if word.n != 2 * ch.n:
        raise ValueError(f"word has {word.n} factors, need {2 * ch.n}")
    cal = cal or ReadoutCalibration.default(ch.n)
    probe = _Probe(ch, word.unsigned(), cal)
    value, var = probe.expectation(shots, substream(seed, 0) if shots else None)
    return word.sign * value, var


# --- reports ------------------------------------------------------------------


def average_fidelity(f: float, d: int) -> float:
    return (d * f + 1) / (d + 1)


@dataclass
class CertificationReport:
    process_fidelity: float
    average_fidelity: float
    std_error: float
    ci90: tuple[float, float]
    n_operators_sampled: int
    n_settings: int
    shots_per_setting: int
    seed: int
    d: int
    method: str
    warnings: list[str] = field(default_factory=list)
    gate: str | None = None
    noise: str | None = None

    @classmethod
    def build(cls, f, se, d, **kw) -> "CertificationReport":
        se = max(float(se), 0.0)
        return cls(
            process_fidelity=float(f),
            average_fidelity=average_fidelity(float(f), d),
            std_error=se,
            ci90=(float(f) - Z90 * se, float(f) + Z90 * se),
            d=d,
            **kw,
        )

    def check(self) -> None:
        if abs(self.average_fidelity - average_fidelity(self.process_fidelity, self.d)) > 1e-12:
            raise InvariantViolation("average fidelity is inconsistent with process fidelity")
        lo, hi = self.ci90
        if not lo <= self.process_fidelity <= hi or self.std_error < 0:
            raise InvariantViolation("confidence interval does not cover the estimate")

    def to_dict(self) -> dict:
        return {
            "gate": self.gate,
            "noise": self.noise,
            "method": self.method,
            "process_fidelity": self.process_fidelity,
            "average_fidelity": self.average_fidelity,
            "std_error": self.std_error,
            "ci90": list(self.ci90),
            "n_operators_sampled": self.n_operators_sampled,
            "n_settings": self.n_settings,
            "shots_per_setting": self.shots_per_setting,
            "seed": self.seed,
            "d": self.d,
            "warnings": list(self.warnings),
        }


class Certifier:
    """Simulated certification of ``ch`` against the operators in ``relevant``.

    Exact readout probabilities are computed once per operator; shot noise is
    drawn from generators keyed by the seed and the operator or draw index.
    """

    def __init__(self, ch: QuantumChannel, relevant: list[RelevantOperator], cal: ReadoutCalibration | None = None):
        if not relevant or relevant[0].word.n != 2 * ch.n:
            raise ValueError("relevant operators do not match the channel size")
        self.ch = ch
        self.relevant = relevant
        self.cal = cal or ReadoutCalibration.default(ch.n)
        self.d = ch.dim
        self.pr = np.array([op.pr for op in relevant])
        self.pr = self.pr / self.pr.sum()
        self._probes: dict[int, _Probe] = {}
        self._exact: dict[int, tuple[float, float]] = {}

    def probe(self, i: int) -> _Probe:
        if i not in self._probes:
            self._probes[i] = _Probe(self.ch, self.relevant[i].word, self.cal)
        return self._probes[i]

    def patterns_for(self, i: int) -> int:
        b = _split(self.relevant[i].word)[1]
        return 0 if b.is_identity else 1 << (self.ch.n - 1)

    def ratio(self, i: int, shots, rng, eigen_index: int | None = None) -> tuple[float, float]:
        """``s_i / w_i`` and its variance; the identity word is exactly 1."""
        op = self.relevant[i]
        if op.word.is_identity:
            return 1.0, 0.0
        if eigen_index is not None:
            s, var = self.probe(i).single_input(eigen_index, shots, rng)
        elif shots is None:
            if i not in self._exact:
                self._exact[i] = self.probe(i).expectation(None, None)
            s, var = self._exact[i]
        else:
            s, var = self.probe(i).expectation(shots, rng)
        return s / op.w, var / op.w**2

    def exhaustive(self, shots: int | None = None, seed: int = 0) -> CertificationReport:
        f_terms, var_terms, notes = [], [], []
        for i, op in enumerate(self.relevant):
            r, var = self.ratio(i, shots, substream(seed, 1, i) if shots else None)
            if abs(r) > RATIO_WARNING:
                notes.append(f"{op.label}: |s/w| = {abs(r):.3g} exceeds {RATIO_WARNING}")
            f_terms.append(self.pr[i] * r)
            var_terms.append(self.pr[i] ** 2 * var)
        report = CertificationReport.build(
            math.fsum(f_terms),
            math.sqrt(math.fsum(var_terms)),
            self.d,
            n_operators_sampled=len(self.relevant),
            n_settings=plan_size(self.relevant),
            shots_per_setting=shots or 0,
            seed=seed,
            method="exhaustive",
            warnings=notes,
        )
        return report

    def draw(self, n_samples: int, rng: np.random.Generator, replace: bool = True) -> np.ndarray:
        if n_samples < 1:
            raise ValueError("need at least one sample")
        if not replace and n_samples > len(self.relevant):
            raise ValueError("cannot draw more operators than exist without replacement")
        return rng.choice(len(self.relevant), size=n_samples, replace=replace, p=self.pr)

    def sampled_ratios(self, indices, shots, seed, eigenstate_sampling: bool, stream: tuple[int, ...] = ()):
        """Ratio estimates for drawn operator indices; draw ``k`` uses its own substream."""
        out = np.empty(len(indices))
        for k, i in enumerate(indices):
            rng = substream(seed, 2, *stream, k) if (shots or eigenstate_sampling) else None
            j = int(rng.integers(self.d)) if eigenstate_sampling else None
            out[k] = self.ratio(int(i), shots, rng, j)[0]
        return out

    def monte_carlo(
        self,
        n_samples: int,
        eigenstate_sampling: bool = False,
        shots: int | None = None,
        seed: int = 0,
        replace: bool = True,
        stream: tuple[int, ...] = (),
    ) -> CertificationReport:
        """Average of ``s/w`` over operators drawn from the relevance distribution.

        Without replacement the estimate is the relevance-weighted mean of the
        distinct draws, which equals the exhaustive sum when every operator is
        drawn.
        """
        idx = self.draw(n_samples, substream(seed, 3, *stream), replace)
        ratios = self.sampled_ratios(idx, shots, seed, eigenstate_sampling, stream)
        f, se = combine(ratios, self.pr[idx], replace, len(self.relevant))
        inputs = 1 if eigenstate_sampling else self.d
        settings = sum(inputs * self.patterns_for(i) for i in idx)
        return CertificationReport.build(
            f,
            se,
            self.d,
            n_operators_sampled=n_samples,
            n_settings=int(settings),
            shots_per_setting=shots or 0,
            seed=seed,
            method="monte_carlo" + ("" if replace else "_without_replacement"),
        )


def combine(ratios: np.ndarray, weights: np.ndarray, replace: bool, population: int) -> tuple[float, float]:
    """Point estimate and standard error from sampled ratios."""
    k = len(ratios)
    sd = float(np.std(ratios, ddof=1)) if k > 1 else 0.0
    if replace:
        return float(np.mean(ratios)), sd / math.sqrt(k)
    f = float(np.sum(weights * ratios) / np.sum(weights))
    fpc = math.sqrt(max(population - k, 0) / max(population - 1, 1))
    return f, sd / math.sqrt(k) * fpc


def estimate_exhaustive(ch, relevant, cal=None, shots=None, seed=0) -> CertificationReport:
    return Certifier(ch, relevant, cal).exhaustive(shots, seed)


def estimate_monte_carlo(
    ch, relevant, n_samples, eigenstate_sampling=False, cal=None, shots=None, seed=0, replace=True
) -> CertificationReport:
    return Certifier(ch, relevant, cal).monte_carlo(n_samples, eigenstate_sampling, shots, seed, replace)


# --- sub-sampling sweep ---------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    k: int
    mean_fidelity: float
    mean_average_fidelity: float
    half_width: float  # 90% half-width of the average fidelity, sampling with replacement
    half_width_without_replacement: float
    bootstrap_half_width: float  # from resampling the first trial's ratios


def _half_width(values: np.ndarray) -> float:
    lo, hi = np.percentile(values, [5, 95])
    return float(hi - lo) / 2


def subsample_sweep(
    ch: QuantumChannel,
    relevant: list[RelevantOperator],
    sample_counts,
    trials: int,
    cal: ReadoutCalibration | None = None,
    shots: int | None = None,
    seed: int = 0,
    bootstrap: int = 1000,
) -> list[SweepRow]:
    """Spread of Monte Carlo estimates as a function of the number of sampled operators."""
    if trials < 2:
        raise ValueError("need at least two trials")
    cert = Certifier(ch, relevant, cal)
    d = cert.d
    rows = []
    for k in sample_counts:
        if k < 1:
            raise ValueError("sample counts must be positive")
        with_repl, first = [], None
        for t in range(trials):
            idx = cert.draw(k, substream(seed, 4, k, t))
            ratios = cert.sampled_ratios(idx, shots, seed, False, (4, k, t))
            with_repl.append(float(np.mean(ratios)))
            if first is None:
                first = ratios
        without = []
        if k <= len(relevant):
            for t in range(trials):
                idx = cert.draw(k, substream(seed, 5, k, t), replace=False)
                ratios = cert.sampled_ratios(idx, shots, seed, False, (5, k, t))
                without.append(combine(ratios, cert.pr[idx], False, len(relevant))[0])
        boot_rng = substream(seed, 6, k)
        resampled = first[boot_rng.integers(0, k, size=(bootstrap, k))].mean(axis=1)
        fbar = average_fidelity(np.array(with_repl), d)
        rows.append(
            SweepRow(
                k=int(k),
                mean_fidelity=float(np.mean(with_repl)),
                mean_average_fidelity=float(np.mean(fbar)),
                half_width=_half_width(fbar),
                half_width_without_replacement=(
                    _half_width(average_fidelity(np.array(without), d)) if without else float("nan")
                ),
                bootstrap_half_width=_half_width(average_fidelity(resampled, d)),
            )
        )
    return rows


def render_table(relevant: list[RelevantOperator]) -> list[str]:
    """One signed word per operator, in enumeration order (e.g. ``-IYZY``)."""
    return [op.label for op in relevant]
