"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from mcpc import certification as cert
from mcpc import channels, pauli, readout, reporting, tomography
from mcpc.pauli import PauliWord
from mcpc.readout import ReadoutCalibration

from conftest import ACCEPTANCE_LINES, random_density

NOISES = ["none", "depolarizing:0.05", "depolarizing:0.2", "amp_damp:0.1", "overrot:y:0.1"]


def report(number, title, ok, detail, started):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail} ({time.perf_counter() - started:.1f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _relevant(gate):
    return cert.enumerate_relevant(channels.choi(channels.gate_library(gate)))


def test_criterion_1_golden_tables():
    t0 = time.perf_counter()
    problems = []
    for gate in ("cnot", "cphase", "cphase_chain", "toffoli"):
        problems += [f"{gate}: {p}" for p in reporting.golden_diff(gate, _relevant(gate))]
    toffoli = _relevant("toffoli")
    mags = np.array([abs(op.w) for op in toffoli])
    n_one, n_half = int(np.isclose(mags, 1).sum()), int(np.isclose(mags, 0.5).sum())
    elapsed = time.perf_counter() - t0
    ok = not problems and len(toffoli) == 232 and (n_one, n_half) == (8, 224) and elapsed < 10
    report(1, "golden operator tables", ok,
           f"mismatches={len(problems)}, toffoli={len(toffoli)} ({n_one} x |w|=1, {n_half} x |w|=0.5)", t0)


def test_criterion_2_plan_sizes():
    t0 = time.perf_counter()
    got = {g: len(cert.build_plan(_relevant(g))) for g in ("cnot", "cphase_chain", "toffoli")}
    ok = got == {"cnot": 120, "cphase_chain": 2016, "toffoli": 7392}
    report(2, "measurement setting counts", ok, f"{got}", t0)


def test_criterion_3_oracle_equivalence():
    t0 = time.perf_counter()
    worst_f = worst_choi = 0.0
    for gate in channels.GATES:
        ideal = channels.choi(channels.gate_library(gate))
        relevant = cert.enumerate_relevant(ideal)
        for noise in NOISES:
            ch = channels.noisy_gate(gate, noise)
            target = channels.choi(ch)
            f = cert.estimate_exhaustive(ch, relevant).process_fidelity
            worst_f = max(worst_f, abs(f - channels.choi_overlap(ideal, target)))
            est = tomography.invert(tomography.collect(ch))
            worst_choi = max(worst_choi, float(np.abs(est.matrix - target.matrix).max()))
    elapsed = time.perf_counter() - t0
    ok = worst_f < 1e-9 and worst_choi < 1e-9 and elapsed < 60
    report(3, "exhaustive certification and tomography vs Choi", ok,
           f"max |F - overlap| = {worst_f:.2e}, max |choi_tom - choi| = {worst_choi:.2e}", t0)


def test_criterion_4_input_state_reduction():
    t0 = time.perf_counter()
    worst, count, with_y = 0.0, 0, 0
    for gate in channels.GATES:
        # a non-trivial channel so the check is not just +-1 bookkeeping
        ch = channels.noisy_gate(gate, "amp_damp:0.1+overrot:y:0.1")
        rho = channels.choi(ch).matrix
        for op in _relevant(gate):
            direct = np.trace(pauli.dense(op.word) @ rho).real
            value, _ = cert.expectation_via_inputs(ch, op.word)
            worst = max(worst, abs(value - direct))
            count += 1
            with_y += "Y" in op.word.letters[: ch.n]
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 60 and with_y > 0
    report(4, "input-state reduction vs Choi expectation", ok,
           f"{count} operators ({with_y} with Y on the input side), max error {worst:.2e}", t0)


def test_criterion_5_readout_extraction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst, checks, counts_ok = 0.0, 0, True
    for n in (1, 2, 3):
        cals = [ReadoutCalibration(rng.uniform(0.0, 1.0, 2**n)) for _ in range(5)]
        states = [random_density(2**n, rng) for _ in range(20)]
        for w in pauli.enumerate_words(n)[1:]:
            counts_ok &= len(readout.toggle_scheme(w).patterns) == 2 ** (n - 1)
            dense_w = pauli.dense(w)
            for cal in cals:
                for rho in states:
                    value, _ = readout.measure_pauli(rho, w, cal)
                    worst = max(worst, abs(value - np.trace(rho @ dense_w).real))
                    checks += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and counts_ok and elapsed < 120
    report(5, "joint readout extraction", ok,
           f"{checks} checks, max error {worst:.2e}, 2^(n-1) settings: {counts_ok}", t0)


def test_criterion_6_monte_carlo_statistics():
    t0 = time.perf_counter()
    ch = channels.noisy_gate("cnot", "depolarizing:0.2")
    certifier = cert.Certifier(ch, _relevant("cnot"))
    exact = certifier.exhaustive().process_fidelity
    trials = np.array([certifier.monte_carlo(10, shots=1000, seed=s).process_fidelity for s in range(1000)])
    se_mean = trials.std(ddof=1) / np.sqrt(len(trials))
    z = abs(trials.mean() - exact) / se_mean
    sizes = [10, 40, 160, 640]
    spreads = [
        np.std([certifier.monte_carlo(n, shots=1000, seed=s, stream=(n,)).process_fidelity for s in range(200)], ddof=1)
        for n in sizes
    ]
    slope = np.polyfit(np.log(sizes), np.log(spreads), 1)[0]
    elapsed = time.perf_counter() - t0
    ok = z < 4 and abs(slope + 0.5) <= 0.1 and elapsed < 300
    report(6, "Monte Carlo unbiasedness and 1/sqrt(N) scaling", ok,
           f"bias = {z:.2f} standard errors, log-log slope = {slope:.3f}", t0)


def test_criterion_7_sweep_width_decreases():
    t0 = time.perf_counter()
    ch = channels.noisy_gate("toffoli", "depolarizing:0.15")
    counts = [10, 25, 50, 100, 200]
    rows = cert.subsample_sweep(ch, _relevant("toffoli"), counts, 100, shots=1000, seed=11)
    widths = [r.half_width for r in rows]
    rho = spearmanr(counts, widths).statistic
    elapsed = time.perf_counter() - t0
    ok = rho < 0 and elapsed < 300
    report(7, "sweep half-width shrinks with K", ok,
           "Spearman {:.2f}, half-widths {}".format(rho, ", ".join(f"{w:.4f}" for w in widths)), t0)


def test_criterion_8_method_agreement():
    t0 = time.perf_counter()
    ch = channels.noisy_gate("cnot", "depolarizing:0.1")
    ideal = channels.choi(channels.gate_library("cnot"))
    certifier = cert.Certifier(ch, cert.enumerate_relevant(ideal))
    diffs = []
    for seed in range(100):
        f_mc = certifier.monte_carlo(50, shots=1000, seed=seed).process_fidelity
        raw = tomography.invert(tomography.collect(ch, shots=1000, seed=seed))
        diffs.append(abs(f_mc - tomography.fidelity_from_tomography(ideal, raw)))
    mean = float(np.mean(diffs))
    elapsed = time.perf_counter() - t0
    ok = mean < 0.02 and elapsed < 600
    report(8, "Monte Carlo vs tomography agreement", ok, f"mean |F_MC - F_tom| = {mean:.4f} over 100 runs", t0)


def test_criterion_9_average_fidelity():
    t0 = time.perf_counter()
    spot = cert.average_fidelity(0.817, 4)
    reports = [
        cert.estimate_exhaustive(channels.noisy_gate(g, "amp_damp:0.1"), _relevant(g), shots=200, seed=1)
        for g in ("cnot", "toffoli")
    ] + [cert.estimate_monte_carlo(channels.noisy_gate("cphase", "depolarizing:0.1"), _relevant("cphase"), 20, seed=2)]
    worst = max(abs(r.average_fidelity - (r.d * r.process_fidelity + 1) / (r.d + 1)) for r in reports)
    ok = round(spot, 4) == 0.8536 and worst <= 1e-12
    report(9, "average fidelity conversion", ok, f"F=0.817, d=4 -> {spot:.6f}; max report drift {worst:.1e}", t0)
