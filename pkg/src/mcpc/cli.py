"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 numerical invariant violation
(including a golden-table mismatch).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from mcpc import certification as cert
from mcpc import channels, readout, reporting, tomography
from mcpc.errors import CalibrationError, InvariantViolation

EXIT_USAGE = 2
EXIT_INVARIANT = 3
OUTPUT_DIR_ENV = "MCPC_OUTPUT_DIR"
DEFAULT_COUNTS = (10, 25, 50, 100, 200)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    gate: str = "cnot"
    noise: str = "none"
    noise_before: bool = False
    mode: str = "exact"
    shots: int = 1000
    samples: str | int = "all"
    eigenstate_sampling: bool = False
    without_replacement: bool = False
    seed: int = 0
    calibration: str = "default"
    output: str | None = None
    format: str = "json"

    def __post_init__(self):
        self.canonicalize()

    def canonicalize(self) -> None:
        if self.gate not in channels.GATES:
            raise UsageError(f"unknown gate {self.gate!r}")
        try:
            self.noise = channels.parse_noise(str(self.noise)).render()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if self.mode not in ("exact", "shots"):
            raise UsageError(f"mode must be exact or shots, got {self.mode!r}")
        self.shots = int(self.shots)
        if self.shots < 2:
            raise UsageError("--shots must be at least 2")
        if str(self.samples).lower() == "all":
            self.samples = "all"
        else:
            try:
                self.samples = int(self.samples)
            except ValueError:
                raise UsageError(f"--samples must be 'all' or a positive integer, got {self.samples!r}") from None
            if self.samples < 1:
                raise UsageError("--samples must be positive")
        self.seed = int(self.seed)
        if self.format not in ("json", "csv"):
            raise UsageError(f"format must be json or csv, got {self.format!r}")

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def render(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def report_dict(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("format")
        return d

    @property
    def shot_count(self) -> int | None:
        return self.shots if self.mode == "shots" else None


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--gate", choices=channels.GATES)
    p.add_argument("--noise", help="e.g. depolarizing:0.1+amp_damp:0.05+overrot:y:0.1[:qubit], or none")
    p.add_argument("--noise-before", action="store_true", default=None, help="attach noise before the gate")
    p.add_argument("--mode", choices=("exact", "shots"))
    p.add_argument("--shots", type=int, help="repetitions per measurement setting in shots mode")
    p.add_argument("--seed", type=int)
    p.add_argument("--calibration", help="default, randomized:<seed>, or a file of 2**n level responses")
    p.add_argument("--output", "-o", help="report path ('-' for stdout)")
    p.add_argument("--format", choices=("json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcpc", description="Monte Carlo process certification on simulated gates")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list the relevant Pauli operators of a gate")
    p.add_argument("--gate", required=True, choices=channels.GATES)
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--golden", action="store_true", help="compare against the bundled operator table")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--output", "-o")

    p = sub.add_parser("plan", help="count measurement settings for a gate")
    p.add_argument("--gate", required=True, choices=channels.GATES)

    p = sub.add_parser("certify", help="estimate the process fidelity")
    _add_run_options(p)
    p.add_argument("--samples", help="'all' for the exhaustive sum or a number of Monte Carlo draws")
    p.add_argument("--eigenstate-sampling", action="store_true", default=None)
    p.add_argument("--without-replacement", action="store_true", default=None)

    p = sub.add_parser("tomography", help="linear-inversion tomography and projected fidelity")
    _add_run_options(p)
    p.add_argument("--records", help="write the tomography records to this CSV")
    p.add_argument("--from-records", help="skip simulation and invert records from this CSV")

    p = sub.add_parser("sweep", help="spread of Monte Carlo estimates versus sampled operators")
    _add_run_options(p)
    p.add_argument("--counts", default=",".join(map(str, DEFAULT_COUNTS)))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--points", help="also write plot points (K, mean Fbar, half-width) as JSON")
    return parser


def _config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = value
    if args.command == "sweep":
        data.setdefault("gate", "toffoli")
        data.setdefault("shots", 1000)
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def _report_path(cfg: RunConfig, stem: str) -> str | None:
    if cfg.output is None and os.environ.get(OUTPUT_DIR_ENV):
        return str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{stem}.{cfg.format}")
    return cfg.output


def _emit(text: str, summary: str, cfg: RunConfig, stem: str) -> None:
    target = _report_path(cfg, stem)
    if target == "-":
        sys.stdout.write(text)
        return
    if target:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text)
    sys.stdout.write(summary)


def _channel(cfg: RunConfig):
    try:
        return channels.noisy_gate(cfg.gate, cfg.noise, before=cfg.noise_before)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _calibration(cfg: RunConfig):
    try:
        return readout.calibration_from_source(cfg.calibration, channels.gate_qubits(cfg.gate))
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"bad calibration {cfg.calibration!r}: {exc}") from None


def cmd_enumerate(args) -> int:
    relevant = cert.enumerate_relevant(channels.choi(channels.gate_library(args.gate)))
    if args.count_only:
        print(len(relevant))
    elif args.format == "text":
        text = "\n".join(cert.render_table(relevant)) + "\n"
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
    else:
        rows = reporting.operator_rows(relevant)
        if args.format == "json":
            text = reporting.dumps_json({"kind": "operators", "gate": args.gate, "count": len(rows), "operators": rows})
        else:
            text = reporting.to_csv(reporting.OPERATOR_COLUMNS, rows)
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
    if args.golden:
        problems = reporting.golden_diff(args.gate, relevant)
        for line in problems:
            print(f"golden mismatch: {line}", file=sys.stderr)
        if problems:
            return EXIT_INVARIANT
        print(f"golden table for {args.gate}: match", file=sys.stderr)
    return 0


def cmd_plan(args) -> int:
    relevant = cert.enumerate_relevant(channels.choi(channels.gate_library(args.gate)))
    print(len(cert.build_plan(relevant)))
    return 0


def cmd_certify(args) -> int:
    cfg = _config_from_args(args)
    ideal = channels.choi(channels.gate_library(cfg.gate))
    relevant = cert.enumerate_relevant(ideal)
    certifier = cert.Certifier(_channel(cfg), relevant, _calibration(cfg))
    if cfg.samples == "all":
        report = certifier.exhaustive(cfg.shot_count, cfg.seed)
    else:
        report = certifier.monte_carlo(
            cfg.samples,
            eigenstate_sampling=cfg.eigenstate_sampling,
            shots=cfg.shot_count,
            seed=cfg.seed,
            replace=not cfg.without_replacement,
        )
    report.gate, report.noise = cfg.gate, cfg.noise
    report.check()
    if cfg.format == "json":
        text = reporting.dumps_json(reporting.certification_payload(report, cfg.report_dict()))
    else:
        text = reporting.certification_csv(report)
    lo, hi = report.ci90
    summary = (
        f"F = {report.process_fidelity!r}\n"
        f"Fbar = {report.average_fidelity!r}\n"
        f"std_error = {report.std_error!r}  ci90 = [{lo!r}, {hi!r}]\n"
        f"operators = {report.n_operators_sampled}  settings = {report.n_settings}  seed = {report.seed}\n"
    )
    for w in report.warnings:
        summary += f"warning: {w}\n"
    _emit(text, summary, cfg, f"certify-{cfg.gate}")
    return 0


def cmd_tomography(args) -> int:
    cfg = _config_from_args(args)
    ideal = channels.choi(channels.gate_library(cfg.gate))
    if args.from_records:
        records = tomography.read_records_csv(args.from_records)
    else:
        records = tomography.collect(_channel(cfg), _calibration(cfg), cfg.shot_count, cfg.seed)
    records_path = args.records
    report_path = _report_path(cfg, f"tomography-{cfg.gate}")
    if records_path is None and report_path not in (None, "-") and not args.from_records:
        records_path = str(Path(report_path).with_suffix("")) + "-records.csv"
    if records_path:
        Path(records_path).parent.mkdir(parents=True, exist_ok=True)
        tomography.write_records_csv(records, records_path)
    raw = tomography.invert(records)
    raw.check()
    projected = tomography.project_physical(raw)
    projected.check()
    d = ideal.d
    f_tom = tomography.fidelity_from_tomography(ideal, raw)
    f_ml = tomography.fidelity_from_tomography(ideal, projected)
    payload = {
        "kind": "tomography",
        "config": cfg.report_dict(),
        "F_tom": f_tom,
        "F_ML*": f_ml,
        "Fbar_tom": cert.average_fidelity(f_tom, d),
        "Fbar_ML*": cert.average_fidelity(f_ml, d),
        "n_records": len(records),
        "d": d,
        "min_eigenvalue_raw": float(np.linalg.eigvalsh(raw.matrix).min()),
    }
    if cfg.format == "json":
        text = reporting.dumps_json(payload)
    else:
        row = dict(payload, gate=cfg.gate, noise=cfg.noise, shots=cfg.shot_count or 0, seed=cfg.seed)
        text = reporting.to_csv(reporting.TOMOGRAPHY_COLUMNS, [row])
    summary = f"F_tom = {f_tom!r}\nF_ML* = {f_ml!r}\nrecords = {len(records)}\n"
    _emit(text, summary, cfg, f"tomography-{cfg.gate}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    try:
        counts = [int(c) for c in args.counts.split(",") if c.strip()]
    except ValueError:
        raise UsageError(f"--counts must be comma-separated integers, got {args.counts!r}") from None
    if not counts or min(counts) < 1:
        raise UsageError("--counts must be positive")
    if args.trials < 2:
        raise UsageError("--trials must be at least 2")
    relevant = cert.enumerate_relevant(channels.choi(channels.gate_library(cfg.gate)))
    rows = cert.subsample_sweep(
        _channel(cfg), relevant, counts, args.trials, _calibration(cfg), cfg.shot_count, cfg.seed
    )
    dict_rows = [reporting.sweep_row_dict(r) for r in rows]
    if cfg.format == "json":
        text = reporting.dumps_json(reporting.sweep_payload(rows, cfg.report_dict(), counts, args.trials))
    else:
        text = reporting.to_csv(reporting.SWEEP_COLUMNS, dict_rows)
    if args.points:
        points = {
            "K": [r["K"] for r in dict_rows],
            "mean_Fbar": [r["mean_Fbar"] for r in dict_rows],
            "half_width": [r["half_width"] for r in dict_rows],
        }
        Path(args.points).write_text(reporting.dumps_json(points))
    summary = "".join(f"K={r['K']:<5d} mean_Fbar={r['mean_Fbar']:.6f} half_width={r['half_width']:.6f}\n" for r in dict_rows)
    _emit(text, summary, cfg, f"sweep-{cfg.gate}")
    return 0


COMMANDS = {
    "enumerate": cmd_enumerate,
    "plan": cmd_plan,
    "certify": cmd_certify,
    "tomography": cmd_tomography,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, CalibrationError) as exc:
        parser.print_usage(sys.stderr)
        print(f"mcpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"mcpc: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
