"""Operator tables, golden files and machine-readable report output."""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources

from mcpc.certification import CertificationReport, RelevantOperator, SweepRow

OPERATOR_COLUMNS = ("index", "label", "sign", "w", "pr", "column", "row", "ordinal_label")
CERTIFY_COLUMNS = (
    "gate",
    "noise",
    "method",
    "process_fidelity",
    "average_fidelity",
    "std_error",
    "ci90_lo",
    "ci90_hi",
    "n_operators_sampled",
    "n_settings",
    "shots_per_setting",
    "seed",
)
TOMOGRAPHY_COLUMNS = ("gate", "noise", "F_tom", "F_ML*", "Fbar_tom", "Fbar_ML*", "n_records", "shots", "seed")
SWEEP_COLUMNS = (
    "K",
    "mean_F",
    "mean_Fbar",
    "half_width",
    "half_width_without_replacement",
    "bootstrap_half_width",
)


def _digits(word) -> str:
    return "".join(str("IXYZ".index(c)) for c in word.letters)


def operator_rows(relevant: list[RelevantOperator]) -> list[dict]:
    """Table rows; ``column``/``row`` are the base-4 digits of the copy and output halves.

    ``ordinal_label`` is the binary position in the list, split after the
    first ``n`` bits into column and row parts.
    """
    n = relevant[0].word.n // 2
    bits = max(1, math.ceil(math.log2(len(relevant))))
    rows = []
    for i, op in enumerate(relevant):
        a, b = op.word.split(n)
        ordinal = format(i, f"0{bits}b")
        rows.append(
            {
                "index": i,
                "label": op.label,
                "sign": -1 if op.w < 0 else 1,
                "w": op.w,
                "pr": op.pr,
                "column": _digits(a),
                "row": _digits(b),
                "ordinal_label": f"{ordinal[:n]},{ordinal[n:]}",
            }
        )
    return rows


def load_golden(gate: str) -> tuple[list[str], bool]:
    """Bundled operator list for ``gate`` and whether it carries signs."""
    text = resources.files("mcpc").joinpath("data", "golden", f"{gate}.txt").read_text()
    signed = True
    lines = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            if line.replace(" ", "") == "#signs:none":
                signed = False
            continue
        if line:
            lines.append(line)
    return lines, signed


def golden_diff(gate: str, relevant: list[RelevantOperator]) -> list[str]:
    """Human-readable mismatches against the golden table (empty when identical)."""
    expected, signed = load_golden(gate)
    got = [op.label if signed else op.word.letters for op in relevant]
    problems = []
    if len(got) != len(expected):
        problems.append(f"row count {len(got)} != golden {len(expected)}")
    for k, (g, e) in enumerate(zip(got, expected), start=1):
        if g != e:
            problems.append(f"row {k}: got {g}, golden {e}")
    return problems


def schema() -> dict:
    return json.loads(resources.files("mcpc").joinpath("data", "report.schema.json").read_text())


def dumps_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else value


def certification_payload(report: CertificationReport, config: dict) -> dict:
    return {"kind": "certification", "config": config, **report.to_dict()}


def certification_csv(report: CertificationReport) -> str:
    row = report.to_dict()
    row["ci90_lo"], row["ci90_hi"] = report.ci90
    return to_csv(CERTIFY_COLUMNS, [row])


def sweep_payload(rows: list[SweepRow], config: dict, counts, trials: int) -> dict:
    return {
        "kind": "sweep",
        "config": config,
        "sample_counts": list(counts),
        "trials": trials,
        "rows": [sweep_row_dict(r) for r in rows],
    }


def sweep_row_dict(r: SweepRow) -> dict:
    hw_norepl = r.half_width_without_replacement
    return {
        "K": r.k,
        "mean_F": r.mean_fidelity,
        "mean_Fbar": r.mean_average_fidelity,
        "half_width": r.half_width,
        "half_width_without_replacement": None if math.isnan(hw_norepl) else hw_norepl,
        "bootstrap_half_width": r.bootstrap_half_width,
    }
