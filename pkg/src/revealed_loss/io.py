"""Reading and writing case datasets and benchmark catalogs.

Datasets are JSON Lines, one :class:`~revealed_loss.core.CaseRecord` per
line::

    {"case_id": "c1", "domain": "cardiac", "p_elicited": 0.7, "p_true": 0.65,
     "theta": 1, "actions": {"baseline": "defer", "cost:fn4_d0.3": "yes"},
     "self_report_global": [1, 10, 2], "self_report_case": null,
     "belief_replicates": [0.7, 0.65, 0.7, 0.75, 0.7]}

Catalogs are CSV files with header ``id,c_fp,c_fn,c_defer`` (or a JSON list
of objects with those keys).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .core import Action, BenchmarkCost, CaseRecord, CostVector, Regime, default_catalog
from .exceptions import IntegrityError, ParameterError, ParseError, RangeError

__all__ = [
    "DatasetFile",
    "load_catalog",
    "load_dataset",
    "record_from_dict",
    "record_to_dict",
    "write_catalog",
    "write_dataset",
]

RECORD_FIELDS = (
    "case_id", "domain", "p_elicited", "p_true", "theta", "actions",
    "self_report_global", "self_report_case", "belief_replicates",
)
_REQUIRED = ("case_id", "domain", "p_elicited", "actions")


@dataclass
class DatasetFile:
    path: Optional[Path]
    records: List[CaseRecord]
    benchmark_catalog: List[BenchmarkCost] = field(default_factory=default_catalog)

    def benchmark(self, benchmark_id: str) -> BenchmarkCost:
        for bench in self.benchmark_catalog:
            if bench.id == benchmark_id:
                return bench
        raise IntegrityError(f"benchmark {benchmark_id!r} is not in the catalog")

    @property
    def domains(self) -> List[str]:
        return sorted({r.domain for r in self.records})

    @property
    def regimes(self) -> List[Regime]:
        return sorted({k for r in self.records for k in r.actions})


class _Violation(Exception):
    def __init__(self, kind, message, field=None):
        super().__init__(message)
        self.kind = kind
        self.field = field


def _probability(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _Violation(ParseError, f"{name} must be a number, got {value!r}", name)
    if not (0.0 <= value <= 1.0):
        raise _Violation(RangeError, f"{name} = {value!r} is outside [0, 1]", name)
    return float(value)


def _cost_triple(value, name):
    if value is None:
        return None
    if isinstance(value, dict):
        try:
            value = [value["c_fp"], value["c_fn"], value["c_defer"]]
        except KeyError as exc:
            raise _Violation(ParseError, f"{name} is missing {exc.args[0]}", name) from None
    if not isinstance(value, list) or len(value) != 3:
        raise _Violation(ParseError, f"{name} must be a list [c_fp, c_fn, c_defer]", name)
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise _Violation(ParseError, f"{name} entries must be numbers, got {v!r}", name)
        if not math.isfinite(v) or v < 0:
            raise _Violation(RangeError, f"{name} entries must be finite and nonnegative, got {v!r}", name)
    return CostVector(*value)


def record_from_dict(data) -> CaseRecord:
    """Validate one decoded JSON object and build a record.

    Raises :class:`ParseError`/:class:`RangeError` naming the bad field.
    """
    try:
        return _record_from_dict(data)
    except _Violation as v:
        raise v.kind(str(v), field=v.field, case_id=_case_id(data)) from None


def _case_id(data):
    return data.get("case_id") if isinstance(data, dict) else None


def _record_from_dict(data) -> CaseRecord:
    if not isinstance(data, dict):
        raise _Violation(ParseError, "record must be a JSON object")
    unknown = sorted(set(data) - set(RECORD_FIELDS))
    if unknown:
        raise _Violation(ParseError, f"unknown field(s): {', '.join(unknown)}", unknown[0])
    for name in _REQUIRED:
        if name not in data:
            raise _Violation(ParseError, f"missing required field {name!r}", name)
    case_id, domain = data["case_id"], data["domain"]
    if not isinstance(case_id, str) or not case_id:
        raise _Violation(ParseError, "case_id must be a nonempty string", "case_id")
    if not isinstance(domain, str):
        raise _Violation(ParseError, "domain must be a string", "domain")
    p_elicited = _probability(data["p_elicited"], "p_elicited")
    p_true = data.get("p_true")
    if p_true is not None:
        p_true = _probability(p_true, "p_true")
    theta = data.get("theta")
    if theta is not None:
        if isinstance(theta, bool) or theta not in (0, 1):
            raise _Violation(RangeError, f"theta must be 0, 1 or null, got {theta!r}", "theta")
        theta = int(theta)
    raw_actions = data["actions"]
    if not isinstance(raw_actions, dict):
        raise _Violation(ParseError, "actions must be an object", "actions")
    actions = {}
    for key, label in raw_actions.items():
        try:
            regime = Regime.parse(key)
        except ParameterError as exc:
            raise _Violation(ParseError, f"actions: {exc}", f"actions.{key}") from None
        if label not in ("yes", "no", "defer"):
            raise _Violation(
                ParseError, f"actions.{key} must be 'yes', 'no' or 'defer', got {label!r}",
                f"actions.{key}",
            )
        actions[regime] = Action.from_label(label)
    reps = data.get("belief_replicates")
    if reps is not None:
        if not isinstance(reps, list):
            raise _Violation(ParseError, "belief_replicates must be a list", "belief_replicates")
        reps = tuple(_probability(p, "belief_replicates") for p in reps)
    return CaseRecord(
        case_id=case_id,
        domain=domain,
        p_elicited=p_elicited,
        p_true=p_true,
        theta=theta,
        actions=actions,
        self_report_global=_cost_triple(data.get("self_report_global"), "self_report_global"),
        self_report_case=_cost_triple(data.get("self_report_case"), "self_report_case"),
        belief_replicates=reps,
    )


def _triple(cost):
    return None if cost is None else [cost.c_fp, cost.c_fn, cost.c_defer]


def record_to_dict(record: CaseRecord) -> dict:
    return {
        "case_id": record.case_id,
        "domain": record.domain,
        "p_elicited": record.p_elicited,
        "p_true": record.p_true,
        "theta": record.theta,
        "actions": {k.key: v.label for k, v in record.actions.items()},
        "self_report_global": _triple(record.self_report_global),
        "self_report_case": _triple(record.self_report_case),
        "belief_replicates": None if record.belief_replicates is None else list(record.belief_replicates),
    }


def write_dataset(path, records) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), separators=(", ", ": ")))
            fh.write("\n")
    return path


def _catalog_entry(row, where):
    try:
        bench_id = str(row["id"]).strip()
        values = [float(row[k]) for k in ("c_fp", "c_fn", "c_defer")]
    except KeyError as exc:
        raise ParseError(f"catalog {where}: missing column {exc.args[0]}") from None
    except (TypeError, ValueError):
        raise ParseError(f"catalog {where}: non-numeric cost") from None
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise RangeError(f"catalog {where}: costs must be finite and nonnegative")
    return BenchmarkCost(bench_id, CostVector(*values))


def load_catalog(path) -> List[BenchmarkCost]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"catalog {path}: invalid JSON: {exc}") from None
        if not isinstance(rows, list):
            raise ParseError(f"catalog {path}: expected a JSON list")
        entries = [_catalog_entry(row, f"entry {i}") for i, row in enumerate(rows)]
    else:
        reader = csv.DictReader(text.splitlines())
        entries = [_catalog_entry(row, f"line {i}") for i, row in enumerate(reader, 2)]
    seen = set()
    for entry in entries:
        if entry.id in seen:
            raise IntegrityError(f"catalog {path}: duplicate benchmark id {entry.id!r}")
        seen.add(entry.id)
    return entries


def write_catalog(path, catalog) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "c_fp", "c_fn", "c_defer"])
        for b in catalog:
            writer.writerow([b.id, repr(b.cost.c_fp), repr(b.cost.c_fn), repr(b.cost.c_defer)])
    return path


def load_dataset(path, catalog=None) -> DatasetFile:
    """Parse and validate a JSON Lines dataset.

    ``catalog`` is a path, a list of :class:`BenchmarkCost`, or ``None`` for
    the default grid. Every violation is collected; the raised error is of
    the first violation's type and lists all of them in ``violations``.
    """
    path = Path(path)
    if catalog is None:
        benchmarks = default_catalog()
    elif isinstance(catalog, (str, Path)):
        benchmarks = load_catalog(catalog)
    else:
        benchmarks = list(catalog)
    known = {b.id for b in benchmarks}

    records, violations = [], []
    first_line = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                violations.append((ParseError, lineno, None, None, f"invalid JSON: {exc.msg}"))
                continue
            try:
                record = _record_from_dict(data)
            except _Violation as v:
                violations.append((v.kind, lineno, _case_id(data), v.field, str(v)))
                continue
            if record.case_id in first_line:
                violations.append((
                    IntegrityError, lineno, record.case_id, "case_id",
                    f"duplicate case_id (first seen on line {first_line[record.case_id]})",
                ))
                continue
            first_line[record.case_id] = lineno
            for regime in record.actions:
                if regime.tag == "cost" and regime.benchmark_id not in known:
                    violations.append((
                        IntegrityError, lineno, record.case_id, f"actions.{regime.key}",
                        f"benchmark {regime.benchmark_id!r} is not in the catalog",
                    ))
            records.append(record)

    if violations:
        kind, lineno, case_id, fld, _ = violations[0]
        lines = [
            f"line {ln}" + (f" (case {cid!r})" if cid else "") + f": {msg}"
            for _, ln, cid, _, msg in violations
        ]
        raise kind(
            f"{path}: {len(violations)} violation(s)\n  " + "\n  ".join(lines),
            line=lineno, case_id=case_id, field=fld,
            violations=[
                {"error": k.__name__, "line": ln, "case_id": cid, "field": f, "message": m}
                for k, ln, cid, f, m in violations
            ],
        )
    return DatasetFile(path=path, records=records, benchmark_catalog=benchmarks)
