"""End-to-end analysis of a dataset into report tables.

:func:`run_analysis` fits a cost vector per (domain, regime) cell and
derives every diagnostic table from those fits; :func:`emit_report` writes
the resulting :class:`ReportBundle` as JSON, CSV tables or figure data.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .core import BASELINE, TRUE_P, CostVector, Regime, decision_arrays
from .estimator import FitOptions, bootstrap_ratios, fit_mle
from .exceptions import (
    IncompleteRecordError,
    ParameterError,
    RevealedLossError,
    UndefinedDenominatorError,
    UndefinedProgressError,
)
from .metrics import (
    SteeringClass,
    classify_steering,
    counterfactual_reduction,
    ilfc,
    pearson_r,
    realized_reduction,
    self_report_ilfc,
    steering_progress,
)
from .simulator import SensitivitySpec, noise_sensitivity

__all__ = ["AnalysisConfig", "ReportBundle", "emit_report", "run_analysis"]

ALL_TABLES = ("fits", "ilfc", "steering", "counterfactual", "sensitivity")
POOLED = "all"


@dataclass(frozen=True)
class AnalysisConfig:
    """What :func:`run_analysis` computes.

    ``regimes`` and ``benchmarks`` default to everything present in the
    dataset. ``belief_sources`` maps regime keys to ``"elicited"`` or
    ``"true"``; unlisted regimes use the true posterior for ``true_p`` and
    elicited beliefs otherwise.
    """

    regimes: Optional[Sequence[str]] = None
    benchmarks: Optional[Sequence[str]] = None
    belief_sources: Dict[str, str] = field(default_factory=dict)
    n_resamples: int = 1000
    seed: int = 0
    by_domain: bool = True
    n_jobs: Optional[int] = None
    fit_options: FitOptions = field(default_factory=FitOptions)
    sensitivity: Optional[SensitivitySpec] = field(default_factory=SensitivitySpec)
    sensitivity_regime: str = "baseline"
    tables: Sequence[str] = ALL_TABLES

    def __post_init__(self):
        unknown = set(self.tables) - set(ALL_TABLES)
        if unknown:
            raise ParameterError(f"unknown table(s): {', '.join(sorted(unknown))}")
        for key, source in self.belief_sources.items():
            if source not in ("elicited", "true"):
                raise ParameterError(f"belief source for {key!r} must be 'elicited' or 'true'")
        if int(self.n_resamples) < 0:
            raise ParameterError("n_resamples must be nonnegative")

    def belief_source(self, regime: Regime) -> str:
        if regime.key in self.belief_sources:
            return self.belief_sources[regime.key]
        return "true" if regime == TRUE_P else "elicited"

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if "fit_options" in data:
            opts = dict(data["fit_options"])
            if "initial_cost" in opts:
                opts["initial_cost"] = CostVector.from_array(opts["initial_cost"])
            data["fit_options"] = FitOptions(**opts)
        if "sensitivity" in data and data["sensitivity"] is not None:
            sens = dict(data["sensitivity"])
            if "noise_sds" in sens:
                sens["noise_sds"] = tuple(sens["noise_sds"])
            data["sensitivity"] = SensitivitySpec(**sens)
        for key in ("regimes", "benchmarks", "tables"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class ReportBundle:
    """All report tables. Every row carries its sample size ``n``."""

    fitted_ratios: List[dict] = field(default_factory=list)
    ilfc_table: List[dict] = field(default_factory=list)
    steering_table: List[dict] = field(default_factory=list)
    counterfactual_table: List[dict] = field(default_factory=list)
    correlations: List[dict] = field(default_factory=list)
    sensitivity_table: List[dict] = field(default_factory=list)
    exclusions: Dict[str, int] = field(default_factory=dict)

    def steering_counts(self) -> List[dict]:
        """Class counts per (domain, ratio) plus pooled rows per ratio."""
        groups: Dict[tuple, dict] = {}
        for row in self.steering_table:
            for key in ((row["domain"], row["ratio"]), (POOLED, row["ratio"])):
                if key[0] == POOLED and row["domain"] == POOLED:
                    continue
                g = groups.setdefault(key, {c.value: 0 for c in SteeringClass} | {"n_excluded": 0})
                if row["steering_class"] is None:
                    g["n_excluded"] += 1
                else:
                    g[row["steering_class"]] += 1
        out = []
        for (domain, ratio), counts in sorted(groups.items()):
            n = sum(counts[c.value] for c in SteeringClass)
            out.append({"domain": domain, "ratio": ratio, "n": n, **counts})
        return out

    def to_dict(self) -> dict:
        return {
            "fitted_ratios": self.fitted_ratios,
            "ilfc": self.ilfc_table,
            "steering": self.steering_table,
            "steering_counts": self.steering_counts(),
            "counterfactual": self.counterfactual_table,
            "correlations": self.correlations,
            "sensitivity": self.sensitivity_table,
            "exclusions": dict(sorted(self.exclusions.items())),
        }

    def to_json(self) -> str:
        return json.dumps(round_floats(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _sig6(x):
    return float(f"{x:.6g}")


def round_floats(obj):
    if isinstance(obj, float):
        return _sig6(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


class _Analysis:
    def __init__(self, dataset, config: AnalysisConfig):
        self.dataset = dataset
        self.config = config
        self.exclusions: Dict[str, int] = {}
        records = list(dataset.records)
        if config.by_domain:
            self.cells = {d: [r for r in records if r.domain == d] for d in sorted({r.domain for r in records})}
        else:
            self.cells = {POOLED: records}
        present = sorted({k for r in records for k in r.actions})
        if config.regimes is None:
            self.regimes = present
        else:
            self.regimes = [Regime.parse(k) for k in config.regimes]
        if config.benchmarks is None:
            self.benchmark_ids = sorted({r.benchmark_id for r in self.regimes if r.tag == "cost"})
        else:
            self.benchmark_ids = list(config.benchmarks)
        self.fits = {}

    def _exclude(self, key, count=1):
        self.exclusions[key] = self.exclusions.get(key, 0) + count

    def _cases_with(self, cases, *regimes):
        return [c for c in cases if all(r in c.actions for r in regimes)]

    def fit(self, domain, regime):
        key = (domain, regime)
        if key not in self.fits:
            cases = self._cases_with(self.cells[domain], regime)
            if not cases:
                self.fits[key] = None
            else:
                try:
                    p, a, _ = decision_arrays(cases, regime, self.config.belief_source(regime))
                    self.fits[key] = (fit_mle(p, a, self.config.fit_options), p, a)
                except RevealedLossError as exc:
                    exc.args = (f"[domain={domain}, regime={regime.key}] {exc.args[0]}",) + exc.args[1:]
                    raise
        entry = self.fits[key]
        return None if entry is None else entry[0]

    def fitted_ratios(self):
        rows = []
        for domain in self.cells:
            for regime in self.regimes:
                result = self.fit(domain, regime)
                if result is None:
                    continue
                _, p, a = self.fits[(domain, regime)]
                row = {
                    "domain": domain,
                    "regime": regime.key,
                    "belief_source": self.config.belief_source(regime),
                    "n": int(p.size),
                    **result.to_dict(),
                }
                row["boundary_flags"] = [f or "" for f in result.boundary_flags]
                if result.degenerate:
                    self._exclude("degenerate_fits")
                if self.config.n_resamples:
                    fn_ci, d_ci = bootstrap_ratios(
                        p, a, self.config.fit_options, self.config.n_resamples,
                        self.config.seed, self.config.n_jobs, point=result,
                    )
                    row.update({
                        "fn_fp_lower_95": fn_ci.lower_95,
                        "fn_fp_upper_95": fn_ci.upper_95,
                        "defer_fp_lower_95": d_ci.lower_95,
                        "defer_fp_upper_95": d_ci.upper_95,
                        "n_resamples": fn_ci.n_resamples,
                        "n_boundary_resamples": fn_ci.n_boundary,
                    })
                rows.append(row)
        return rows

    def ilfc_table(self):
        rows = []
        pooled: Dict[tuple, List[float]] = {}

        def add(domain, column, source, cases, value):
            rows.append({"domain": domain, "column": column, "belief_source": source,
                         "n": len(cases), "ilfc": value})
            acc = pooled.setdefault((column, source), [0.0, 0])
            acc[0] += value * len(cases) / 100.0
            acc[1] += len(cases)

        for domain, records in self.cells.items():
            for regime in self.regimes:
                result = self.fit(domain, regime)
                if result is None:
                    continue
                cases = self._cases_with(records, regime)
                source = self.config.belief_source(regime)
                add(domain, regime.key, source, cases, ilfc(cases, regime, source, result.cost))
            base_cases = self._cases_with(records, BASELINE)
            for kind in ("global", "case"):
                attr = f"self_report_{kind}"
                if not base_cases:
                    continue
                if any(getattr(c, attr) is None for c in base_cases):
                    self._exclude(f"ilfc_{attr}_missing")
                    continue
                add(domain, attr, "elicited", base_cases, self_report_ilfc(base_cases, kind))
        if len(self.cells) > 1:
            for (column, source), (hits, n) in sorted(pooled.items()):
                rows.append({"domain": POOLED, "column": column, "belief_source": source,
                             "n": n, "ilfc": 100.0 * hits / n})
        return rows

    def steering_table(self):
        rows = []
        catalog = {b.id: b for b in self.dataset.benchmark_catalog}
        for domain in self.cells:
            base = self.fit(domain, BASELINE)
            if base is None:
                continue
            for bid in self.benchmark_ids:
                steered = self.fit(domain, Regime("cost", bid))
                if steered is None:
                    continue
                target = catalog[bid].cost
                n = len(self._cases_with(self.cells[domain], Regime("cost", bid)))
                for ratio in ("fn_fp", "defer_fp"):
                    row = {
                        "domain": domain, "benchmark_id": bid, "ratio": ratio, "n": n,
                        "baseline_ratio": getattr(base.cost, ratio),
                        "steered_ratio": getattr(steered.cost, ratio),
                        "true_ratio": getattr(target, ratio),
                        "progress": None, "steering_class": None, "excluded": None,
                    }
                    try:
                        progress = steering_progress(row["baseline_ratio"], row["steered_ratio"], row["true_ratio"])
                        row["progress"] = progress
                        row["steering_class"] = classify_steering(progress).value
                    except (UndefinedProgressError, ParameterError) as exc:
                        row["excluded"] = type(exc).__name__
                        self._exclude("steering_undefined_progress")
                    rows.append(row)
        return rows

    def counterfactual_table(self):
        rows = []
        catalog = {b.id: b for b in self.dataset.benchmark_catalog}
        for domain, records in self.cells.items():
            base = self.fit(domain, BASELINE)
            if base is None:
                continue
            # probability prompting is scored under every benchmark even when
            # no cost-function prompts were recorded
            for bid in self.benchmark_ids or sorted(catalog):
                bench = catalog[bid]
                cost_regime = Regime("cost", bid)
                steered = self.fit(domain, cost_regime) if cost_regime in self.regimes else None
                if steered is not None:
                    cases = self._cases_with(records, BASELINE, cost_regime)
                    p_e, a_base, theta = decision_arrays(cases, BASELINE, "elicited", require_theta=True)
                    _, a_cost, _ = decision_arrays(cases, cost_regime, "elicited")
                    rows.append(self._cf_row(
                        domain, bench, "cost", len(cases),
                        lambda: counterfactual_reduction(bench, base.cost, p_e, bench.cost, p_e, theta),
                        lambda: counterfactual_reduction(bench, base.cost, p_e, steered.cost, p_e, theta),
                        lambda: realized_reduction(bench, a_base, a_cost, theta),
                    ))
                prob_fit = self.fit(domain, TRUE_P) if TRUE_P in self.regimes else None
                if prob_fit is not None:
                    cases = self._cases_with(records, BASELINE, TRUE_P)
                    p_e, a_base, theta = decision_arrays(cases, BASELINE, "elicited", require_theta=True)
                    p_star, a_prob, _ = decision_arrays(cases, TRUE_P, "true")
                    rows.append(self._cf_row(
                        domain, bench, "prob", len(cases),
                        lambda: counterfactual_reduction(bench, base.cost, p_e, base.cost, p_star, theta),
                        lambda: counterfactual_reduction(bench, base.cost, p_e, prob_fit.cost, p_star, theta),
                        lambda: realized_reduction(bench, a_base, a_prob, theta),
                    ))
        return rows

    def _cf_row(self, domain, bench, kind, n, target, steered, realized):
        row = {"domain": domain, "benchmark_id": bench.id, "kind": kind, "n": n}
        for name, compute in (("target_prediction", target), ("steered_prediction", steered),
                              ("realized_effect", realized)):
            try:
                row[name] = compute()
            except UndefinedDenominatorError:
                row[name] = None
                self._exclude(f"counterfactual_{kind}_undefined_denominator")
        return row

    def correlations(self, cf_rows):
        out = []
        for kind in ("cost", "prob"):
            for prediction in ("target_prediction", "steered_prediction"):
                pairs = [(r[prediction], r["realized_effect"]) for r in cf_rows
                         if r["kind"] == kind and r[prediction] is not None and r["realized_effect"] is not None]
                row = {"kind": kind, "prediction": prediction, "n": len(pairs), "pearson_r": None}
                if len(pairs) >= 2:
                    x, y = zip(*pairs)
                    try:
                        row["pearson_r"] = pearson_r(x, y)
                    except RevealedLossError:
                        self._exclude("correlation_degenerate")
                out.append(row)
        return out

    def sensitivity_table(self):
        spec = self.config.sensitivity
        if spec is None:
            return []
        regime = Regime.parse(self.config.sensitivity_regime)
        rows = []
        for domain in self.cells:
            if self.fit(domain, regime) is None:
                continue
            _, p, a = self.fits[(domain, regime)]
            for row in noise_sensitivity(p, a, spec, self.config.fit_options, self.config.n_jobs):
                rows.append({"domain": domain, "regime": regime.key, "n": int(p.size), **row.to_dict()})
        return rows


def run_analysis(dataset, config: Optional[AnalysisConfig] = None) -> ReportBundle:
    """Fit every requested cell and compute the requested tables.

    The result depends only on the dataset contents and ``config``;
    ``config.n_jobs`` changes speed, never output.
    """
    config = config or AnalysisConfig()
    run = _Analysis(dataset, config)
    catalog_ids = {b.id for b in dataset.benchmark_catalog}
    missing = [b for b in run.benchmark_ids if b not in catalog_ids]
    if missing:
        raise ParameterError(f"benchmark(s) not in catalog: {', '.join(missing)}")
    bundle = ReportBundle()
    tables = set(config.tables)
    if "counterfactual" in tables:
        # realized losses need outcomes on every case that enters the comparison
        for case in dataset.records:
            if case.theta is None:
                raise IncompleteRecordError(
                    f"counterfactual table requested but case {case.case_id!r} has no theta",
                    case_id=case.case_id, field="theta",
                )
    if "fits" in tables:
        bundle.fitted_ratios = run.fitted_ratios()
    if "ilfc" in tables:
        bundle.ilfc_table = run.ilfc_table()
    if "steering" in tables:
        bundle.steering_table = run.steering_table()
    if "counterfactual" in tables:
        bundle.counterfactual_table = run.counterfactual_table()
        bundle.correlations = run.correlations(bundle.counterfactual_table)
    if "sensitivity" in tables:
        bundle.sensitivity_table = run.sensitivity_table()
    bundle.exclusions = run.exclusions
    return bundle


_CSV_TABLES = {
    "fitted_ratios": "fitted_ratios",
    "ilfc": "ilfc_table",
    "steering": "steering_table",
    "counterfactual": "counterfactual_table",
    "correlations": "correlations",
    "sensitivity": "sensitivity_table",
}


def _cell(value, full_precision=False):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value) if full_precision else f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return ";".join(_cell(v, full_precision) for v in value)
    return str(value)


def table_to_csv(rows: List[dict], full_precision=False, columns=None) -> str:
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c), full_precision) for c in columns])
    return buf.getvalue()


def figure_data(bundle: ReportBundle) -> Dict[str, List[dict]]:
    """``(x, y, group)`` points for the steering and counterfactual plots."""
    steering = [
        {"x": r["progress"], "y": r["true_ratio"], "group": f"{r['ratio']}|{r['domain']}|{r['benchmark_id']}"}
        for r in bundle.steering_table if r["progress"] is not None
    ]
    scatter = []
    for r in bundle.counterfactual_table:
        for prediction in ("target_prediction", "steered_prediction"):
            if r.get(prediction) is None or r.get("realized_effect") is None:
                continue
            scatter.append({
                "x": r[prediction], "y": r["realized_effect"],
                "group": f"{r['kind']}:{prediction}|{r['domain']}|{r['benchmark_id']}",
            })
    return {"steering_progress": steering, "counterfactual_scatter": scatter}


def emit_report(bundle: ReportBundle, fmt: str, output) -> List[Path]:
    """Write the bundle under directory ``output``; returns written paths.

    ``fmt`` is ``"json"`` (one structured file), ``"csv"`` (one delimited
    table per bundle table) or ``"figure"`` (full-precision plot points).
    """
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        path = out / "report.json"
        path.write_text(bundle.to_json(), encoding="utf-8")
        written.append(path)
    elif fmt == "csv":
        tables = {name: getattr(bundle, attr) for name, attr in _CSV_TABLES.items()}
        tables["steering_counts"] = bundle.steering_counts()
        for name, rows in tables.items():
            path = out / f"{name}.csv"
            path.write_text(table_to_csv(rows), encoding="utf-8")
            written.append(path)
    elif fmt == "figure":
        for name, points in figure_data(bundle).items():
            path = out / f"figure_{name}.csv"
            path.write_text(table_to_csv(points, full_precision=True, columns=["x", "y", "group"]), encoding="utf-8")
            written.append(path)
    else:
        raise ParameterError(f"unknown report format {fmt!r}; use json, csv or figure")
    return written
