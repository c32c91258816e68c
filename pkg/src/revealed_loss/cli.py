"""Command-line interface: ``revealed-loss <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .core import Action, CostVector
from .exceptions import ParameterError, RevealedLossError
from .io import load_dataset, write_catalog, write_dataset
from .parsing import parse_decision_lines, parse_probability_response, parse_self_report
from .report import AnalysisConfig, emit_report, round_floats, run_analysis, table_to_csv
from .simulator import (
    AgentSpec,
    BeliefDistribution,
    SensitivitySpec,
    StudySpec,
    simulate_dataset,
    simulate_study,
)


def _common(parser, needs_input=True):
    parser.add_argument("--input", required=needs_input, help="dataset file (JSON Lines)")
    parser.add_argument("--catalog", help="benchmark catalog (CSV or JSON); default grid if omitted")
    parser.add_argument("--config", help="analysis config (JSON)")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--resamples", type=int, help="bootstrap resamples")
    parser.add_argument("--output", help="output file or directory; stdout if omitted")
    parser.add_argument("--format", choices=("json", "csv", "figure"), default=None)
    parser.add_argument("--n-jobs", type=int, default=None, help="parallel workers")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="revealed-loss",
        description="Estimate the cost function implied by decisions under uncertainty.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("fit", "per-regime maximum-likelihood costs with bootstrap intervals"),
        ("consistency", "implied loss-function consistency (ILFC) table"),
        ("counterfactual", "predicted vs realized loss reductions per benchmark"),
        ("steering", "steering progress and classification per benchmark"),
        ("report", "full report bundle"),
    ):
        _common(sub.add_parser(name, help=help_text))

    sens = sub.add_parser("sensitivity", help="Gaussian belief-noise sweep")
    _common(sens)
    sens.add_argument("--sds", help="comma-separated noise standard deviations (must include 0)")
    sens.add_argument("--repetitions", type=int, default=None)
    sens.add_argument("--regime", default="baseline")

    sim = sub.add_parser("simulate", help="write a synthetic dataset")
    _common(sim, needs_input=False)
    sim.add_argument("--cost", default="1,4,0.5", help="c_fp,c_fn,c_defer")
    sim.add_argument("--beta", type=float, default=1.0)
    sim.add_argument("--n", type=int, default=1000, help="number of cases")
    sim.add_argument("--beliefs", default="uniform", help="uniform | beta:A,B | grid:P1,P2,...")
    sim.add_argument("--domain", default="synthetic")
    sim.add_argument("--method", choices=("softmax", "gumbel"), default="softmax")
    sim.add_argument("--study", action="store_true",
                     help="multi-regime study (all prompting regimes, self-reports, replicates)")

    parse = sub.add_parser("parse", help="parse a raw model response")
    parse.add_argument("--kind", required=True, choices=("probability", "decision", "self-report"))
    parse.add_argument("--input", help="file holding the response text; stdin if omitted")
    parse.add_argument("--output", help="write JSON here instead of stdout")
    return parser


def _load_config(args) -> AnalysisConfig:
    config = AnalysisConfig()
    if args.config:
        config = AnalysisConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.resamples is not None:
        updates["n_resamples"] = args.resamples
    if args.n_jobs is not None:
        updates["n_jobs"] = args.n_jobs
    return replace(config, **updates)


def _parse_beliefs(text):
    kind, _, rest = text.partition(":")
    if kind == "uniform":
        return BeliefDistribution.uniform()
    values = [float(v) for v in rest.split(",") if v.strip()]
    if kind == "beta" and len(values) == 2:
        return BeliefDistribution.beta(*values)
    if kind == "grid":
        return BeliefDistribution.fixed_grid(values)
    raise ParameterError(f"bad --beliefs value {text!r}")


def _write_text(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_tables(tables, args):
    """Print or write the named tables of a partial bundle."""
    fmt = args.format or "csv"
    if fmt == "json":
        payload = {name: rows for name, rows in tables.items()}
        _write_text(json.dumps(round_floats(payload), indent=2, sort_keys=True) + "\n", args.output)
        return
    if fmt == "figure":
        raise RevealedLossError("figure output is only available from the report subcommand")
    chunks = []
    for name, rows in tables.items():
        if len(tables) > 1:
            chunks.append(f"# {name}\n")
        chunks.append(table_to_csv(rows))
    _write_text("".join(chunks), args.output)


def _analysis(args, tables):
    dataset = load_dataset(args.input, args.catalog)
    config = replace(_load_config(args), tables=tables)
    return run_analysis(dataset, config)


def cmd_fit(args):
    bundle = _analysis(args, ("fits",))
    _emit_tables({"fitted_ratios": bundle.fitted_ratios}, args)


def cmd_consistency(args):
    bundle = _analysis(args, ("ilfc",))
    _emit_tables({"ilfc": bundle.ilfc_table}, args)


def cmd_counterfactual(args):
    bundle = _analysis(args, ("counterfactual",))
    _emit_tables({"counterfactual": bundle.counterfactual_table,
                  "correlations": bundle.correlations}, args)


def cmd_steering(args):
    bundle = _analysis(args, ("steering",))
    _emit_tables({"steering": bundle.steering_table,
                  "steering_counts": bundle.steering_counts()}, args)


def cmd_sensitivity(args):
    dataset = load_dataset(args.input, args.catalog)
    config = _load_config(args)
    spec = config.sensitivity or SensitivitySpec()
    updates = {}
    if args.sds:
        updates["noise_sds"] = tuple(float(s) for s in args.sds.split(","))
    if args.repetitions is not None:
        updates["n_repetitions"] = args.repetitions
    if args.seed is not None:
        updates["seed"] = args.seed
    spec = SensitivitySpec(**{**spec.__dict__, **updates})
    config = replace(config, sensitivity=spec, sensitivity_regime=args.regime, tables=("sensitivity",))
    bundle = run_analysis(dataset, config)
    _emit_tables({"sensitivity": bundle.sensitivity_table}, args)


def cmd_report(args):
    bundle = _analysis(args, _load_config(args).tables)
    fmt = args.format or "json"
    if args.output:
        for path in emit_report(bundle, fmt, args.output):
            print(path)
    elif fmt == "json":
        sys.stdout.write(bundle.to_json())
    else:
        raise RevealedLossError("--output directory is required for csv and figure formats")


def cmd_simulate(args):
    if not args.output:
        raise RevealedLossError("simulate needs --output for the dataset file")
    seed = 0 if args.seed is None else args.seed
    if args.study:
        records, catalog = simulate_study(StudySpec(seed=seed, n_cases_per_domain=args.n))
        write_dataset(args.output, records)
        catalog_path = args.catalog or str(Path(args.output).with_suffix(".catalog.csv"))
        write_catalog(catalog_path, catalog)
        print(json.dumps({"dataset": args.output, "catalog": catalog_path, "n_records": len(records)}))
        return
    try:
        cost = CostVector(*(float(v) for v in args.cost.split(",")))
    except (TypeError, ValueError):
        raise ParameterError(f"--cost must be three comma-separated numbers, got {args.cost!r}") from None
    spec = AgentSpec(cost=cost, beta=args.beta, beliefs=_parse_beliefs(args.beliefs),
                     n_cases=args.n, seed=seed, domain=args.domain, method=args.method)
    records = simulate_dataset(spec)
    write_dataset(args.output, records)
    print(json.dumps({"dataset": args.output, "n_records": len(records)}))


def cmd_parse(args):
    text = Path(args.input).read_text(encoding="utf-8") if args.input else sys.stdin.read()
    if args.kind == "probability":
        out = {"p_elicited": parse_probability_response(text)}
    elif args.kind == "decision":
        can_decide, forced = parse_decision_lines(text)
        out = {"action": (forced if can_decide else Action.DEFER).label,
               "can_decide": can_decide, "forced_choice": forced.label}
    else:
        c = parse_self_report(text)
        out = {"self_report": [c.c_fp, c.c_fn, c.c_defer]}
    _write_text(json.dumps(out, sort_keys=True) + "\n", args.output)


COMMANDS = {
    "fit": cmd_fit,
    "consistency": cmd_consistency,
    "counterfactual": cmd_counterfactual,
    "steering": cmd_steering,
    "sensitivity": cmd_sensitivity,
    "report": cmd_report,
    "simulate": cmd_simulate,
    "parse": cmd_parse,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except RevealedLossError as exc:
        sys.stderr.write(json.dumps(exc.to_record(), sort_keys=True) + "\n")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
