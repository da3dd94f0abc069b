"""Command-line front end.

    hamflow <validate|compile|solve|verify|report> --instance PATH
            [--costs PATH] [--alpha A] [--method exact|anneal|bruteforce]
            [--samples N] [--seed S] [--out DIR] [--format csv|json]

`--instance` accepts either a JSON instance document or the literal token
`case-study`, which builds the Earth-Moon-Mars benchmark from an arc-cost
map (`--costs`, defaulting to the committed fixture).  `verify` and `report`
read the candidate solution from `--assignment` (a file written by `solve`).

Exit codes: 0 success, 1 infeasible or invalid input, 2 usage error.
Diagnostics go to stderr; data goes to files or stdout.  `HAMFLOW_SEED` is
the fallback for `--seed`; the flag wins.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import expansion, hamiltonian, solvers
from .expansion import Assignment, Model
from .instance import (
    Instance,
    InstanceError,
    build_case_study,
    default_case_study_costs,
    load_cost_map,
    parse_instance,
    validate_instance,
)

DEVICE_METADATA = {
    "quantum_fluctuation_coefficient": "1/sqrt(7)",
    "relaxation_schedule": "2",
}


class CliError(Exception):
    """Invalid or infeasible input; maps to exit code 1."""


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except CliError as exc:
        print(f"hamflow: {exc}", file=sys.stderr)
        return 1
    except (InstanceError, expansion.ModelError, expansion.TableReconstructionError,
            hamiltonian.CompileError, hamiltonian.PolynomialFormatError) as exc:
        print(f"hamflow: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamflow",
        description="Model space-logistics commodity flows, compile them to "
                    "penalty Hamiltonians, and solve them classically.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "compile", "solve", "verify", "report"):
        p = sub.add_parser(name)
        p.add_argument("--instance", required=True,
                       help="instance JSON path, or 'case-study' for the built-in benchmark")
        p.add_argument("--costs", default=None,
                       help="arc-cost map JSON (case-study instance only)")
        p.add_argument("--alpha", type=float, default=None,
                       help="penalty multiplier; default separates feasible from infeasible")
        p.add_argument("--method", choices=("exact", "anneal", "bruteforce"), default="exact")
        p.add_argument("--samples", type=int, default=40,
                       help="annealer restart count")
        p.add_argument("--seed", type=int, default=None,
                       help="annealer seed; falls back to HAMFLOW_SEED, then 0")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="stdout summary format")
        p.add_argument("--assignment", default=None,
                       help="solution JSON (verify/report)")
        p.add_argument("--no-prune", action="store_true",
                       help="keep unreachable variables in the model")
    return parser


def _dispatch(args) -> int:
    handlers = {
        "validate": _cmd_validate,
        "compile": _cmd_compile,
        "solve": _cmd_solve,
        "verify": _cmd_verify,
        "report": _cmd_report,
    }
    return handlers[args.command](args)


def _seed_of(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HAMFLOW_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise CliError(f"HAMFLOW_SEED={env!r} is not an integer") from exc
    return 0


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise CliError(f"file not found: {path}") from exc
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _load_instance(args) -> Instance:
    if args.instance == "case-study":
        if args.costs is None:
            costs = default_case_study_costs()
        else:
            costs = load_cost_map(_read_text(args.costs))
        return build_case_study(costs)
    if args.costs is not None:
        raise CliError("--costs applies only to --instance case-study")
    return parse_instance(_read_text(args.instance))


def _load_model(args) -> Model:
    model = expansion.expand_model(_load_instance(args))
    if not args.no_prune:
        model = expansion.prune_model(model)
    return model


def _load_assignment(args, model: Model) -> Assignment:
    if args.assignment is None:
        raise CliError(f"{args.command} requires --assignment")
    doc = json.loads(_read_text(args.assignment))
    values = doc["values"] if isinstance(doc, dict) else doc
    if len(values) != len(model.variables):
        raise CliError(f"assignment has {len(values)} values, the model has "
                       f"{len(model.variables)} variables (check --no-prune)")
    return Assignment(values=tuple(int(v) for v in values))


def _cmd_validate(args) -> int:
    inst = _load_instance(args)
    report = validate_instance(inst)
    if args.format == "json":
        print(json.dumps({"findings": [{"kind": f.kind, "message": f.message}
                                       for f in report.findings]}, indent=2))
    else:
        print(f"{len(report.findings)} findings")
        for f in report.findings:
            print(f"{f.kind}: {f.message}")
    return 0 if report.ok else 1


def _cmd_compile(args) -> int:
    model = _load_model(args)
    h = hamiltonian.compile_hamiltonian(model, alpha=args.alpha)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / "hamiltonian.txt"
    with dest.open("w", encoding="utf-8", newline="\n") as fh:
        hamiltonian.export_hamiltonian(h, fh, metadata=DEVICE_METADATA)
    summary = {
        "variables": h.num_variables,
        "decision_variables": h.num_decision_variables(),
        "slack_variables": h.num_slack_variables(),
        "levels": h.total_levels(),
        "alpha": h.alpha,
        "dynamic_range_db": (hamiltonian.dynamic_range_db(h)
                             if h.linear or h.quadratic else None),
        "file": str(dest),
    }
    _print_summary(summary, args.format)
    return 0


def _cmd_solve(args) -> int:
    model = _load_model(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _seed_of(args)

    if args.method == "anneal":
        if args.samples < 1:
            raise CliError("--samples must be >= 1")
        h = hamiltonian.compile_hamiltonian(model, alpha=args.alpha)
        params = solvers.AnnealParams(restarts=args.samples)
        sset = solvers.anneal_sample(h, model, params, seed=seed)
        (out / "samples.csv").write_text(sset.dump_csv(), encoding="utf-8")
        with (out / "histogram.csv").open("w", encoding="utf-8", newline="\n") as fh:
            emit_histogram(sset, fh)
        best = sset.best_feasible()
        if best is None:
            print("no feasible sample", file=sys.stderr)
            _print_summary({"method": "anneal", "seed": seed, "feasible": False,
                            "best_energy": sset.best().energy}, args.format)
            return 1
        _write_solution(out, model, best.assignment, "anneal", best.objective)
        render_reports(model, best.assignment, out)
        _print_summary({"method": "anneal", "seed": seed, "feasible": True,
                        "objective": best.objective, "best_energy": best.energy,
                        "feasible_samples": sum(1 for s in sset.samples if s.feasible)},
                       args.format)
        return 0

    if args.method == "exact":
        result = solvers.solve_exact(model)
    else:
        result = solvers.brute_force_oracle(model)
    if result.sample is None:
        raise CliError(f"model is {result.status}: no feasible assignment exists"
                       if result.status == "infeasible"
                       else "time limit expired without an incumbent")
    _write_solution(out, model, result.sample.assignment, args.method,
                    result.sample.objective)
    render_reports(model, result.sample.assignment, out)
    _print_summary({"method": args.method, "objective": result.sample.objective,
                    "certified": result.certified, "nodes": result.nodes},
                   args.format)
    return 0


def _cmd_verify(args) -> int:
    model = _load_model(args)
    a = _load_assignment(args, model)
    report = expansion.verify_assignment(model, a)
    summary = {
        "feasible": report.feasible,
        "objective": expansion.evaluate_objective(model, a),
        "nonzero_residuals": sum(1 for r in report.residuals if r != 0),
        "bound_violations": len(report.bound_findings),
    }
    if report.worst is not None:
        summary["worst_constraint"] = expansion.tag_str(report.worst[0])
        summary["worst_residual"] = report.worst[1]
    _print_summary(summary, args.format)
    return 0 if report.feasible and not report.bound_findings else 1


def _cmd_report(args) -> int:
    model = _load_model(args)
    a = _load_assignment(args, model)
    report = expansion.verify_assignment(model, a)
    if not report.feasible:
        worst = expansion.tag_str(report.worst[0]) if report.worst else "?"
        raise CliError(f"assignment is infeasible (worst residual at {worst}); "
                       "refusing to render reports")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    render_reports(model, a, out)
    _print_summary({"out": str(out),
                    "files": ["vehicles.csv", "cargo.csv", "inventory.csv"]}, args.format)
    return 0


def _write_solution(out: Path, model: Model, a: Assignment, method: str,
                    objective: float) -> None:
    doc = {
        "method": method,
        "objective": objective,
        "values": list(a.values),
        "variables": [v.name() for v in model.variables],
    }
    (out / "solution.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _print_summary(summary: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(summary, indent=2))
    else:
        for key, value in summary.items():
            print(f"{key},{value}")


# --- report tables -------------------------------------------------------------

REPORT_NOTE = "# time columns are departure steps; arrivals land at t + travel_time"


def render_reports(model: Model, a: Assignment, out: Path) -> list[Path]:
    """Write vehicles.csv, cargo.csv, and inventory.csv for an assignment.

    vehicles: vehicle count per (arc, departure t).  cargo: total mass per
    (arc, departure t).  inventory: on-hand mass per (depot, commodity, t)
    with delivered demand retained; a unit is on hand from the step it
    arrives (or is supplied) through the step it departs, inclusive.
    """
    inst = model.instance
    T = inst.horizon
    out = Path(out)
    flow_idx = model.flow_index()
    vehicle_idx = model.vehicle_index()

    def flow(pair, cid, t) -> int:
        i = flow_idx.get((pair, cid, t))
        return a.values[i] if i is not None else 0

    def vehicles(pair, t) -> int:
        i = vehicle_idx.get((pair, t))
        return a.values[i] if i is not None else 0

    header = "arc," + ",".join(str(t) for t in range(1, T + 1))
    vehicle_lines = [REPORT_NOTE, header]
    cargo_lines = [REPORT_NOTE, header]
    for arc in inst.arcs:
        counts = [vehicles(arc.pair, t) for t in range(1, T + 1)]
        masses = [int(sum(flow(arc.pair, c.id, t) * c.load for c in inst.commodities))
                  for t in range(1, T + 1)]
        vehicle_lines.append(arc.key() + "," + ",".join(str(v) for v in counts))
        cargo_lines.append(arc.key() + "," + ",".join(str(m) for m in masses))

    inventory_lines = [REPORT_NOTE, "depot,commodity," + ",".join(str(t) for t in range(1, T + 1))]
    for d in inst.depots:
        for c in inst.commodities:
            on_hand = []
            cumulative = 0
            departed_before = 0
            for t in range(1, T + 1):
                arrived = sum(flow(arc.pair, c.id, t - arc.travel_time) * c.load
                              for arc in inst.in_arcs(d.id))
                supplied = max(inst.schedule_amount(d.id, c.id, t), 0)
                cumulative += arrived + supplied
                on_hand.append(int(cumulative - departed_before))
                departed_before += sum(flow(arc.pair, c.id, t) * c.load
                                       for arc in inst.out_arcs(d.id))
            inventory_lines.append(f"{d.id},{c.id}," + ",".join(str(v) for v in on_hand))

    paths = []
    for name, lines in (("vehicles.csv", vehicle_lines), ("cargo.csv", cargo_lines),
                        ("inventory.csv", inventory_lines)):
        path = out / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def emit_histogram(sset: solvers.SampleSet, dest) -> None:
    """20 fixed-width energy bins plus a summary comment; byte-deterministic
    for a given SampleSet (wall-clock statistics are deliberately omitted)."""
    stats = solvers.summarize_samples(sset)
    dest.write("bin_lower,bin_upper,count\n")
    for lo, hi, count in stats.bins:
        dest.write(f"{lo:.17g},{hi:.17g},{count}\n")
    dest.write(f"# best={stats.best_energy:.17g} median={stats.median_energy:.17g} "
               f"worst={stats.worst_energy:.17g} "
               f"feasible_fraction={stats.feasible_fraction:.17g}\n")


if __name__ == "__main__":
    raise SystemExit(main())
