"""Command line entry point: generate, validate, solve, scenarios, sweep, report, dump-model.

Exit codes: 0 success, 1 input error, 2 solver limit reached without meeting
the requested gap.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .domain import (SyntheticSpec, generate_synthetic, read_instance, resolve_instance,
                     resolve_path, validate, write_instance)
from .errors import InstanceError, ReportError, RngCcsError
from .milp import build_model, write_lp
from .policy import SCENARIO_LABELS
from .report import (bars_svg, emit_reports, line_chart_svg, load_solution, provenance,
                     save_solution, write_text)
from .scenario import SWEEP_PARAMETERS, SweepSpec, run_scenario, run_scenarios, run_sweep, \
    write_metrics_csv
from .solver import SolverConfig

log = logging.getLogger("rngccs")

EXIT_OK, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2
LIMIT_STATUSES = ("node_limit", "time_limit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _solver_args(p):
    p.add_argument("--instance", default="demo", help="bundle directory or .zip, or 'demo'")
    p.add_argument("--gap", type=float, default=0.10, help="relative optimality gap (default 0.10)")
    p.add_argument("--time-limit", type=float, default=600.0, help="seconds per solve")
    p.add_argument("--node-limit", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0, help="branching tie-break seed")
    p.add_argument("--branching", choices=("most_fractional", "pseudo_cost"),
                   default="most_fractional")
    p.add_argument("--node-selection", choices=("best_bound", "depth_first_dive"),
                   default="best_bound")
    p.add_argument("--strict-mass-balance", action="store_true",
                   help="ship every captured tonne of CO2 (no venting)")
    p.add_argument("--outdir", default="out")


def _table_args(p):
    p.add_argument("--workers", type=int, default=1, help="solve cells in parallel processes")
    p.add_argument("--no-timing", action="store_true",
                   help="leave wall_seconds blank so reruns are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rngccs", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic instance bundle")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sources", type=int, default=SyntheticSpec.n_sources)
    g.add_argument("--facilities", type=int, default=SyntheticSpec.n_facilities)
    g.add_argument("--sinks", type=int, default=SyntheticSpec.n_sinks)
    g.add_argument("--clusters", type=int, default=SyntheticSpec.urban_cluster_count)
    g.add_argument("--supply-scale", type=float, default=1.0)
    g.add_argument("--name", default="")
    g.add_argument("--out", required=True, help="bundle directory or .zip path")

    v = sub.add_parser("validate", help="check an instance bundle and list every violation")
    v.add_argument("--instance", default="demo")

    s = sub.add_parser("solve", help="solve one policy scenario and write reports")
    _solver_args(s)
    s.add_argument("--scenario", default="baseline")
    s.add_argument("--dump-model", action="store_true", help="also write model.lp")

    sc = sub.add_parser("scenarios", help="solve the five builtin policy scenarios")
    _solver_args(sc)
    _table_args(sc)

    sw = sub.add_parser("sweep", help="one-at-a-time sensitivity sweep")
    _solver_args(sw)
    sw.add_argument("--scenario", default="baseline")
    sw.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    sw.add_argument("--values", required=True, help="comma-separated, nondecreasing")
    _table_args(sw)

    r = sub.add_parser("report", help="rebuild reports from a saved solution.json")
    r.add_argument("--instance", default="demo")
    r.add_argument("--solution", required=True)
    r.add_argument("--scenario", default=None)
    r.add_argument("--strict-mass-balance", action="store_true")
    r.add_argument("--outdir", default="out")

    d = sub.add_parser("dump-model", help="write the MILP in CPLEX LP format")
    d.add_argument("--instance", default="demo")
    d.add_argument("--scenario", default="baseline")
    d.add_argument("--strict-mass-balance", action="store_true")
    d.add_argument("--out", default="-", help="file path, or - for stdout")
    return ap


def _config(args) -> SolverConfig:
    return SolverConfig(gap_tolerance=args.gap, time_limit=args.time_limit,
                        node_limit=args.node_limit, seed=args.seed, branching=args.branching,
                        node_selection=args.node_selection)


def _scenario(instance, name):
    try:
        return instance.scenario(name)
    except KeyError:
        raise InstanceError(f"unknown scenario {name!r}; available: "
                            f"{', '.join(SCENARIO_LABELS)}") from None


def _limit_hit(sol, cfg: SolverConfig) -> bool:
    return sol.summary is not None and sol.summary.status in LIMIT_STATUSES \
        and sol.gap > cfg.gap_tolerance


def cmd_generate(args) -> int:
    spec = SyntheticSpec(n_sources=args.sources, n_facilities=args.facilities, n_sinks=args.sinks,
                         urban_cluster_count=args.clusters, supply_scale=args.supply_scale)
    inst = generate_synthetic(args.seed, spec, name=args.name or f"synthetic-{args.seed}")
    path = write_instance(inst, args.out)
    print(f"wrote {path} ({len(inst.sources)} sources, {len(inst.facilities)} facilities, "
          f"{len(inst.sinks)} sinks)")
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = read_instance(resolve_path(args.instance))
    problems = validate(inst)
    for v in problems:
        print(v)
    if problems:
        print(f"{len(problems)} violation(s)", file=sys.stderr)
        return EXIT_INPUT
    print(f"ok: {len(inst.sources)} sources, {len(inst.facilities)} facilities, "
          f"{len(inst.sinks)} sinks")
    return EXIT_OK


def _print_solution(sol):
    led = sol.breakdown
    groups = led.group_costs()
    print(f"scenario={sol.scenario} status={sol.summary.status} objective={sol.objective:.2f} "
          f"bound={sol.bound:.2f} gap={sol.gap:.4%}")
    print(f"  RNG {sol.total_ch4 / 1e6:.4f} PJ/yr, CO2 sequestered {sol.total_sequestered:.1f} t/yr, "
          f"facilities {sum(sol.facility_active.values())}, sinks {sum(sol.sink_active.values())}")
    print(f"  revenue {led.total_revenue:.2f}  cost {led.total_cost:.2f}  "
          + "  ".join(f"{g} {v:.2f}" for g, v in sorted(groups.items())))


def cmd_solve(args) -> int:
    inst = resolve_instance(args.instance)
    scen = _scenario(inst, args.scenario)
    cfg = _config(args)
    model = build_model(inst, scen, strict_mass_balance=args.strict_mass_balance)
    out = Path(args.outdir)
    if args.dump_model:
        write_text(out / "model.lp", write_lp(model))
    _, sol = run_scenario(inst, scen, cfg, strict_mass_balance=args.strict_mass_balance)
    save_solution(sol, out / "solution.json", provenance=provenance(inst, scen, cfg))
    emit_reports(inst, sol, out, scenario=scen, strict_mass_balance=args.strict_mass_balance)
    _print_solution(sol)
    return EXIT_LIMIT if _limit_hit(sol, cfg) else EXIT_OK


def cmd_scenarios(args) -> int:
    inst = resolve_instance(args.instance)
    cfg = _config(args)
    results = run_scenarios(inst, cfg, strict_mass_balance=args.strict_mass_balance,
                            workers=args.workers)
    out = Path(args.outdir)
    write_metrics_csv([m for m, _ in results], out / "scenarios.csv", timing=not args.no_timing)
    for m, sol in results:
        sub = out / m.scenario
        save_solution(sol, sub / "solution.json", provenance=provenance(inst, m.policy, cfg))
        emit_reports(inst, sol, sub, scenario=m.policy,
                     strict_mass_balance=args.strict_mass_balance)
        _print_solution(sol)
    write_text(out / "bars.svg", bars_svg(
        [(SCENARIO_LABELS[m.scenario], sol.breakdown, sol.total_ch4) for m, sol in results],
        title="Revenue and cost per GJ by policy scenario"))
    return EXIT_LIMIT if any(_limit_hit(sol, cfg) for _, sol in results) else EXIT_OK


def _parse_values(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InstanceError(f"--values: not a comma-separated list of numbers: {text!r}") from None


def cmd_sweep(args) -> int:
    inst = resolve_instance(args.instance)
    scen = _scenario(inst, args.scenario)
    cfg = _config(args)
    try:
        spec = SweepSpec(args.parameter, _parse_values(args.values), scen)
    except ValueError as exc:
        raise InstanceError(str(exc)) from None
    results = run_sweep(inst, spec, cfg, strict_mass_balance=args.strict_mass_balance,
                        workers=args.workers, return_solutions=True)
    out = Path(args.outdir)
    rows = [m for m, _ in results]
    write_metrics_csv(rows, out / "sweep.csv", timing=not args.no_timing)
    for metric, label in (("rng_pj", "RNG (PJ/yr)"), ("co2_mt", "CO2 sequestered (Mt/yr)"),
                          ("profit_per_gj", "profit ($/GJ)")):
        series = {args.parameter: [(m.value, float("nan") if getattr(m, metric) is None
                                    else getattr(m, metric)) for m in rows]}
        write_text(out / f"sweep_{metric}.svg",
                  line_chart_svg(series, title=f"{label} vs {args.parameter}",
                                 xlabel=args.parameter, ylabel=label))
    for m in rows:
        profit = "NA" if m.profit_per_gj is None else f"{m.profit_per_gj:.3f}"
        print(f"{args.parameter}={m.value:g}: rng_pj={m.rng_pj:.4f} co2_mt={m.co2_mt:.4f} "
              f"facilities={m.n_facilities} profit_per_gj={profit} gap={m.gap:.4f}")
    return EXIT_LIMIT if any(_limit_hit(sol, cfg) for _, sol in results) else EXIT_OK


def cmd_report(args) -> int:
    inst = resolve_instance(args.instance)
    sol = load_solution(args.solution)
    scen = _scenario(inst, args.scenario or sol.scenario or "baseline")
    paths = emit_reports(inst, sol, args.outdir, scenario=scen,
                         strict_mass_balance=args.strict_mass_balance)
    for p in vars(paths).values():
        print(p)
    return EXIT_OK


def cmd_dump_model(args) -> int:
    inst = resolve_instance(args.instance)
    scen = _scenario(inst, args.scenario)
    text = write_lp(build_model(inst, scen, strict_mass_balance=args.strict_mass_balance))
    if args.out == "-":
        sys.stdout.write(text)
    else:
        write_text(args.out, text)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "validate": cmd_validate, "solve": cmd_solve,
            "scenarios": cmd_scenarios, "sweep": cmd_sweep, "report": cmd_report,
            "dump-model": cmd_dump_model}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 \
        else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InstanceError, ReportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RngCcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
