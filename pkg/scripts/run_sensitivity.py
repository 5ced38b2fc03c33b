"""One-at-a-time sensitivity sweeps over all six sweep parameters."""
import argparse
from pathlib import Path

from rngccs.domain import resolve_instance
from rngccs.report import line_chart_svg, write_text
from rngccs.scenario import SweepSpec, run_sweep, write_metrics_csv
from rngccs.solver import SolverConfig

# price sweeps in $, scale sweeps as multipliers of the bundle value
GRID = {
    "lcfs_price": (0.0, 50.0, 100.0, 150.0, 200.0),
    "rin_price": (0.0, 0.25, 0.5, 1.0, 1.5),
    "rng_price": (0.0, 2.0, 3.5, 5.0, 7.0),
    "q45_price": (0.0, 25.0, 50.0, 85.0),
    "biogas_yield_scale": (0.5, 0.75, 1.0, 1.25, 1.5),
    "transport_cost_scale": (0.5, 1.0, 1.5, 2.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instance", default="demo")
    ap.add_argument("--scenario", default="baseline")
    ap.add_argument("--gap", type=float, default=0.0)
    ap.add_argument("--outdir", default="out/sensitivity")
    args = ap.parse_args()

    inst = resolve_instance(args.instance)
    base = inst.scenario(args.scenario)
    cfg = SolverConfig(gap_tolerance=args.gap)
    out = Path(args.outdir)
    rows = []
    for parameter, values in GRID.items():
        part = run_sweep(inst, SweepSpec(parameter, values, base), cfg)
        rows += part
        print(parameter)
        for m in part:
            profit = "NA" if m.profit_per_gj is None else f"{m.profit_per_gj:.2f}"
            print(f"  {m.value:>7g}  rng_pj={m.rng_pj:.3f}  co2_mt={m.co2_mt:.4f}  "
                  f"facilities={m.n_facilities}  $/GJ={profit}")
    write_metrics_csv(rows, out / "sensitivity.csv", timing=False)
    for metric, label in (("rng_pj", "RNG (PJ/yr)"), ("co2_mt", "CO2 sequestered (Mt/yr)")):
        for group in (("lcfs_price", "q45_price"), ("biogas_yield_scale", "transport_cost_scale")):
            series = {p: [(m.value, getattr(m, metric)) for m in rows if m.parameter == p]
                      for p in group}
            name = f"{metric}_{'prices' if group[0].endswith('price') else 'scales'}.svg"
            write_text(out / name, line_chart_svg(series, title=label, xlabel="value",
                                                  ylabel=label))
    print(f"wrote {out / 'sensitivity.csv'}")


if __name__ == "__main__":
    main()
