#!/usr/bin/env python3
"""Run a desk-scale sweep of the two-stage pipeline and emit the plot-ready
CSV files."""

from pathlib import Path

from uavqubo import ExperimentConfig, sweep, emit_plotdata

out = Path("sweep_output")
config = ExperimentConfig(
    base={"num_gus": 40, "area_m": 2500.0},
    sweep_axis={"num_uavs": [1, 2, 3, 4, 5], "num_subchannels": [2, 3]},
    solvers=["sa", "sd"],
    seeds=[0, 1, 2],
    out_dir=out,
)
records = sweep(config)
ok = [r for r in records if r.status == "ok"]
print(f"{len(ok)}/{len(records)} runs finished; CSVs under {out}/")

emit_plotdata(records, "sumrate_vs_uavs", out / "sumrate_vs_uavs.csv")
emit_plotdata(records, "runtime_vs_uavs", out / "runtime_vs_uavs.csv")

import collections
means = collections.defaultdict(list)
for r in ok:
    means[(r.point["num_subchannels"], r.point["num_uavs"], r.solver)].append(
        r.sum_rate)
print(f"\n{'UAVs':>5} {'K=2 sa':>9} {'K=2 sd':>9} {'K=3 sa':>9} {'K=3 sd':>9}")
for m in range(1, 6):
    row = [sum(means[(k, m, s)]) / len(means[(k, m, s)])
           for k in (2, 3) for s in ("sa", "sd")]
    print(f"{m:>5} {row[0]:>9.1f} {row[1]:>9.1f} {row[2]:>9.1f} {row[3]:>9.1f}")
