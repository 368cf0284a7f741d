"""Traditional vs proposed on the three bundled presets, averaged over seeds.

    python scripts/run_tables.py --seeds 1 2 3 --optimizer greedy --out results/tables

Writes tables.md (mean and per-seed spread) and tables.json next to it.
"""

import argparse
import json
import statistics
import time
from pathlib import Path

from mcastsim.engine import run
from mcastsim.metrics import improvement
from mcastsim.scenario import OPTIMIZERS, parse_scenario, with_overrides

PRESETS = ("low_demand", "medium_demand", "high_demand")
METRICS = (
    ("qoe_mean", "Quality of experience (0-100)"),
    ("bandwidth_utilization_pct", "Bandwidth utilization (%)"),
    ("rebuffer_ratio", "Rebuffer ratio"),
    ("mean_quality", "Mean segment quality"),
)


def collect(seeds, optimizer):
    rows = []
    for name in PRESETS:
        base = parse_scenario(name)
        for seed in seeds:
            for method in ("traditional", "proposed"):
                t0 = time.perf_counter()
                s = run(with_overrides(base, seed=seed, method=method, optimizer=optimizer))
                rows.append({"scenario": name, "seed": seed, "method": method,
                             "wall_s": round(time.perf_counter() - t0, 3), **s.scalars()})
                print(f"{name} seed {seed} {method}: QoE {s.qoe_mean:.1f}, "
                      f"utilization {s.bandwidth_utilization_pct:.1f}%")
    return rows


def summarize(rows, metric):
    out = []
    for name in PRESETS:
        vals = {m: [r[metric] for r in rows if r["scenario"] == name and r["method"] == m]
                for m in ("traditional", "proposed")}
        t, p = statistics.fmean(vals["traditional"]), statistics.fmean(vals["proposed"])
        sd = {m: statistics.pstdev(v) for m, v in vals.items()}
        out.append((name, t, sd["traditional"], p, sd["proposed"], improvement(t, p)))
    return out


def markdown(rows, seeds, optimizer):
    lines = [f"seeds {', '.join(map(str, seeds))}; optimizer {optimizer}; mean ± population sd", ""]
    for metric, title in METRICS:
        lines += [f"### {title}", "",
                  "| Scenario | Traditional | Proposed | Improvement (%) |", "|---|---|---|---|"]
        for name, t, st, p, sp, imp in summarize(rows, metric):
            imp_s = "n/a" if imp is None else f"{imp:+.1f}"
            lines.append(f"| {name} | {t:.3g} ± {st:.2g} | {p:.3g} ± {sp:.2g} | {imp_s} |")
        lines.append("")
    return "\n".join(lines)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--optimizer", choices=OPTIMIZERS, default="greedy")
    ap.add_argument("--out", type=Path, default=Path("results/tables"))
    args = ap.parse_args()
    rows = collect(args.seeds, args.optimizer)
    md = markdown(rows, args.seeds, args.optimizer)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "tables.md").write_text(md)
    (args.out / "tables.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    print()
    print(md)
    print(f"wrote {args.out / 'tables.md'}")


if __name__ == "__main__":
    main()
