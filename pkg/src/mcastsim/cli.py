"""Command line entry point: run one scenario, A/B-compare methods, or validate a file.

    mcastsim run --scenario high_demand --seed 3 --timeseries
    mcastsim compare --scenario low_demand medium_demand high_demand --seed 1 --out results
    mcastsim validate --scenario my.json

Scenario arguments accept a path or the name of a bundled preset. The default
output directory is ``$MCASTSIM_OUT`` or ``./results``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from mcastsim import __version__
from mcastsim.engine import Simulation
from mcastsim.errors import ConfigError, IoError, SimError
from mcastsim.metrics import ComparisonRow, MetricsSummary, compare
from mcastsim.scenario import (
    METHODS,
    OPTIMIZERS,
    Scenario,
    parse_scenario,
    to_dict,
    with_overrides,
)

OUT_ENV = "MCASTSIM_OUT"


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV) or "results")


@dataclass
class RunConfig:
    scenario: str
    seed: int | None = None
    method: str | None = None
    optimizer: str | None = None
    out: Path = field(default_factory=default_out)
    timeseries: bool = False
    workers: int = 1

    def load(self) -> Scenario:
        return with_overrides(
            parse_scenario(self.scenario), seed=self.seed, method=self.method, optimizer=self.optimizer
        )


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None


def summary_document(summary: MetricsSummary, scenario: Scenario) -> dict:
    return {
        "version": __version__,
        "seed": scenario.seed,
        "metrics": summary.scalars(),
        "scenario": to_dict(scenario),
    }


def emit(summary: MetricsSummary, config: RunConfig, scenario: Scenario, out: Path | None = None) -> list[Path]:
    """Write ``summary.json`` (and the CSV series when requested) into ``out``."""
    out = Path(out if out is not None else config.out)
    written = [out / "summary.json"]
    _write(written[0], _dumps(summary_document(summary, scenario)))
    if config.timeseries:
        series = summary.series or {}
        load, cap = series.get("load", {}), series.get("capacity", {})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tick", "link_id", "load_bps", "capacity_bps"])
        n = max((len(v) for v in cap.values()), default=0)
        for tick in range(n):
            for lid in sorted(cap):
                w.writerow([tick, lid, repr(load[lid][tick]), repr(cap[lid][tick])])
        written.append(out / "timeseries.csv")
        _write(written[-1], buf.getvalue())

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tick", "client_id", "buffer_s"])
        for tick, cid, level in series.get("buffer", ()):
            w.writerow([tick, cid, repr(level)])
        written.append(out / "buffers.csv")
        _write(written[-1], buf.getvalue())
    return written


def run_one(config: RunConfig, scenario: Scenario | None = None) -> MetricsSummary:
    sc = scenario if scenario is not None else config.load()
    return Simulation(sc, record_timeseries=config.timeseries, workers=config.workers).run()


@dataclass
class ScenarioComparison:
    scenario: str
    seed: int
    traditional: MetricsSummary
    proposed: MetricsSummary
    rows: list[ComparisonRow]

    def row(self, metric: str) -> ComparisonRow:
        return next(r for r in self.rows if r.metric == metric)


def compare_runs(traditional: tuple[Scenario, MetricsSummary], proposed: tuple[Scenario, MetricsSummary]):
    (sc_t, s_t), (sc_p, s_p) = traditional, proposed
    if sc_t.seed != sc_p.seed:
        raise ConfigError(f"refusing to compare runs with different seeds ({sc_t.seed} vs {sc_p.seed})")
    return ScenarioComparison(sc_t.name, sc_t.seed, s_t, s_p, compare(s_t, s_p))


def run_compare(config: RunConfig) -> ScenarioComparison:
    """Run one scenario under both methods with the same seed and write both summaries."""
    base = config.load()
    runs = {}
    for method in METHODS:
        sc = with_overrides(base, method=method)
        summary = run_one(config, sc)
        emit(summary, config, sc, Path(config.out) / base.name / method)
        runs[method] = (sc, summary)
    return compare_runs(runs["traditional"], runs["proposed"])


def _fmt(x: float) -> str:
    return f"{x:.1f}"


def _fmt_imp(x: float | None) -> str:
    return "n/a" if x is None else f"{x:+.1f}"


TABLES = (
    ("qoe_mean", "Quality of experience (mean session score, 0-100)"),
    ("bandwidth_utilization_pct", "Bandwidth utilization (%)"),
)


def comparison_markdown(results: list[ScenarioComparison]) -> str:
    lines = []
    for metric, title in TABLES:
        lines += [f"### {title}", "", "| Scenario | Traditional | Proposed | Improvement (%) |", "|---|---|---|---|"]
        for res in results:
            r = res.row(metric)
            lines.append(f"| {res.scenario} | {_fmt(r.traditional)} | {_fmt(r.proposed)} | {_fmt_imp(r.improvement_pct)} |")
        lines.append("")
    seeds = sorted({r.seed for r in results})
    lines.append(f"seed(s): {', '.join(map(str, seeds))}")
    return "\n".join(lines) + "\n"


def comparison_document(results: list[ScenarioComparison]) -> dict:
    return {
        "version": __version__,
        "rows": [
            {"scenario": res.scenario, "seed": res.seed, **r._asdict()}
            for res in results
            for r in res.rows
        ],
    }


def write_comparison(results: list[ScenarioComparison], out: Path) -> None:
    out = Path(out)
    _write(out / "comparison.md", comparison_markdown(results))
    _write(out / "comparison.json", _dumps(comparison_document(results)))


# -- argparse -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcastsim", description="Multicast adaptive streaming simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, many=False):
        if many:
            p.add_argument("--scenario", nargs="+", required=True, help="scenario files or bundled preset names")
        else:
            p.add_argument("--scenario", required=True, help="scenario file or bundled preset name")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or ./results)")
        p.add_argument("--optimizer", choices=OPTIMIZERS, default=None)
        p.add_argument("--workers", type=int, default=1, help="threads for GA fitness evaluation")

    p = sub.add_parser("run", help="simulate one scenario and write summary.json")
    common(p)
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--timeseries", action="store_true", help="also write timeseries.csv and buffers.csv")

    p = sub.add_parser("compare", help="traditional vs proposed on the same seed")
    common(p, many=True)
    p.add_argument("--timeseries", action="store_true")

    p = sub.add_parser("validate", help="parse and check a scenario file")
    p.add_argument("--scenario", required=True)
    return ap


def _config(args, scenario: str) -> RunConfig:
    return RunConfig(
        scenario=scenario,
        seed=args.seed,
        method=getattr(args, "method", None),
        optimizer=args.optimizer,
        out=args.out if args.out is not None else default_out(),
        timeseries=getattr(args, "timeseries", False),
        workers=args.workers,
    )


def _cmd_run(args) -> None:
    cfg = _config(args, args.scenario)
    sc = cfg.load()
    summary = run_one(cfg, sc)
    for path in emit(summary, cfg, sc):
        print(f"wrote {path}")
    print(
        f"{sc.name} [{sc.method}/{summary.optimizer}, seed {sc.seed}]: "
        f"QoE {summary.qoe_mean:.1f}, utilization {summary.bandwidth_utilization_pct:.1f}%"
    )


def _cmd_compare(args) -> None:
    results = [run_compare(_config(args, name)) for name in args.scenario]
    out = args.out if args.out is not None else default_out()
    write_comparison(results, out)
    sys.stdout.write(comparison_markdown(results))
    print(f"wrote {Path(out) / 'comparison.md'}")


def _cmd_validate(args) -> None:
    sc = parse_scenario(args.scenario)
    joins = sum(e.action == "join" for e in sc.schedule)
    print(
        f"ok: {sc.name} (demand {sc.demand}, {len(sc.topology.links)} links, "
        f"{len(sc.assets)} assets, {joins} joins, {sc.duration_s:g} s)"
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "compare": _cmd_compare, "validate": _cmd_validate}[args.command]
    try:
        handler(args)
    except SimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
