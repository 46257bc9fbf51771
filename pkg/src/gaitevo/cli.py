"""Command-line entry point: ``gaitevo {evolve,reevaluate,replay,stats,export}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .config import load_sim_settings
from .cpg import Mode
from .errors import GaitEvoError
from .experiment import (ExperimentConfig, evolve, export_all, export_reevaluation, load_archives,
                         read_reevaluation, reevaluate)
from .fitness import evaluate_trace
from .genome import decode, load_genome
from .sim import run_evaluation
from .stats import summarize

log = logging.getLogger("gaitevo")

METRICS = ("composite", "distance", "stability", "distance_last_half")


def _cmd_evolve(args) -> int:
    cfg = ExperimentConfig(mode=args.mode, repetitions=args.repetitions, generations=args.generations,
                           duration=args.duration, base_seed=args.seed, sim_config=args.config,
                           output=args.output, popsize=args.popsize, sigma0=args.sigma0,
                           workers=args.workers)
    archives = evolve(cfg)
    manifest = json.loads((Path(cfg.output) / "manifest.json").read_text())
    failed = [r["run"] for r in manifest["runs"] if r["status"] != "complete"]
    for a in archives:
        print(f"run {a.run}: best fitness {a.best_so_far()[-1]:.4f}")
    if failed:
        print(f"failed runs: {failed}", file=sys.stderr)
        return 1
    return 0


def _cmd_reevaluate(args) -> int:
    settings = load_sim_settings(args.config)
    rows = []
    for d in args.runs:
        archives = load_archives(d)
        seeds = "archived" if args.archived_seed else None
        rows += reevaluate(archives, top_k=args.top_k, repeats=args.repeats, seeds=seeds,
                           settings=settings, base_seed=args.seed, workers=args.workers)
    path = export_reevaluation(rows, args.output)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _cmd_replay(args) -> int:
    settings = load_sim_settings(args.config)
    ev = settings.evaluation
    genome, file_mode = load_genome(args.genome)
    mode = args.mode or file_mode
    trace = run_evaluation(decode(genome, mode), settings.robot, settings.ground,
                           ev.duration if args.duration is None else args.duration, args.seed,
                           dt=ev.dt, sample_rate=ev.sample_rate, perturbation=ev.phase_perturbation,
                           start_at_target=ev.start_at_target)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out.with_suffix(".csv"))
    trace.save(out.with_suffix(".npz"))
    rec = evaluate_trace(trace, ev.direction, ev.angle_max)
    print(json.dumps(rec.as_dict()))
    return 0


def _cmd_stats(args) -> int:
    rows = []
    for p in args.tables:
        rows += read_reevaluation(p)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    for metric in args.metrics:
        rep = summarize(rows, args.group_by, metric, alpha=args.alpha, comparisons=args.comparisons,
                        seed=args.seed)
        reports[metric] = {"groups": [asdict(g) for g in rep.groups],
                           "comparisons": [asdict(c) for c in rep.comparisons],
                           "alpha": rep.alpha, "corrected_alpha": rep.corrected_alpha}
        for g in rep.groups:
            flag = " (low n)" if g.low_n else ""
            print(f"{metric:>20} {g.name:>8}: mean {g.mean:.4f} median {g.median:.4f} "
                  f"CI [{g.ci_low:.4f}, {g.ci_high:.4f}] n={g.n}{flag}")
        for c in rep.comparisons:
            mark = "*" if c.significant else ""
            print(f"{metric:>20} {c.first} vs {c.second}: U={c.u:g} p={c.p:.4g}{mark}")
    (out / "stats.json").write_text(json.dumps(reports, indent=2, sort_keys=True))
    with open(out / "stats.csv", "w", encoding="utf-8") as fh:
        fh.write("metric,group,n,mean,median,ci_low,ci_high,low_n\n")
        for metric, rep in reports.items():
            for g in rep["groups"]:
                fh.write(f"{metric},{g['name']},{g['n']},{g['mean']!r},{g['median']!r},"
                         f"{g['ci_low']!r},{g['ci_high']!r},{int(g['low_n'])}\n")
    return 0


def _cmd_export(args) -> int:
    archives = load_archives(args.run_dir)
    paths = export_all(archives, args.output)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaitevo", description="Evolve and analyse CPG gaits for a simulated quadruped.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evolve", help="run CMA-ES evolution campaigns")
    e.add_argument("--mode", choices=[m.value for m in Mode], default="open")
    e.add_argument("--repetitions", type=int, default=20)
    e.add_argument("--generations", type=int, default=250)
    e.add_argument("--popsize", type=int, default=10)
    e.add_argument("--sigma0", type=float, default=0.3)
    e.add_argument("--duration", type=float, default=None, help="evaluation time in seconds")
    e.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed+i")
    e.add_argument("--config", default=None, help="simulator INI file")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("-o", "--output", default="runs/open")
    e.set_defaults(func=_cmd_evolve)

    r = sub.add_parser("reevaluate", help="re-run the best evolved controllers")
    r.add_argument("runs", nargs="+", help="evolve output directories")
    r.add_argument("--top-k", type=int, default=5)
    r.add_argument("--repeats", type=int, default=10)
    r.add_argument("--seed", type=int, default=10_000, help="repeat i uses seed+i")
    r.add_argument("--archived-seed", action="store_true", help="reuse each controller's evolution seed")
    r.add_argument("--config", default=None)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("-o", "--output", default="reevaluation.csv")
    r.set_defaults(func=_cmd_reevaluate)

    rp = sub.add_parser("replay", help="simulate one genome and write its trace")
    rp.add_argument("genome", help="genome JSON file")
    rp.add_argument("--mode", choices=[m.value for m in Mode], default=None,
                    help="override the mode stored in the genome file")
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--duration", type=float, default=None)
    rp.add_argument("--config", default=None)
    rp.add_argument("-o", "--output", default="trace")
    rp.set_defaults(func=_cmd_replay)

    s = sub.add_parser("stats", help="summaries and Mann-Whitney tests on re-evaluation tables")
    s.add_argument("tables", nargs="+")
    s.add_argument("--group-by", default="mode")
    s.add_argument("--metrics", nargs="+", default=list(METRICS), choices=METRICS)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--comparisons", type=int, default=16, help="Bonferroni divisor")
    s.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    s.add_argument("-o", "--output", default="stats")
    s.set_defaults(func=_cmd_stats)

    x = sub.add_parser("export", help="write plot-ready CSVs from an evolve directory")
    x.add_argument("run_dir")
    x.add_argument("-o", "--output", default="export")
    x.set_defaults(func=_cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GaitEvoError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
