"""Command-line entry point.

Exit codes: 0 ok, 1 invariant violation, 2 config/validation error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import harness, hst, metric, verify
from .errors import MoveBanditError

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _load_metric(args) -> metric.MetricSpace:
    if getattr(args, "file", None):
        return metric.load_metric_csv(args.file, normalize=args.normalize)
    if getattr(args, "spec", None):
        return metric.make_metric(args.spec)
    raise ConfigError("give --spec or --file")


def _dump(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True))


def cmd_metric_analyze(args) -> int:
    m = _load_metric(args)
    rep = metric.complexity_report(m, args.mode)
    out = {"k": m.k, "diameter": m.diameter, **rep.to_dict()}
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "cover", "pack"])
            w.writerows(zip(rep.breakpoints, rep.cover_nums, rep.pack_nums))
    _dump(out)
    return EXIT_OK


def cmd_hst_build(args) -> int:
    m = harness.resolve_metric(args.metric)
    tree = hst.build_hst(m)
    hst.save_tree(tree, args.out)
    dom = hst.verify_dominance(m, tree)
    _dump({"H": tree.depth, "k": tree.k, "dim": hst.tree_complexity(tree).value,
           "max_ratio": dom.max_ratio, "out": args.out})
    return EXIT_OK


def cmd_hst_reshape(args) -> int:
    tree = hst.load_tree(args.tree)
    out = hst.reshape_well_behaved(tree, args.horizon, args.variant)
    dest = args.out or args.tree
    hst.save_tree(out, dest)
    _dump({"H_in": tree.depth, "H_out": out.depth, "dim": hst.tree_complexity(out).value,
           "conditions": hst.check_conditions(out, args.horizon, args.variant).to_dict(),
           "out": dest})
    return EXIT_OK


def cmd_hst_check(args) -> int:
    tree = hst.load_tree(args.tree)
    rep = hst.check_conditions(tree, args.horizon, args.variant)
    _dump(rep.to_dict())
    return EXIT_OK if rep.well_behaved else EXIT_VIOLATION


def _experiment_config(args) -> harness.ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    known = {f.name for f in fields(harness.ExperimentConfig)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config fields: {sorted(extra)}")
    flags = {"metric": args.metric, "algorithm": args.algorithm, "horizon": args.horizon,
             "seed": args.seed, "adversary": args.adversary, "eta": args.eta,
             "gamma": args.gamma, "variant": args.variant, "space": args.space,
             "trace_out": getattr(args, "trace", None), "summary_out": getattr(args, "summary", None)}
    data.update({k: v for k, v in flags.items() if v is not None})
    if data.get("seed") is None:
        env = os.environ.get("MOVEBANDIT_SEED")
        if env is None:
            raise ConfigError("no seed: pass --seed, set it in the config, or set MOVEBANDIT_SEED")
        try:
            data["seed"] = int(env)
        except ValueError:
            raise ConfigError(f"MOVEBANDIT_SEED={env!r} is not an integer") from None
    cfg = harness.ExperimentConfig(**data)
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = _experiment_config(args)
    trace, summary = harness.run_experiment(cfg)
    if cfg.trace_out:
        Path(cfg.trace_out).write_text(trace.to_csv())
    if cfg.summary_out:
        Path(cfg.summary_out).write_text(harness.summary_json(summary))
    print(f"movement_regret {summary['movement_regret']!r}")
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def cmd_sweep(args) -> int:
    horizons, seeds = _int_list(args.horizons), _int_list(args.seeds)
    if not horizons or not seeds:
        raise ConfigError("sweep needs a non-empty --horizons grid and --seeds list")
    args.horizon = horizons[0]
    args.seed = seeds[0]
    base = _experiment_config(args).echo()
    rows = harness.sweep(base, horizons, seeds, jobs=args.jobs)
    cols = ["T", "seed", "movement_regret", "total_move", "status"]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, cols, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    else:
        w = csv.DictWriter(sys.stdout, cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    failed = [r for r in rows if r["status"] != "ok"]
    if args.fit and not failed:
        slope = harness.fit_loglog_slope([r["T"] for r in rows],
                                         [r["movement_regret"] for r in rows])
        print(f"loglog_slope {slope:.4f}")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_slope(args) -> int:
    with open(args.sweep_csv, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r.get("status", "ok") == "ok"]
    slope = harness.fit_loglog_slope([float(r["T"]) for r in rows],
                                     [float(r[args.column]) for r in rows])
    print(f"loglog_slope {slope:.4f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify.run_suite(only=args.only, quick=args.quick, faulty=args.inject_faulty_tree)
    text = json.dumps(report, indent=1, sort_keys=True, default=float)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(text)
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def _add_experiment_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--metric", help="metric spec (uniform:8, grid1d:16, ...) or CSV path")
    p.add_argument("--space", help="continuous space (interval | hypercube:d); plays on a grid cover")
    p.add_argument("--algorithm", choices=["smb", "exp3"])
    p.add_argument("--adversary", help="oracle spec, e.g. epochAdversary or stochasticGap:gap=0.3")
    p.add_argument("--eta", type=float, help="learning-rate override")
    p.add_argument("--gamma", type=float, help="Exp3 exploration mix")
    p.add_argument("--variant", choices=["plain", "weighted"], help="tree condition set")
    if not sweep:
        p.add_argument("--horizon", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--trace", help="trace CSV output path")
        p.add_argument("--summary", help="summary JSON output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="movebandit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_metric = sub.add_parser("metric", help="metric analysis")
    msub = p_metric.add_subparsers(dest="action", required=True)
    p = msub.add_parser("analyze", help="covering/packing numbers and complexities")
    p.add_argument("--spec")
    p.add_argument("--file")
    p.add_argument("--normalize", action="store_true", help="rescale the file's matrix to diameter 1")
    p.add_argument("--mode", choices=["auto", "exact", "greedy"], default="auto")
    p.add_argument("--csv", help="also write the per-radius table here")
    p.set_defaults(func=cmd_metric_analyze)

    p_hst = sub.add_parser("hst", help="tree construction and reshaping")
    hsub = p_hst.add_subparsers(dest="action", required=True)
    p = hsub.add_parser("build")
    p.add_argument("--metric", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hst_build)
    for name, func in (("reshape", cmd_hst_reshape), ("check", cmd_hst_check)):
        p = hsub.add_parser(name)
        p.add_argument("--tree", required=True)
        p.add_argument("--horizon", type=int, required=True)
        p.add_argument("--variant", choices=["plain", "weighted"], default="plain")
        if name == "reshape":
            p.add_argument("--out", help="defaults to overwriting --tree")
        p.set_defaults(func=func)

    p = sub.add_parser("run", help="run one experiment")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid of horizons x seeds")
    _add_experiment_flags(p, sweep=True)
    p.add_argument("--horizons", required=True, help="comma-separated horizons")
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="aggregate CSV path (stdout if omitted)")
    p.add_argument("--fit", action="store_true", help="print the fitted log-log regret slope")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("slope", help="fit the log-log slope of a sweep CSV")
    p.add_argument("sweep_csv")
    p.add_argument("--column", default="movement_regret")
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("verify", help="run the property suite")
    p.add_argument("--only", action="append", choices=list(verify.CHECKS))
    p.add_argument("--quick", action="store_true", help="smaller instance counts")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--inject-faulty-tree", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MoveBanditError, FileNotFoundError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
