"""Command-line interface: simulate, discover, bench, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .graphs import Dag
from .harness import ExperimentConfig, report_table, run_experiment
from .kerneltest import KernelConfig
from .metrics import dis, f1, n_prune, shd, sid
from .ordering import KernelCITester, build_conditioning_plan, discover_ordering, empty_plan
from .pruning import PruneConfig, prune
from .simgen import (CsvParseError, ScmConfig, load_dataset, load_two_slice_csv,
                     sample_dag, save_dataset, simulate)


def _parse_slices(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("slices must be 'tau,t', e.g. '1,2'")
    return int(parts[0]), int(parts[1])


def _add_scm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", type=int, help="variable count d")
    p.add_argument("--edges", type=int, help="edge count e")
    p.add_argument("--link", choices=("sin", "sigmoid", "poly"))
    p.add_argument("--noise", choices=("gaussian", "laplace", "uniform"))
    p.add_argument("--slices", type=_parse_slices, metavar="TAU,T")
    p.add_argument("--intervene-frac", type=float, dest="intervene_frac")
    p.add_argument("--n", type=int, help="sample count")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = ScmConfig(
        d=args.nodes, e=args.edges,
        link=args.link or "sin", noise=args.noise or "gaussian",
        t_slices=args.slices or (1, 2),
        intervention_fraction=(args.intervene_frac
                               if args.intervene_frac is not None else 0.0),
        n=args.n or 1000, seed=args.seed,
    )
    dag = sample_dag(cfg.d, cfg.e, cfg.seed)
    data = simulate(cfg, dag)
    paths = save_dataset(data, args.out, cfg=cfg)
    print(f"wrote {paths['x_tau']}, {paths['x_t']}, {paths['sidecar']}")
    return 0


def _load_discover_input(args: argparse.Namespace):
    if args.data_dir:
        return load_dataset(args.data_dir)
    if not (args.x_tau and args.x_t):
        raise CsvParseError("provide --data-dir or both --x-tau and --x-t")
    for p in (args.x_tau, args.x_t):
        if not Path(p).exists():
            raise FileNotFoundError(f"input file not found: {p}")
    return load_two_slice_csv(args.x_tau, args.x_t)


def cmd_discover(args: argparse.Namespace) -> int:
    try:
        data = _load_discover_input(args)
    except (CsvParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kcfg = KernelConfig(ridge=args.ridge, subsample_cap=args.subsample_cap)
    tester = KernelCITester(kcfg, seed=args.seed)
    if args.method == "htit":
        plan = empty_plan(data.d)
    else:
        plan = build_conditioning_plan(data, kcfg, args.alpha, tester=tester)
    pm, og, layering = discover_ordering(data, kcfg, args.alpha,
                                         tester=tester, plan=plan)
    est = prune(data, og, PruneConfig(beta=args.beta))
    (out / "ordering.json").write_text(og.to_json() + "\n", encoding="utf-8")
    (out / "layers.json").write_text(layering.to_json() + "\n", encoding="utf-8")
    (out / "dag.json").write_text(est.to_json() + "\n", encoding="utf-8")
    est.write_edge_csv(out / "dag_edges.csv")
    print(f"ordering edges: {og.n_edges}; final edges: {est.n_edges}")
    truth = data.truth
    if args.truth:
        truth = Dag.from_json(Path(args.truth).read_text(encoding="utf-8"))
    if truth is not None:
        row = {
            "shd": shd(est, truth), "sid": sid(est, truth),
            "f1": f1(est, truth), "dis": dis(est, truth),
            "n_prune": n_prune(og, est),
        }
        (out / "metrics.json").write_text(json.dumps(row, indent=2) + "\n",
                                          encoding="utf-8")
        print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in row.items()))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    base: dict = {}
    if args.config:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
    scm = base.get("scm", {})
    for key, val in (("d", args.nodes), ("e", args.edges), ("link", args.link),
                     ("noise", args.noise), ("n", args.n)):
        if val is not None:
            scm[key] = val
    if args.slices is not None:
        scm["t_slices"] = list(args.slices)
    if args.intervene_frac is not None:
        scm["intervention_fraction"] = args.intervene_frac
    base["scm"] = scm
    for key, val in (("method", args.method), ("alpha", args.alpha),
                     ("replications", args.reps), ("master_seed", args.seed)):
        if val is not None:
            base[key] = val
    if args.beta is not None:
        base.setdefault("prune", {})["beta"] = args.beta
    if args.out is not None:
        base["output_dir"] = args.out
    cfg = ExperimentConfig.from_dict(base)
    report = run_experiment(cfg, workers=args.workers)
    print(report.summary_line())
    print(f"artifacts under {cfg.output_dir}")
    if report.n_failed:
        print(f"error: {report.n_failed} replication(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    csv_text, aligned = report_table(args.run_dirs)
    print(aligned, end="")
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htcit",
        description="Two-time-slice causal discovery via hierarchical "
                    "topological ordering")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="sample a DAG and generate a dataset")
    _add_scm_flags(p_sim)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    for a in p_sim._actions:
        if a.dest in ("nodes", "edges"):
            a.required = True
    p_sim.set_defaults(fn=cmd_simulate)

    p_disc = sub.add_parser("discover", help="run discovery on a dataset")
    p_disc.add_argument("--data-dir", help="directory with x_tau.csv/x_t.csv/sidecar.json")
    p_disc.add_argument("--x-tau", help="CSV of the earlier slice")
    p_disc.add_argument("--x-t", help="CSV of the later slice")
    p_disc.add_argument("--truth", help="optional truth DAG JSON for metrics")
    p_disc.add_argument("--method", choices=("htcit", "htit"), default="htcit")
    p_disc.add_argument("--alpha", type=float, default=0.01)
    p_disc.add_argument("--beta", type=float, default=0.001)
    p_disc.add_argument("--ridge", type=float, default=KernelConfig().ridge)
    p_disc.add_argument("--subsample-cap", type=int, default=None)
    p_disc.add_argument("--seed", type=int, default=0)
    p_disc.add_argument("--out", required=True)
    p_disc.set_defaults(fn=cmd_discover)

    p_bench = sub.add_parser("bench", help="replicated synthetic benchmark")
    p_bench.add_argument("--config", help="experiment config JSON")
    _add_scm_flags(p_bench)
    p_bench.add_argument("--method", choices=("htcit", "htit"))
    p_bench.add_argument("--alpha", type=float)
    p_bench.add_argument("--beta", type=float)
    p_bench.add_argument("--reps", type=int)
    p_bench.add_argument("--seed", type=int)
    p_bench.add_argument("--out")
    p_bench.add_argument("--workers", type=int, default=None)
    p_bench.set_defaults(fn=cmd_bench)

    p_rep = sub.add_parser("report", help="aggregate metrics across run dirs")
    p_rep.add_argument("run_dirs", nargs="+")
    p_rep.add_argument("--out", help="also write the table as CSV")
    p_rep.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CsvParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
