"""Experiment orchestration: replicated benchmark runs and report aggregation.

A run writes one directory per replication (dataset CSV pair + sidecar,
ordering JSON, final DAG JSON/CSV, metrics row) plus aggregate files at the
run root.  Replications are independent (seeded from the master seed and the
replication index) and execute in a worker pool; a failed replication is
recorded and never corrupts the others.

The per-replication metrics file excludes wall-clock runtime so that it is
byte-identical across reruns of the same configuration; timings go to a
separate file.
"""

from __future__ import annotations

import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .kerneltest import KernelConfig
from .metrics import EvalReport, ReplicationResult, dis, f1, n_prune, shd, sid
from .ordering import KernelCITester, build_conditioning_plan, discover_ordering, empty_plan
from .pruning import PruneConfig, prune
from .simgen import ScmConfig, sample_dag, save_dataset, simulate

WORKERS_ENV = "HTCIT_WORKERS"
METRICS_SCHEMA = "replication,shd,sid,f1,dis,n_prune,n_ordering_edges"
METHODS = ("htcit", "htit")


@dataclass(frozen=True)
class ExperimentConfig:
    scm: ScmConfig
    method: str = "htcit"
    kernel: KernelConfig = field(default_factory=KernelConfig)
    alpha: float = 0.01
    prune: PruneConfig = field(default_factory=PruneConfig)
    replications: int = 10
    master_seed: int = 0
    output_dir: Path = Path("runs/experiment")

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.method == "htit" and self.scm.intervention_fraction <= 0:
            raise ValueError("method 'htit' requires intervention_fraction > 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    def to_dict(self) -> dict:
        return {
            "scm": self.scm.to_dict(),
            "method": self.method,
            "kernel": {
                "bandwidth_rule": self.kernel.bandwidth_rule,
                "ridge": self.kernel.ridge,
                "permutations": self.kernel.permutations,
                "subsample_cap": self.kernel.subsample_cap,
            },
            "alpha": self.alpha,
            "prune": {
                "beta": self.prune.beta,
                "basis": self.prune.basis,
                "knots": self.prune.knots,
                "degree": self.prune.degree,
                "min_samples": self.prune.min_samples,
            },
            "replications": self.replications,
            "master_seed": self.master_seed,
            "output_dir": str(self.output_dir),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        return cls(
            scm=ScmConfig.from_dict(obj["scm"]),
            method=obj.get("method", "htcit"),
            kernel=KernelConfig(**obj.get("kernel", {})),
            alpha=obj.get("alpha", 0.01),
            prune=PruneConfig(**obj.get("prune", {})),
            replications=obj.get("replications", 10),
            master_seed=obj.get("master_seed", 0),
            output_dir=Path(obj.get("output_dir", "runs/experiment")),
        )


def child_seeds(master_seed: int, rep: int) -> tuple[int, int, int]:
    """Deterministic (dag, simulation, test) seeds for one replication."""
    ss = np.random.SeedSequence((master_seed, rep))
    a, b, c = ss.generate_state(3, dtype=np.uint64)
    return int(a), int(b), int(c)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_replication(cfg: ExperimentConfig, rep: int) -> ReplicationResult:
    """One seeded replication: simulate, discover, prune, evaluate, persist."""
    rep_dir = cfg.output_dir / f"rep-{rep}"
    try:
        dag_seed, sim_seed, test_seed = child_seeds(cfg.master_seed, rep)
        dag = sample_dag(cfg.scm.d, cfg.scm.e, dag_seed)
        scm_rep = replace(cfg.scm, seed=sim_seed)
        data = simulate(scm_rep, dag)

        t0 = time.perf_counter()
        tester = KernelCITester(cfg.kernel, seed=test_seed)
        if cfg.method == "htit":
            plan = empty_plan(data.d)
        else:
            plan = build_conditioning_plan(data, cfg.kernel, cfg.alpha,
                                           tester=tester)
        pm, og, layering = discover_ordering(data, cfg.kernel, cfg.alpha,
                                             tester=tester, plan=plan)
        est = prune(data, og, cfg.prune)
        runtime = time.perf_counter() - t0

        result = ReplicationResult(
            index=rep,
            shd=shd(est, dag), sid=sid(est, dag), f1=f1(est, dag),
            dis=dis(est, dag), n_prune=n_prune(og, est),
            n_ordering_edges=og.n_edges, runtime_s=runtime,
        )
        rep_dir.mkdir(parents=True, exist_ok=True)
        save_dataset(data, rep_dir, cfg=scm_rep)
        (rep_dir / "ordering.json").write_text(og.to_json() + "\n", encoding="utf-8")
        (rep_dir / "layers.json").write_text(layering.to_json() + "\n",
                                             encoding="utf-8")
        (rep_dir / "dag.json").write_text(est.to_json() + "\n", encoding="utf-8")
        est.write_edge_csv(rep_dir / "dag_edges.csv")
        (rep_dir / "metrics.json").write_text(
            json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
        return result
    except Exception as exc:  # crash isolation: record, keep other reps intact
        rep_dir.mkdir(parents=True, exist_ok=True)
        err = f"{type(exc).__name__}: {exc}"
        (rep_dir / "error.txt").write_text(
            err + "\n\n" + traceback.format_exc(), encoding="utf-8")
        return ReplicationResult(index=rep, shd=0, sid=0, f1=0.0, dis=0.0,
                                 n_prune=0, n_ordering_edges=0, runtime_s=0.0,
                                 error=err)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_aggregates(cfg: ExperimentConfig, report: EvalReport) -> None:
    out = cfg.output_dir
    ok = [r for r in report.replications if r.error is None]
    lines = [f"# htcit metrics schema v1: {METRICS_SCHEMA}", METRICS_SCHEMA]
    for r in ok:
        lines.append(",".join(_fmt(v) for v in (
            r.index, r.shd, r.sid, r.f1, r.dis, r.n_prune, r.n_ordering_edges)))
    (out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    tlines = ["replication,runtime_s"]
    tlines += [f"{r.index},{_fmt(r.runtime_s)}" for r in ok]
    (out / "timings.csv").write_text("\n".join(tlines) + "\n", encoding="utf-8")
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "summary.txt").write_text(report.summary_line() + "\n",
                                     encoding="utf-8")


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> EvalReport:
    """Run all replications, persist artifacts, return the aggregate report."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
    workers = workers if workers is not None else default_workers()
    workers = min(workers, cfg.replications)
    if workers <= 1:
        results = [run_replication(cfg, r) for r in range(cfg.replications)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_replication, [cfg] * cfg.replications,
                                    range(cfg.replications)))
    report = EvalReport(tuple(sorted(results, key=lambda r: r.index)))
    _write_aggregates(cfg, report)
    return report


REPORT_COLUMNS = ("SHD", "SID", "F1", "Dis.", "#Prune", "runtime_s")
_COLUMN_KEYS = {"SHD": "shd", "SID": "sid", "F1": "f1", "Dis.": "dis",
                "#Prune": "n_prune", "runtime_s": "runtime_s"}


def _read_csv_rows(path: Path) -> list[dict[str, float]]:
    rows: list[dict[str, float]] = []
    header: list[str] | None = None
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append({k: float(v) for k, v in zip(header, line.split(","))})
    return rows


def load_run_metrics(run_dir: str | Path) -> list[dict[str, float]]:
    """Merge a run directory's metrics and timings into one row per replication."""
    run_dir = Path(run_dir)
    metrics = _read_csv_rows(run_dir / "metrics.csv")
    timings = {r["replication"]: r["runtime_s"]
               for r in _read_csv_rows(run_dir / "timings.csv")}
    for row in metrics:
        row["runtime_s"] = timings.get(row["replication"], float("nan"))
    return metrics


def report_table(run_dirs: list[str | Path]) -> tuple[str, str]:
    """Aggregate runs into a mean+-std table; returns (csv_text, aligned_text)."""
    csv_lines = ["run," + ",".join(f"{c}_mean,{c}_std" for c in REPORT_COLUMNS)]
    text_rows: list[list[str]] = [["run"] + list(REPORT_COLUMNS)]
    for run in run_dirs:
        rows = load_run_metrics(run)
        cells_csv: list[str] = [str(run)]
        cells_txt: list[str] = [str(run)]
        for col in REPORT_COLUMNS:
            key = _COLUMN_KEYS[col]
            vals = np.array([r[key] for r in rows], dtype=np.float64)
            mean = float(vals.mean()) if vals.size else float("nan")
            std = float(vals.std()) if vals.size else float("nan")
            cells_csv += [f"{mean:.6g}", f"{std:.6g}"]
            cells_txt.append(f"{mean:.2f}+-{std:.2f}")
        csv_lines.append(",".join(cells_csv))
        text_rows.append(cells_txt)
    widths = [max(len(row[c]) for row in text_rows)
              for c in range(len(text_rows[0]))]
    text_lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                  for row in text_rows]
    return "\n".join(csv_lines) + "\n", "\n".join(text_lines) + "\n"
