"""Acceptance suite: every headline criterion at its stated tolerance.

Each test prints one PASS/FAIL line per criterion (run with -s to see them
live).  Long benchmarks execute once via session fixtures and are shared by
the criteria that read them.  Extended dense-graph benchmarks only run when
HTCIT_EXTENDED=1.
"""

import itertools
import os
import time
from pathlib import Path

import numpy as np
import pytest

from htcit import (Dag, DSeparationOracle, ExperimentConfig, KernelCITester,
                   KernelConfig, PruneConfig, ScmConfig, adjust_layers,
                   build_ordering, discover_ordering, empty_plan, hsic_test,
                   kci_test, prune, run_experiment, sample_dag, simulate)
from htcit.graphs import is_acyclic, reachability
from htcit.harness import run_replication
from htcit.metrics import shd, sid
from htcit.ordering import OrderingGraph, PValueMatrix

from conftest import enumerate_dags, random_dags
from test_metrics import shd_bruteforce, sid_bruteforce


def check(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def bench_config(tmp, name, *, d, e, slices, frac, method, noise="gaussian",
                 reps=10, n=1000, seed=20240601) -> ExperimentConfig:
    return ExperimentConfig(
        scm=ScmConfig(d=d, e=e, link="sin", noise=noise, t_slices=slices,
                      intervention_fraction=frac, n=n, seed=0),
        method=method,
        kernel=KernelConfig(),
        alpha=0.01,
        prune=PruneConfig(),
        replications=reps,
        master_seed=seed,
        output_dir=tmp / name,
    )


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance-benchmarks")


@pytest.fixture(scope="session")
def sin_10_10_interventional(bench_dir):
    cfg = bench_config(bench_dir, "sin-10-10-int", d=10, e=10, slices=(0, 1),
                       frac=1.0, method="htit")
    return cfg, run_experiment(cfg)


@pytest.fixture(scope="session")
def sin_10_10_observational(bench_dir):
    cfg = bench_config(bench_dir, "sin-10-10-obs", d=10, e=10, slices=(1, 2),
                       frac=0.0, method="htcit")
    return cfg, run_experiment(cfg)


@pytest.fixture(scope="session")
def sin_20_20_observational(bench_dir):
    cfg = bench_config(bench_dir, "sin-20-20-obs", d=20, e=20, slices=(1, 2),
                       frac=0.0, method="htcit")
    return cfg, run_experiment(cfg)


class TestCriterion1OracleExactness:
    def test_oracle_reachability_and_truth(self):
        t0 = time.time()
        failures = 0
        rng = np.random.default_rng(42)
        for k, dag in enumerate(random_dags(200, d_max=6, seed=42)):
            interventional = k % 2 == 1
            slices = (0, 1) if interventional else (1, 2)
            frac = 1.0 if interventional else 0.0
            cfg = ScmConfig(d=dag.d, e=dag.n_edges, t_slices=slices,
                            intervention_fraction=frac, n=40,
                            seed=int(rng.integers(2**31)))
            data = simulate(cfg, dag)
            oracle = DSeparationOracle(dag, slices, data.intervened)
            _, og, _ = discover_ordering(data, alpha=0.01, tester=oracle,
                                         plan=oracle.theorem_plan())
            if not (og.a_tp.astype(bool) == reachability(dag.adj)).all():
                failures += 1
                continue
            est = prune(
                data, og,
                significance=lambda ds, j, cand, cfg_, dag=dag: np.array(
                    [0.0 if dag.adj[i, j] else 1.0 for i in cand]))
            if not (est.adj == dag.adj).all():
                failures += 1
        elapsed = time.time() - t0
        check("criterion 1 (oracle exactness)", failures == 0 and elapsed < 60,
              f"{200 - failures}/200 exact recoveries in {elapsed:.1f}s (< 60s)")


class TestCriterion2InterventionalReproduction:
    def test_sin_10_10_interventional(self, sin_10_10_interventional):
        cfg, report = sin_10_10_interventional
        mean_shd = report.mean("shd")
        mean_f1 = report.mean("f1")
        mean_prune = report.mean("n_prune")
        runtime = sum(r.runtime_s for r in report.ok)
        ok = (report.n_failed == 0 and mean_shd <= 0.5 and mean_f1 >= 0.95
              and mean_prune <= 15)
        check("criterion 2 (interventional Sin-10-10)", ok,
              f"mean SHD={mean_shd:.2f} (<=0.5) F1={mean_f1:.3f} (>=0.95) "
              f"#Prune={mean_prune:.1f} (<=15); total runtime {runtime:.0f}s "
              f"(target <600s)")


class TestCriterion3ObservationalReproduction:
    def test_sin_10_10_observational(self, sin_10_10_observational):
        cfg, report = sin_10_10_observational
        mean_shd = report.mean("shd")
        mean_f1 = report.mean("f1")
        ok = report.n_failed == 0 and mean_shd <= 2.5 and mean_f1 >= 0.88
        check("criterion 3a (observational Sin-10-10)", ok,
              f"mean SHD={mean_shd:.2f} (<=2.5) F1={mean_f1:.3f} (>=0.88)")

    def test_sin_20_20_observational(self, sin_20_20_observational):
        cfg, report = sin_20_20_observational
        mean_f1 = report.mean("f1")
        mean_prune = report.mean("n_prune")
        ok = report.n_failed == 0 and mean_f1 >= 0.90 and mean_prune <= 60
        check("criterion 3b (observational Sin-20-20)", ok,
              f"mean F1={mean_f1:.3f} (>=0.90) #Prune={mean_prune:.1f} (<=60)")

    @pytest.mark.skipif(not os.environ.get("HTCIT_EXTENDED"),
                        reason="extended dense-graph benchmarks, HTCIT_EXTENDED=1")
    @pytest.mark.parametrize("edges,f1_floor", [(20, 0.76), (30, 0.63)])
    def test_dense_graphs_extended(self, bench_dir, edges, f1_floor):
        cfg = bench_config(bench_dir, f"sin-10-{edges}-obs", d=10, e=edges,
                           slices=(1, 2), frac=0.0, method="htcit")
        report = run_experiment(cfg)
        mean_f1 = report.mean("f1")
        ok = report.n_failed == 0 and mean_f1 >= f1_floor
        check(f"criterion 3c (Sin-10-{edges} extended)", ok,
              f"mean F1={mean_f1:.3f} (>= {f1_floor}, paper value -0.10 slack)")


class TestCriterion4OrderingSizeDominance:
    def test_fewer_than_complete_ordering(self, sin_10_10_interventional,
                                          sin_10_10_observational):
        complete = 10 * 9 // 2
        for label, (cfg, report) in (("interventional", sin_10_10_interventional),
                                     ("observational", sin_10_10_observational)):
            wins = sum(r.n_ordering_edges < complete for r in report.ok)
            ok = wins >= 9
            check(f"criterion 4 (ordering smaller than complete, {label})", ok,
                  f"{wins}/10 replications below {complete} edges")


class TestCriterion5NoiseRobustness:
    @pytest.mark.parametrize("noise", ["laplace", "uniform"])
    def test_noise_families(self, bench_dir, noise):
        cfg = bench_config(bench_dir, f"sin-10-10-obs-{noise}", d=10, e=10,
                           slices=(1, 2), frac=0.0, method="htcit", noise=noise)
        report = run_experiment(cfg)
        mean_f1 = report.mean("f1")
        ok = report.n_failed == 0 and mean_f1 >= 0.85
        check(f"criterion 5 ({noise} noise)", ok,
              f"mean F1={mean_f1:.3f} (>=0.85)")


class TestCriterion6StatisticalCalibration:
    def test_hsic_type_one_error(self):
        t0 = time.time()
        rng = np.random.default_rng(7)
        trials = 1000
        rejections = 0
        for _ in range(trials):
            x = rng.standard_normal(300)
            y = rng.standard_normal(300)
            rejections += int(hsic_test(x, y).p_value <= 0.01)
        rate = rejections / trials
        elapsed = time.time() - t0
        ok = 0.002 <= rate <= 0.03 and elapsed < 300
        check("criterion 6a (type-I calibration)", ok,
              f"rejection rate {rate:.4f} in [0.002, 0.03], {elapsed:.0f}s (<300s)")

    def test_kci_chain_vs_collider(self):
        t0 = time.time()
        chain_ok = collider_ok = 0
        for s in range(10):
            rng = np.random.default_rng(5000 + s)
            n = 500
            x = rng.standard_normal(n)
            z = np.sin(x) + 0.5 * rng.standard_normal(n)
            y = np.sin(z) + 0.5 * rng.standard_normal(n)
            chain_ok += int(kci_test(x, y, z.reshape(-1, 1)).p_value > 0.01)
            x2 = rng.standard_normal(n)
            y2 = rng.standard_normal(n)
            z2 = np.sin(x2) + np.sin(y2) + 0.5 * rng.standard_normal(n)
            collider_ok += int(kci_test(x2, y2, z2.reshape(-1, 1)).p_value <= 0.01)
        elapsed = time.time() - t0
        ok = chain_ok >= 8 and collider_ok >= 8 and elapsed < 300
        check("criterion 6b (chain vs collider)", ok,
              f"chain accepts {chain_ok}/10 (>=8), collider rejects "
              f"{collider_ok}/10 (>=8), {elapsed:.0f}s")


class TestCriterion7MetricOracles:
    def test_exhaustive_small_graphs(self):
        t0 = time.time()
        mismatches = 0
        pairs = 0
        for d in (1, 2, 3, 4):
            adjs = enumerate_dags(d)
            dags = [Dag(a) for a in adjs]
            sid_cache: dict[tuple, int] = {}
            for A, B in itertools.product(dags, dags):
                pairs += 1
                if shd(A, B) != shd_bruteforce(A, B):
                    mismatches += 1
                key = (A.adj.tobytes(), B.adj.tobytes())
                if sid(A, B) != sid_bruteforce(A, B):
                    mismatches += 1
        elapsed = time.time() - t0
        check("criterion 7a (exhaustive shd/sid oracles)", mismatches == 0,
              f"{pairs} DAG pairs over d<=4, {mismatches} mismatches, "
              f"{elapsed:.0f}s")

    def test_shd_metric_axioms(self, dag_triples):
        bad = 0
        for a, b, c in dag_triples:
            if shd(a, a) != 0 or shd(a, b) != shd(b, a):
                bad += 1
            elif shd(a, b) > shd(a, c) + shd(c, b):
                bad += 1
        check("criterion 7b (shd metric axioms)", bad == 0,
              f"1000 random triples at d<=6, {bad} violations")


class TestCriterion8StructuralInvariants:
    def test_fuzzed_layer_adjustment(self):
        rng = np.random.default_rng(11)
        cases = 10_000
        bad = 0
        for _ in range(cases):
            d = int(rng.integers(2, 9))
            alpha = float(rng.choice((0.01, 0.05, 0.1)))
            p = rng.random((d, d)) ** int(rng.integers(1, 4))
            np.fill_diagonal(p, 1.0)
            pm = PValueMatrix(p, alpha)
            a = ((p <= alpha) & ~np.eye(d, dtype=bool)).astype(np.uint8)
            og = OrderingGraph(a, pm)
            layering, og2 = adjust_layers(pm, og)
            if not is_acyclic(og2.a_tp):
                bad += 1
                continue
            edges = np.argwhere(og2.a_tp == 1)
            if any(layering.layer_of[i] <= layering.layer_of[j] for i, j in edges):
                bad += 1
            elif (og2.a_tp > og.a_tp).any() or (og2.derived_from.p < pm.p - 1e-15).any():
                bad += 1
        check("criterion 8a (fuzzed acyclicity + layers + monotone repair)",
              bad == 0, f"{cases} random p-matrices, {bad} violations")

    def test_prune_containment_on_pipeline(self, sin_10_10_observational):
        cfg, report = sin_10_10_observational
        violations = 0
        for rep in report.ok:
            rd = cfg.output_dir / f"rep-{rep.index}"
            og = OrderingGraph.from_json((rd / "ordering.json").read_text())
            est = Dag.from_json((rd / "dag.json").read_text())
            if not ((est.adj == 1) <= (og.a_tp == 1)).all():
                violations += 1
            if rep.n_prune != int(og.a_tp.sum()) - est.n_edges or rep.n_prune < 0:
                violations += 1
        check("criterion 8b (prune output within ordering graph)",
              violations == 0, f"{len(report.ok)} replications, {violations} violations")

    def test_prune_monotone_in_beta(self):
        dag = sample_dag(6, 7, seed=31)
        data = simulate(ScmConfig(d=6, e=7, t_slices=(1, 2), n=800, seed=32), dag)
        closure = reachability(dag.adj).astype(np.uint8)
        p = np.where(closure == 1, 0.001, 1.0)
        np.fill_diagonal(p, 1.0)
        og = OrderingGraph(closure, PValueMatrix(p, 0.01))
        prev: set = set()
        ok = True
        for beta in (1e-5, 1e-4, 1e-3, 1e-2, 0.05):
            est = prune(data, og, PruneConfig(beta=beta))
            edges = set(est.edges())
            if not prev <= edges:
                ok = False
            prev = edges
        check("criterion 8c (pruning monotone in beta)", ok,
              "edge sets nested across beta in {1e-5..0.05}")

    def test_full_run_determinism(self, bench_dir):
        outs = []
        for tag in ("det-a", "det-b"):
            cfg = bench_config(bench_dir, tag, d=6, e=6, slices=(0, 1), frac=1.0,
                               method="htit", reps=2, n=200, seed=99)
            run_experiment(cfg)
            outs.append(cfg.output_dir)
        same_metrics = ((outs[0] / "metrics.csv").read_bytes()
                        == (outs[1] / "metrics.csv").read_bytes())
        same_dags = all(
            (outs[0] / f"rep-{r}" / "dag.json").read_bytes()
            == (outs[1] / f"rep-{r}" / "dag.json").read_bytes()
            for r in range(2))
        check("criterion 8d (full-run determinism by seed)",
              same_metrics and same_dags,
              "metrics.csv and dag.json byte-identical across reruns")


class TestLargeGraphSmoke:
    def test_d50_three_replications_complete(self, bench_dir):
        # accuracy thresholds do not apply at this scale; the run must merely
        # complete with structural invariants intact
        cfg = bench_config(bench_dir, "sin-50-50-smoke", d=50, e=50,
                           slices=(0, 1), frac=1.0, method="htit", reps=3,
                           seed=77)
        report = run_experiment(cfg)
        violations = 0
        for rep in report.ok:
            rd = cfg.output_dir / f"rep-{rep.index}"
            og = OrderingGraph.from_json((rd / "ordering.json").read_text())
            est = Dag.from_json((rd / "dag.json").read_text())
            if not is_acyclic(og.a_tp) or not ((est.adj == 1) <= (og.a_tp == 1)).all():
                violations += 1
        ok = report.n_failed == 0 and violations == 0
        check("d=50 smoke run", ok,
              f"3 replications, {report.n_failed} failures, "
              f"{violations} invariant violations")
