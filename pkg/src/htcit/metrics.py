"""Structural evaluation metrics between an estimated DAG and the truth."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graphs import Dag, d_separated, is_acyclic, reachability
from .ordering import OrderingGraph


def _check_dims(est: Dag, truth: Dag) -> None:
    if est.d != truth.d:
        raise ValueError(f"node counts differ: {est.d} vs {truth.d}")


def shd(est: Dag, truth: Dag) -> int:
    """Structural Hamming distance over unordered pairs; a reversal counts 1."""
    _check_dims(est, truth)
    a, b = est.adj, truth.adj
    up = np.triu_indices(est.d, 1)
    status_est = a[up].astype(np.int64) + 2 * a.T[up].astype(np.int64)
    status_tru = b[up].astype(np.int64) + 2 * b.T[up].astype(np.int64)
    return int((status_est != status_tru).sum())


def dis(est: Dag, truth: Dag) -> float:
    """Frobenius norm of the adjacency difference (entrywise, reversal = sqrt(2))."""
    _check_dims(est, truth)
    diff = est.adj.astype(np.float64) - truth.adj.astype(np.float64)
    return float(np.sqrt((diff * diff).sum()))


def f1(est: Dag, truth: Dag) -> float:
    """Harmonic mean of directed-edge precision and recall.

    Both graphs empty counts as a perfect match (1.0); exactly one empty is a
    total miss (0.0).
    """
    _check_dims(est, truth)
    a = est.adj.astype(bool)
    b = truth.adj.astype(bool)
    if not a.any() and not b.any():
        return 1.0
    if not a.any() or not b.any():
        return 0.0
    tp = int((a & b).sum())
    fp = int((a & ~b).sum())
    fn = int((~a & b).sum())
    return 2.0 * tp / (2.0 * tp + fp + fn)


def _valid_adjustment(truth_adj: np.ndarray, reach: np.ndarray, i: int, j: int,
                      zset: frozenset[int]) -> bool:
    """Whether Z satisfies the adjustment criterion for (i, j) in the truth.

    (a) Z avoids descendants of nodes on proper causal paths from i to j;
    (b) Z blocks i from j in the proper backdoor graph, where the first edge
    of every proper causal path is removed.
    """
    d = truth_adj.shape[0]
    on_path = np.zeros(d, dtype=bool)
    if reach[i, j]:
        for w in range(d):
            if w != i and reach[i, w] and (w == j or reach[w, j]):
                on_path[w] = True
    if on_path.any():
        forbidden = on_path | reach[on_path].any(axis=0)
        if any(forbidden[z] for z in zset):
            return False
    pbd = truth_adj.copy()
    for c in np.flatnonzero(truth_adj[i]):
        if on_path[c]:
            pbd[i, c] = 0
    return d_separated(pbd, i, j, zset)


def sid(est: Dag, truth: Dag) -> int:
    """Structural intervention distance.

    Counts ordered pairs (i, j) whose intervention distribution is falsely
    inferred when parent adjustment sets are read from the estimate while the
    truth generates the data: a claimed null effect is wrong when j descends
    from i in the truth, and a claimed effect is wrong when the estimated
    parent set of i is not a valid adjustment set for (i, j).
    """
    _check_dims(est, truth)
    if not is_acyclic(est.adj) or not is_acyclic(truth.adj):
        raise ValueError("sid requires acyclic inputs")
    d = est.d
    reach_est = reachability(est.adj)
    reach_tru = reachability(truth.adj)
    count = 0
    for i in range(d):
        zset = frozenset(est.parents(i))
        for j in range(d):
            if j == i:
                continue
            if not reach_est[i, j]:
                count += int(reach_tru[i, j])
            elif not _valid_adjustment(truth.adj, reach_tru, i, j, zset):
                count += 1
    return count


def n_prune(og: OrderingGraph, final: Dag) -> int:
    """Spurious ordering edges removed by pruning."""
    if og.d != final.d:
        raise ValueError(f"node counts differ: {og.d} vs {final.d}")
    return int(og.a_tp.sum()) - int(final.adj.sum())


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    shd: int
    sid: int
    f1: float
    dis: float
    n_prune: int
    n_ordering_edges: int
    runtime_s: float
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index, "shd": self.shd, "sid": self.sid,
            "f1": self.f1, "dis": self.dis, "n_prune": self.n_prune,
            "n_ordering_edges": self.n_ordering_edges,
            "runtime_s": self.runtime_s, "error": self.error,
        }


METRIC_FIELDS = ("shd", "sid", "f1", "dis", "n_prune", "n_ordering_edges",
                 "runtime_s")


@dataclass(frozen=True)
class EvalReport:
    """Per-replication metric rows plus mean/std aggregates."""

    replications: tuple[ReplicationResult, ...]

    @property
    def ok(self) -> tuple[ReplicationResult, ...]:
        return tuple(r for r in self.replications if r.error is None)

    @property
    def n_failed(self) -> int:
        return len(self.replications) - len(self.ok)

    def mean(self, metric: str) -> float:
        vals = [getattr(r, metric) for r in self.ok]
        return float(np.mean(vals)) if vals else float("nan")

    def std(self, metric: str) -> float:
        vals = [getattr(r, metric) for r in self.ok]
        return float(np.std(vals)) if vals else float("nan")

    def aggregates(self) -> dict[str, dict[str, float]]:
        return {m: {"mean": self.mean(m), "std": self.std(m)}
                for m in METRIC_FIELDS}

    def to_json(self) -> str:
        return json.dumps({
            "replications": [r.to_dict() for r in self.replications],
            "aggregates": self.aggregates(),
            "n_failed": self.n_failed,
        }, indent=2)

    def summary_line(self) -> str:
        agg = self.aggregates()
        parts = [f"{m}={agg[m]['mean']:.3f}+-{agg[m]['std']:.3f}"
                 for m in METRIC_FIELDS]
        return " ".join(parts)
