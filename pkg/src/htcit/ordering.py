"""Hierarchical topological ordering from per-variable CI tests.

Stage 1 builds the p-value matrix P and its thresholded adjacency (the
descendant graph): entry (i, j) tests the slice-tau copy of variable i
against the slice-t copy of variable j given i's conditioning block.
Stage 2 assigns nodes to layers bottom-up and repairs cycles by p-value
reassignment, which guarantees an acyclic result.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .kerneltest import DegenerateInputError, KernelConfig, TestResult, hsic_test, kci_test
from .simgen import TwoSliceDataset

MODE_CIT = "cit"
MODE_IT = "it"


@dataclass(frozen=True)
class PValueMatrix:
    """d x d matrix of CI-test p-values; the diagonal is never tested."""

    p: np.ndarray
    alpha: float = 0.01

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("p-value matrix must be square")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("p-values must lie in [0, 1]")
        if not np.allclose(np.diagonal(p), 1.0):
            raise ValueError("diagonal p-values are fixed at 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def d(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class OrderingGraph:
    """Thresholded ordering adjacency: a_tp[i, j] = 1 means j descends from i."""

    a_tp: np.ndarray
    derived_from: PValueMatrix

    def __post_init__(self):
        a = np.asarray(self.a_tp, dtype=np.uint8)
        pm = self.derived_from
        if a.shape != pm.p.shape:
            raise ValueError("adjacency and p-value matrix shapes differ")
        if np.diagonal(a).any():
            raise ValueError("ordering adjacency diagonal must be zero")
        expected = (pm.p <= pm.alpha) & ~np.eye(pm.d, dtype=bool)
        if not (a.astype(bool) == expected).all():
            raise ValueError("a_tp inconsistent with thresholded p-values")
        a.setflags(write=False)
        object.__setattr__(self, "a_tp", a)

    @property
    def d(self) -> int:
        return self.a_tp.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.a_tp.sum())

    def to_json(self) -> str:
        return json.dumps({
            "alpha": self.derived_from.alpha,
            "a_tp": self.a_tp.tolist(),
            "p_values": self.derived_from.p.tolist(),
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "OrderingGraph":
        obj = json.loads(text)
        pm = PValueMatrix(np.asarray(obj["p_values"], dtype=np.float64),
                          float(obj["alpha"]))
        return cls(np.asarray(obj["a_tp"], dtype=np.uint8), pm)


@dataclass(frozen=True)
class LayeredOrdering:
    """Node partition L_1..L_K, bottom (leaf) layer first."""

    layers: tuple[tuple[int, ...], ...]
    layer_of: np.ndarray  # 1-based layer index per node

    def __post_init__(self):
        layer_of = np.asarray(self.layer_of, dtype=np.int64)
        seen: set[int] = set()
        for k, layer in enumerate(self.layers, start=1):
            if not layer:
                raise ValueError("layers must be nonempty")
            for node in layer:
                if node in seen:
                    raise ValueError(f"node {node} assigned twice")
                seen.add(node)
                if layer_of[node] != k:
                    raise ValueError("layer_of inconsistent with layers")
        if seen != set(range(layer_of.shape[0])):
            raise ValueError("layers must partition the node set")
        layer_of.setflags(write=False)
        object.__setattr__(self, "layer_of", layer_of)
        object.__setattr__(self, "layers", tuple(tuple(t) for t in self.layers))

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def to_json(self) -> str:
        return json.dumps({
            "layers": [list(t) for t in self.layers],
            "layer_of": self.layer_of.tolist(),
        }, indent=2)


@dataclass(frozen=True)
class ConditioningPlan:
    """Per-node conditioning sets over slice-tau variables plus per-node mode."""

    cond_sets: tuple[tuple[int, ...], ...]
    modes: tuple[str, ...]

    def __post_init__(self):
        if len(self.cond_sets) != len(self.modes):
            raise ValueError("cond_sets and modes lengths differ")
        for i, (cs, mode) in enumerate(zip(self.cond_sets, self.modes)):
            if mode not in (MODE_CIT, MODE_IT):
                raise ValueError(f"unknown mode {mode!r}")
            if i in cs:
                raise ValueError(f"node {i} may not condition on itself")
            if mode == MODE_IT and cs:
                raise ValueError(f"intervened node {i} must have an empty set")
        object.__setattr__(self, "cond_sets",
                           tuple(tuple(sorted(cs)) for cs in self.cond_sets))

    @property
    def d(self) -> int:
        return len(self.cond_sets)


def empty_plan(d: int) -> ConditioningPlan:
    """All-empty conditioning sets: marginal tests everywhere (intervention mode)."""
    return ConditioningPlan(tuple(() for _ in range(d)),
                            tuple(MODE_IT for _ in range(d)))


class CITester(Protocol):
    """Answers the two kinds of independence queries the ordering stage issues."""

    def marginal_test(self, data: TwoSliceDataset, i: int, j: int) -> TestResult:
        """Test X_i at slice tau against X_j at slice tau."""

    def cond_test(self, data: TwoSliceDataset, i: int, j: int,
                  cond: tuple[int, ...]) -> TestResult:
        """Test X_i at slice tau against X_j at slice t given slice-tau cond."""


class KernelCITester:
    """Kernel test adapter with per-dataset caches for the batched stage-1 sweep.

    Caches the standardized columns, the per-target centered Gram matrices and
    the per-source residual projector so the d*(d-1) tests share their setup.
    """

    def __init__(self, kcfg: KernelConfig | None = None, *, null: str = "gamma",
                 seed: int = 0):
        self.kcfg = kcfg or KernelConfig()
        self.null = null
        self.seed = seed
        self._cache_key: int | None = None
        self._y_grams: dict[int, np.ndarray] = {}
        self._row_ctx: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}

    def _reset_for(self, data: TwoSliceDataset) -> None:
        key = id(data)
        if key != self._cache_key:
            self._cache_key = key
            self._y_grams.clear()
            self._row_ctx.clear()

    def marginal_test(self, data: TwoSliceDataset, i: int, j: int) -> TestResult:
        return hsic_test(data.x_tau[:, i], data.x_tau[:, j], self.kcfg,
                         null=self.null, seed=self.seed)

    def cond_test(self, data: TwoSliceDataset, i: int, j: int,
                  cond: tuple[int, ...]) -> TestResult:
        if not cond:
            return hsic_test(data.x_tau[:, i], data.x_t[:, j], self.kcfg,
                             null=self.null, seed=self.seed)
        if self.kcfg.subsample_cap is not None and data.n > self.kcfg.subsample_cap:
            # subsampling draws fresh rows per call; skip the shared caches
            return kci_test(data.x_tau[:, i], data.x_t[:, j],
                            data.x_tau[:, list(cond)], self.kcfg,
                            null=self.null, seed=self.seed)
        self._reset_for(data)
        return self._cached_kci(data, i, j, cond)

    def _cached_kci(self, data: TwoSliceDataset, i: int, j: int,
                    cond: tuple[int, ...]) -> TestResult:
        from . import backend as ops
        from .kerneltest import (_gamma_pvalue, _gram, _perm_pvalue,
                                 _residual_projector, _standardize)

        n = data.n
        rule = self.kcfg.bandwidth_rule
        key = (i,) + tuple(cond)
        if key not in self._row_ctx:
            zs = _standardize(data.x_tau[:, list(cond)], "z")
            xs = _standardize(data.x_tau[:, i], f"x_tau[{i}]")
            Kx = _gram(np.column_stack([xs, 0.5 * zs]), rule)
            Kz = _gram(zs, rule)
            Rz = _residual_projector(Kz, self.kcfg.ridge * n)
            self._row_ctx[key] = (Rz, Rz @ Kx @ Rz)
        if j not in self._y_grams:
            ys = _standardize(data.x_t[:, j], f"x_t[{j}]")
            self._y_grams[j] = _gram(ys.reshape(-1, 1), rule)
        Rz, KXz = self._row_ctx[key]
        KYz = Rz @ self._y_grams[j] @ Rz
        sta, diag_dot, had_sq = ops.hadamard_moments(KXz, KYz)
        if self.null == "gamma":
            p = _gamma_pvalue(sta, diag_dot, 2.0 * had_sq)
            method = "gamma"
        else:
            rng = np.random.default_rng(self.seed)
            p = _perm_pvalue(KXz, KYz, sta, self.kcfg.permutations, rng)
            method = f"permutation({self.kcfg.permutations})"
        return TestResult(max(sta, 0.0) / n**2, p, method, n)


def build_conditioning_plan(data: TwoSliceDataset, kcfg: KernelConfig | None = None,
                            alpha: float = 0.01,
                            tester: CITester | None = None) -> ConditioningPlan:
    """Conditioning block per node: all slice-tau variables dependent on it.

    Dependence is decided by the marginal test at `alpha`; intervened nodes
    get an empty block and intervention mode, since their slice-tau values
    are exogenous randomizations.
    """
    if data.n < 20:
        raise ValueError("need at least 20 samples")
    tester = tester or KernelCITester(kcfg)
    d = data.d
    dependent = np.zeros((d, d), dtype=bool)
    for i in range(d):
        for j in range(i + 1, d):
            if data.intervened[i] and data.intervened[j]:
                continue  # neither endpoint consumes the result
            try:
                res = tester.marginal_test(data, i, j)
            except DegenerateInputError as exc:
                raise DegenerateInputError(
                    f"marginal test for variables ({i}, {j}): {exc}") from exc
            dependent[i, j] = dependent[j, i] = res.p_value <= alpha
    cond_sets, modes = [], []
    for i in range(d):
        if data.intervened[i]:
            cond_sets.append(())
            modes.append(MODE_IT)
        else:
            cond_sets.append(tuple(int(j) for j in np.flatnonzero(dependent[i])))
            modes.append(MODE_CIT)
    return ConditioningPlan(tuple(cond_sets), tuple(modes))


def build_ordering(data: TwoSliceDataset, plan: ConditioningPlan,
                   kcfg: KernelConfig | None = None, alpha: float = 0.01,
                   tester: CITester | None = None
                   ) -> tuple[PValueMatrix, OrderingGraph]:
    """Stage 1: p[i, j] from the per-pair conditional test, thresholded at alpha."""
    if plan.d != data.d:
        raise ValueError(f"plan covers {plan.d} nodes, data has {data.d}")
    tester = tester or KernelCITester(kcfg)
    d = data.d
    p = np.ones((d, d), dtype=np.float64)
    for i in range(d):
        cond = plan.cond_sets[i]
        for j in range(d):
            if j == i:
                continue
            try:
                res = tester.cond_test(data, i, j, cond)
            except DegenerateInputError as exc:
                raise DegenerateInputError(
                    f"conditional test for pair ({i}, {j}): {exc}") from exc
            p[i, j] = res.p_value
    pm = PValueMatrix(p, alpha)
    a = ((p <= alpha) & ~np.eye(d, dtype=bool)).astype(np.uint8)
    return pm, OrderingGraph(a, pm)


def adjust_layers(pm: PValueMatrix, og: OrderingGraph
                  ) -> tuple[LayeredOrdering, OrderingGraph]:
    """Stage 2: bottom-up layer assignment with cycle repair.

    Nodes with no remaining descendants among the unassigned set form the
    next layer.  When no such node exists, the largest significant p-value in
    the unassigned submatrix is reassigned to 2*alpha (ties broken by smallest
    (i, j)) and its edge deleted, until a leaf appears.
    """
    d = pm.d
    alpha = pm.alpha
    p = pm.p.copy()
    a = og.a_tp.copy()
    unassigned = np.ones(d, dtype=bool)
    layers: list[tuple[int, ...]] = []
    layer_of = np.zeros(d, dtype=np.int64)
    k = 0
    while unassigned.any():
        k += 1
        while True:
            idx = np.flatnonzero(unassigned)
            sub = a[np.ix_(idx, idx)]
            leaf_rows = sub.sum(axis=1) == 0
            if leaf_rows.any():
                break
            # repair: largest significant p among unassigned pairs, lexicographic ties
            cand = np.argwhere(sub == 1)
            pvals = p[idx[cand[:, 0]], idx[cand[:, 1]]]
            best = pvals.max()
            where = cand[pvals == best]
            order = np.lexsort((where[:, 1], where[:, 0]))
            bi, bj = idx[where[order[0], 0]], idx[where[order[0], 1]]
            p[bi, bj] = 2.0 * alpha
            a[bi, bj] = 0
        leaves = idx[leaf_rows]
        layers.append(tuple(int(v) for v in leaves))
        layer_of[leaves] = k
        unassigned[leaves] = False
    pm2 = PValueMatrix(p, alpha)
    return (LayeredOrdering(tuple(layers), layer_of), OrderingGraph(a, pm2))


def discover_ordering(data: TwoSliceDataset, kcfg: KernelConfig | None = None,
                      alpha: float = 0.01, tester: CITester | None = None,
                      plan: ConditioningPlan | None = None
                      ) -> tuple[PValueMatrix, OrderingGraph, LayeredOrdering]:
    """Stages 1-2 composed: plan, p-value matrix, layer-repaired ordering."""
    tester = tester or KernelCITester(kcfg)
    if plan is None:
        plan = build_conditioning_plan(data, kcfg, alpha, tester=tester)
    pm, og = build_ordering(data, plan, kcfg, alpha, tester=tester)
    layering, og2 = adjust_layers(pm, og)
    return og2.derived_from, og2, layering
