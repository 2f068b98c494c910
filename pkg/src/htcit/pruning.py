"""Spurious-edge pruning by additive-model significance testing.

For each node, the slice-t target is regressed on basis expansions of its
candidate parents' slice-t values; an edge survives when dropping its basis
block significantly worsens the fit (per-covariate F-test at beta).
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.stats import f as _fdist

from .graphs import Dag, is_acyclic
from .ordering import OrderingGraph
from .simgen import TwoSliceDataset


class PruneStabilityWarning(UserWarning):
    """A node's design matrix was rank deficient; a ridge-stabilized fit was used."""


@dataclass(frozen=True)
class PruneConfig:
    beta: float = 0.001
    basis: str = "cubic-spline"  # or "polynomial"
    knots: int = 10
    degree: int = 3
    min_samples: int = 20

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.basis not in ("cubic-spline", "polynomial"):
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.basis == "cubic-spline" and self.knots < 4:
            raise ValueError("cubic-spline basis needs knots >= 4")
        if self.basis == "polynomial" and self.degree < 1:
            raise ValueError("polynomial basis needs degree >= 1")
        if self.min_samples < 1:
            raise ValueError("min_samples must be positive")


def _spline_block(v: np.ndarray, knots: int) -> np.ndarray:
    """Centered cubic B-spline design block with `knots` - 1 free columns.

    Knot placement at empirical quantiles; the first basis column is dropped
    because the basis sums to one (collinear with the intercept).
    """
    lo, hi = float(v.min()), float(v.max())
    n_interior = knots - 4
    q = np.quantile(v, np.linspace(0, 1, n_interior + 2)[1:-1])
    interior = np.unique(q[(q > lo) & (q < hi)])
    t = np.r_[[lo] * 4, interior, [hi] * 4]
    B = BSpline.design_matrix(v, t, 3).toarray()
    B = B[:, 1:]
    return B - B.mean(axis=0)


def _poly_block(v: np.ndarray, degree: int) -> np.ndarray:
    B = np.column_stack([v**k for k in range(1, degree + 1)])
    return B - B.mean(axis=0)


def _basis_block(v: np.ndarray, cfg: PruneConfig) -> np.ndarray:
    sd = v.std()
    vs = (v - v.mean()) / sd if sd > 0 else v - v.mean()
    if cfg.basis == "cubic-spline":
        return _spline_block(vs, cfg.knots)
    return _poly_block(vs, cfg.degree)


def _rss(X: np.ndarray, y: np.ndarray) -> tuple[float, int]:
    """Residual sum of squares of least squares y ~ X; returns (rss, rank)."""
    if X.shape[1] == 0:
        return float(y @ y), 0
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    return float(r @ r), int(rank)


def _rss_ridge(X: np.ndarray, y: np.ndarray, lam: float) -> float:
    if X.shape[1] == 0:
        return float(y @ y)
    G = X.T @ X + lam * np.eye(X.shape[1])
    coef = np.linalg.solve(G, X.T @ y)
    r = y - X @ coef
    return float(r @ r)


def _additive_ftest_pvalues(data: TwoSliceDataset, j: int,
                            candidates: Sequence[int],
                            cfg: PruneConfig) -> np.ndarray:
    """P-values of the per-candidate F-tests in the additive fit for node j.

    The target's own slice-tau value enters as an always-kept nuisance block:
    it absorbs the autoregressive lag term, whose omission would otherwise
    bias the candidate tests toward ancestors (they carry lag information).
    """
    n = data.n
    y = data.x_t[:, j] - data.x_t[:, j].mean()
    lag_col = data.x_tau[:, j]
    lag = (_basis_block(lag_col, cfg) if lag_col.std() > 0
           else np.zeros((n, 0)))
    blocks = [_basis_block(data.x_t[:, i], cfg) for i in candidates]
    widths = [b.shape[1] for b in blocks]
    X_full = np.column_stack(blocks + [lag])
    p_full = X_full.shape[1]
    rss_full, rank = _rss(X_full, y)
    ridge = rank < p_full
    if ridge:
        _warnings.warn(
            f"node {j}: design rank {rank} < {p_full} columns; "
            "using ridge-stabilized fits", PruneStabilityWarning, stacklevel=3)
        lam = 1e-8 * n
        rss_full = _rss_ridge(X_full, y, lam)
    dof = n - 1 - p_full
    if dof <= 0:
        _warnings.warn(
            f"node {j}: {p_full} parameters with only {n} samples; "
            "using ridge-stabilized fits", PruneStabilityWarning, stacklevel=3)
        ridge, lam = True, 1e-8 * n
        rss_full = _rss_ridge(X_full, y, lam)
        dof = 1
    pvals = np.empty(len(candidates))
    offsets = np.cumsum([0] + widths)
    for c in range(len(candidates)):
        keep = np.r_[0:offsets[c], offsets[c + 1]:p_full].astype(int)
        X_red = X_full[:, keep]
        rss_red = _rss_ridge(X_red, y, lam) if ridge else _rss(X_red, y)[0]
        q = widths[c]
        num = max(rss_red - rss_full, 0.0) / q
        den = rss_full / dof
        stat = num / den if den > 0 else np.inf
        pvals[c] = float(_fdist.sf(stat, q, dof))
    return pvals


SignificanceFn = Callable[[TwoSliceDataset, int, Sequence[int], PruneConfig],
                          np.ndarray]


def prune(data: TwoSliceDataset, og: OrderingGraph, cfg: PruneConfig | None = None,
          significance: SignificanceFn | None = None) -> Dag:
    """Stage 3: keep a candidate edge i -> j iff its block test has p <= beta."""
    cfg = cfg or PruneConfig()
    if not is_acyclic(og.a_tp):
        raise ValueError("ordering graph must be acyclic; run adjust_layers first")
    if data.d != og.d:
        raise ValueError(f"data has {data.d} variables, ordering graph {og.d}")
    if data.n < cfg.min_samples:
        raise ValueError(f"need at least {cfg.min_samples} samples, got {data.n}")
    significance = significance or _additive_ftest_pvalues
    d = data.d
    adj = np.zeros((d, d), dtype=np.uint8)
    for j in range(d):
        candidates = [int(i) for i in np.flatnonzero(og.a_tp[:, j])]
        if not candidates:
            continue
        pvals = np.asarray(significance(data, j, candidates, cfg))
        for i, p in zip(candidates, pvals):
            if p <= cfg.beta:
                adj[i, j] = 1
    return Dag(adj, data.labels)
