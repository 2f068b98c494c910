"""Kernel (conditional) independence tests with Gaussian kernels.

The marginal test uses the doubly-centered Gram trace statistic with a
gamma moment-matched null; the conditional test residualizes the kernel
features on the conditioning block by kernel ridge regression first.
Permutation nulls are available on request.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.stats import gamma as _gamma

from . import backend as ops


class DegenerateInputError(ValueError):
    """An input column is constant, so the kernel bandwidth is undefined."""


@dataclass(frozen=True)
class KernelConfig:
    """Knobs of the kernel tests.

    bandwidth_rule: "median" for the median pairwise-distance heuristic, or a
        fixed positive float used as the kernel width directly.
    ridge: per-sample ridge factor of the conditional residualization; the
        effective regularizer is ridge * n.
    permutations: permutation count when the permutation null is requested.
    subsample_cap: optional row cap applied before kernelization; bounds the
        O(n^2) memory at the cost of an approximation.
    """

    bandwidth_rule: str | float = "median"
    ridge: float = 1e-3
    permutations: int = 500
    subsample_cap: int | None = None

    def __post_init__(self):
        if isinstance(self.bandwidth_rule, str):
            if self.bandwidth_rule != "median":
                raise ValueError("bandwidth_rule must be 'median' or a fixed width")
        elif not self.bandwidth_rule > 0:
            raise ValueError("fixed bandwidth must be positive")
        if not self.ridge > 0:
            raise ValueError("ridge must be positive")
        if self.permutations < 99:
            raise ValueError("permutation count must be at least 99")
        if self.subsample_cap is not None and self.subsample_cap < 20:
            raise ValueError("subsample_cap must be at least 20")


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class despite the name

    statistic: float
    p_value: float
    null_method: str  # "gamma" or "permutation(<count>)"
    n_used: int
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
        if self.statistic < 0:
            raise ValueError(f"statistic {self.statistic} must be nonnegative")


def _standardize(v: np.ndarray, what: str) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=np.float64)
    sd = v.std(axis=0)
    if np.any(sd == 0):
        raise DegenerateInputError(f"{what} is constant; bandwidth undefined")
    return (v - v.mean(axis=0)) / sd


def _median_width(X: np.ndarray) -> float:
    D2 = ops.pairwise_sq_dists(X)
    iu = np.triu_indices(X.shape[0], 1)
    med2 = float(np.median(D2[iu]))
    if med2 <= 0.0:
        pos = D2[iu][D2[iu] > 0]
        if pos.size == 0:
            raise DegenerateInputError("all points identical; bandwidth undefined")
        med2 = float(np.min(pos))
    return float(np.sqrt(med2))


def _gram(X: np.ndarray, rule: str | float) -> np.ndarray:
    """Centered Gaussian Gram matrix of the rows of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    sigma = _median_width(X) if rule == "median" else float(rule)
    K = ops.rbf_gram(X, 1.0 / (2.0 * sigma * sigma))
    ops.center_gram(K)
    return K


def _gamma_pvalue(sta: float, mean: float, var: float) -> float:
    if mean <= 0.0 or var <= 0.0:
        return 1.0
    shape = mean * mean / var
    scale = var / mean
    return float(_gamma.sf(sta, a=shape, scale=scale))


def _perm_pvalue(Kc: np.ndarray, Lc: np.ndarray, sta: float, count: int,
                 rng: np.random.Generator) -> float:
    n = Kc.shape[0]
    perms = np.stack([rng.permutation(n) for _ in range(count)]).astype(np.int64)
    stats = ops.perm_trace_stats(Kc, Lc, perms)
    return float((1 + int((stats >= sta).sum())) / (count + 1))


def _maybe_subsample(arrays: Sequence[np.ndarray], cap: int | None,
                     rng: np.random.Generator) -> tuple[list[np.ndarray], int]:
    n = arrays[0].shape[0]
    if cap is None or n <= cap:
        return list(arrays), n
    idx = np.sort(rng.choice(n, size=cap, replace=False))
    return [a[idx] for a in arrays], cap


def hsic_test(x: np.ndarray, y: np.ndarray, cfg: KernelConfig | None = None, *,
              null: str = "gamma", seed: int = 0) -> TestResult:
    """Marginal kernel independence test between two sample vectors."""
    cfg = cfg or KernelConfig()
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 20:
        raise ValueError("need at least 20 samples")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("inputs must be finite")
    rng = np.random.default_rng(seed)
    (x, y), n = _maybe_subsample((x, y), cfg.subsample_cap, rng)

    Kc = _gram(_standardize(x, "x").reshape(-1, 1), cfg.bandwidth_rule)
    Lc = _gram(_standardize(y, "y").reshape(-1, 1), cfg.bandwidth_rule)
    sta, _, _ = ops.hadamard_moments(Kc, Lc)

    if null == "gamma":
        mean = float(np.trace(Kc)) * float(np.trace(Lc)) / n
        var = 2.0 * ops.sum_hadamard(Kc, Kc) * ops.sum_hadamard(Lc, Lc) / n**2
        p = _gamma_pvalue(sta, mean, var)
        method = "gamma"
    elif null == "permutation":
        p = _perm_pvalue(Kc, Lc, sta, cfg.permutations, rng)
        method = f"permutation({cfg.permutations})"
    else:
        raise ValueError(f"unknown null method {null!r}")
    return TestResult(max(sta, 0.0) / n**2, p, method, n)


def _residual_projector(Kz_centered: np.ndarray, lam: float) -> np.ndarray:
    """lam * (Kz + lam I)^-1, the kernel ridge residual-maker matrix."""
    n = Kz_centered.shape[0]
    A = Kz_centered + lam * np.eye(n)
    cho = sla.cho_factor(A, lower=True, check_finite=False)
    return lam * sla.cho_solve(cho, np.eye(n), check_finite=False)


def _kci_from_grams(Kx: np.ndarray, Ky: np.ndarray, Rz: np.ndarray,
                    n: int, null: str, permutations: int,
                    rng: np.random.Generator) -> tuple[float, float, str]:
    KXz = Rz @ Kx @ Rz
    KYz = Rz @ Ky @ Rz
    sta, diag_dot, had_sq = ops.hadamard_moments(KXz, KYz)
    if null == "gamma":
        p = _gamma_pvalue(sta, diag_dot, 2.0 * had_sq)
        return sta, p, "gamma"
    if null == "permutation":
        p = _perm_pvalue(KXz, KYz, sta, permutations, rng)
        return sta, p, f"permutation({permutations})"
    raise ValueError(f"unknown null method {null!r}")


def kci_test(x: np.ndarray, y: np.ndarray, z: np.ndarray | None,
             cfg: KernelConfig | None = None, *, null: str = "gamma",
             seed: int = 0) -> TestResult:
    """Kernel conditional independence test of x vs y given the columns of z.

    The Gram features of x (augmented with z, following the usual conditional
    construction) and of y are residualized on z by kernel ridge regression;
    the null of the trace statistic is gamma moment-matched through the
    spectral product identity, or simulated by residual permutation.
    """
    cfg = cfg or KernelConfig()
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    z = (np.zeros((x.shape[0], 0)) if z is None
         else np.asarray(z, dtype=np.float64).reshape(x.shape[0], -1))
    if z.shape[1] == 0:
        return hsic_test(x, y, cfg, null=null, seed=seed)
    if y.shape[0] != x.shape[0]:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 20:
        raise ValueError("need at least 20 samples")
    if not (np.isfinite(x).all() and np.isfinite(y).all() and np.isfinite(z).all()):
        raise ValueError("inputs must be finite")

    warnings: tuple[str, ...] = ()
    keep = z.std(axis=0) > 0
    if not keep.all():
        dropped = [int(c) for c in np.flatnonzero(~keep)]
        warnings = (f"dropped constant conditioning columns {dropped}",)
        z = z[:, keep]
        if z.shape[1] == 0:
            r = hsic_test(x, y, cfg, null=null, seed=seed)
            return TestResult(r.statistic, r.p_value, r.null_method, r.n_used,
                              warnings)

    rng = np.random.default_rng(seed)
    (x, y, z), n = _maybe_subsample((x, y, z), cfg.subsample_cap, rng)

    xs = _standardize(x, "x")
    ys = _standardize(y, "y")
    zs = _standardize(z, "z")
    Kx = _gram(np.column_stack([xs, 0.5 * zs]), cfg.bandwidth_rule)
    Ky = _gram(ys.reshape(-1, 1), cfg.bandwidth_rule)
    Kz = _gram(zs, cfg.bandwidth_rule)
    Rz = _residual_projector(Kz, cfg.ridge * n)
    sta, p, method = _kci_from_grams(Kx, Ky, Rz, n, null, cfg.permutations, rng)
    return TestResult(max(sta, 0.0) / n**2, p, method, n, warnings)
