"""Graph-truth CI oracle for the two-slice model.

Answers the ordering stage's independence queries by d-separation on the
unrolled time graph instead of kernel statistics, so the discovery pipeline
can be validated against exact graph-theoretic ground truth.  The unrolled
graph has one node per (slice, variable): slice 0 holds the independent
initial state, every later slice carries the instantaneous structure plus
the one-step lag edge, and randomized slice-tau variables lose their
incoming edges (do-semantics).
"""

from __future__ import annotations

import numpy as np

from .graphs import Dag, d_separated
from .kerneltest import TestResult
from .ordering import MODE_CIT, MODE_IT, ConditioningPlan
from .simgen import TwoSliceDataset

_P_DEP = 0.0
_P_INDEP = 1.0


class DSeparationOracle:
    """CI tester backed by d-separation on the unrolled two-slice graph."""

    def __init__(self, truth: Dag, t_slices: tuple[int, int],
                 intervened: np.ndarray | None = None):
        tau, t = t_slices
        if not (0 <= tau < t):
            raise ValueError(f"slices must satisfy 0 <= tau < t, got {t_slices}")
        self.truth = truth
        self.tau = tau
        self.t = t
        d = truth.d
        self.intervened = (np.zeros(d, dtype=bool) if intervened is None
                           else np.asarray(intervened, dtype=bool))
        self._adj = self._unroll()

    def _unroll(self) -> np.ndarray:
        d = self.truth.d
        n_slices = self.t + 1
        big = np.zeros((n_slices * d, n_slices * d), dtype=np.uint8)
        for s in range(1, n_slices):
            off = s * d
            big[off:off + d, off:off + d] = self.truth.adj
            for i in range(d):
                big[(s - 1) * d + i, off + i] = 1  # lag edge
        for i in np.flatnonzero(self.intervened):
            big[:, self.tau * d + int(i)] = 0  # randomization cuts incoming edges
        return big

    def _node(self, s: int, i: int) -> int:
        return s * self.truth.d + i

    @staticmethod
    def _result(dependent: bool, n: int) -> TestResult:
        p = _P_DEP if dependent else _P_INDEP
        return TestResult(1.0 if dependent else 0.0, p, "d-separation", n)

    def marginal_test(self, data: TwoSliceDataset, i: int, j: int) -> TestResult:
        dep = not d_separated(self._adj, self._node(self.tau, i),
                              self._node(self.tau, j), ())
        return self._result(dep, data.n)

    def cond_test(self, data: TwoSliceDataset, i: int, j: int,
                  cond: tuple[int, ...]) -> TestResult:
        z = [self._node(self.tau, c) for c in cond]
        dep = not d_separated(self._adj, self._node(self.tau, i),
                              self._node(self.t, j), z)
        return self._result(dep, data.n)

    def theorem_plan(self) -> ConditioningPlan:
        """Conditioning on each node's slice-tau ancestors.

        This is the ancestor-block criterion whose exactness the oracle tests
        certify: with it, descendants and only descendants of each variable
        fail the conditional independence test.  The data-driven plan instead
        uses all marginally dependent slice-tau variables, which the oracle's
        ancestor sets are a subset of.
        """
        reach = self.truth.reachability()
        cond_sets, modes = [], []
        for i in range(self.truth.d):
            if self.intervened[i]:
                cond_sets.append(())
                modes.append(MODE_IT)
            else:
                cond_sets.append(tuple(int(a) for a in np.flatnonzero(reach[:, i])))
                modes.append(MODE_CIT)
        return ConditioningPlan(tuple(cond_sets), tuple(modes))
