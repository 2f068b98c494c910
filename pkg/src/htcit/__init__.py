"""Causal DAG discovery from two time-slices of multivariate data.

The pipeline builds a hierarchical topological ordering from one conditional
independence test per variable pair (slice-tau value against slice-t value,
given the slice-tau conditioning block), repairs any cycles by p-value
reassignment, and prunes the remaining spurious edges with additive-model
significance tests.  A ground-truthed simulator and a replicated benchmark
harness round out the package.
"""

from .backend import BACKEND
from .graphs import Dag
from .harness import ExperimentConfig, run_experiment
from .kerneltest import (DegenerateInputError, KernelConfig, TestResult,
                         hsic_test, kci_test)
from .metrics import EvalReport, ReplicationResult, dis, f1, n_prune, shd, sid
from .oracle import DSeparationOracle
from .ordering import (ConditioningPlan, KernelCITester, LayeredOrdering,
                       OrderingGraph, PValueMatrix, adjust_layers,
                       build_conditioning_plan, build_ordering,
                       discover_ordering, empty_plan)
from .pruning import PruneConfig, PruneStabilityWarning, prune
from .simgen import (CsvParseError, ScmConfig, TwoSliceDataset, load_dataset,
                     load_two_slice_csv, sample_dag, save_dataset, simulate)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConditioningPlan", "CsvParseError", "Dag",
    "DegenerateInputError", "DSeparationOracle", "EvalReport",
    "ExperimentConfig", "KernelCITester", "KernelConfig", "LayeredOrdering",
    "OrderingGraph", "PruneConfig", "PruneStabilityWarning", "PValueMatrix",
    "ReplicationResult", "ScmConfig", "TestResult", "TwoSliceDataset",
    "adjust_layers", "build_conditioning_plan", "build_ordering", "dis",
    "discover_ordering", "empty_plan", "f1", "hsic_test", "kci_test",
    "load_dataset", "load_two_slice_csv", "n_prune", "prune", "run_experiment",
    "sample_dag", "save_dataset", "shd", "sid", "simulate",
]
