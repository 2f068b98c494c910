"""Ground-truthed simulator: random DAGs and two-time-slice datasets.

Data follow the additive-noise recursion
``X_i^s = link(parents of i at slice s) + link(X_i^{s-1}) + eps_i^s``
rolled forward from an independent initial state, with optional randomized
interventions on the earlier of the two returned slices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .graphs import Dag, default_labels, topological_order

LINKS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "sigmoid": lambda v: 3.0 / (1.0 + np.exp(-v)),
    "poly": lambda v: (v + 2.0) ** 2 / 10.0,
}

# noise family -> (innovation sampler, initial-state sampler); the matching
# initial-state distribution is part of the family.
NOISE_FAMILIES = {
    "gaussian": (
        lambda rng, size: rng.normal(0.0, np.sqrt(0.4), size),
        lambda rng, size: rng.standard_normal(size),
    ),
    "laplace": (
        lambda rng, size: rng.laplace(0.0, 1.0 / np.sqrt(2.0), size),
        lambda rng, size: rng.laplace(0.0, 1.0, size),
    ),
    "uniform": (
        lambda rng, size: rng.uniform(-1.0, 1.0, size),
        lambda rng, size: rng.uniform(-1.0, 1.0, size),
    ),
}


class CsvParseError(ValueError):
    """CSV input failed to parse; the message names the offending location."""


@dataclass(frozen=True)
class ScmConfig:
    """Configuration of one synthetic two-slice dataset."""

    d: int
    e: int
    link: str = "sin"
    noise: str = "gaussian"
    t_slices: tuple[int, int] = (1, 2)
    intervention_fraction: float = 0.0
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.e < 0 or self.e > self.d * (self.d - 1) // 2:
            raise ValueError(f"edge count {self.e} out of range for d={self.d}")
        if self.link not in LINKS:
            raise ValueError(f"unknown link {self.link!r}; choose from {sorted(LINKS)}")
        if self.noise not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise {self.noise!r}; choose from {sorted(NOISE_FAMILIES)}")
        tau, t = self.t_slices
        if not (0 <= tau < t) or t < 1:
            raise ValueError(f"slices must satisfy 0 <= tau < t, got {self.t_slices}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.intervention_fraction <= 1.0:
            raise ValueError("intervention_fraction must lie in [0, 1]")
        object.__setattr__(self, "t_slices", (int(tau), int(t)))

    @property
    def init(self) -> str:
        """Initial-state distribution, pinned to the noise family."""
        return {"gaussian": "normal(0,1)", "laplace": "laplace(0,1)",
                "uniform": "uniform(-1,1)"}[self.noise]

    def to_dict(self) -> dict:
        return {
            "d": self.d, "e": self.e, "link": self.link, "noise": self.noise,
            "t_slices": list(self.t_slices),
            "intervention_fraction": self.intervention_fraction,
            "n": self.n, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ScmConfig":
        obj = dict(obj)
        if "t_slices" in obj:
            obj["t_slices"] = tuple(obj["t_slices"])
        return cls(**obj)


@dataclass(frozen=True)
class TwoSliceDataset:
    """Paired sample matrices for slices tau and t plus intervention flags."""

    x_tau: np.ndarray
    x_t: np.ndarray
    intervened: np.ndarray
    labels: tuple[str, ...] = field(default=())
    truth: Dag | None = None

    def __post_init__(self):
        x_tau = np.asarray(self.x_tau, dtype=np.float64)
        x_t = np.asarray(self.x_t, dtype=np.float64)
        intervened = np.asarray(self.intervened, dtype=bool)
        if x_tau.shape != x_t.shape or x_tau.ndim != 2:
            raise ValueError(
                f"slice matrices must share shape, got {x_tau.shape} vs {x_t.shape}")
        if intervened.shape != (x_tau.shape[1],):
            raise ValueError("intervened flags must have one entry per variable")
        labels = self.labels or default_labels(x_tau.shape[1])
        if len(labels) != x_tau.shape[1]:
            raise ValueError("label count does not match variable count")
        for arr in (x_tau, x_t, intervened):
            arr.setflags(write=False)
        object.__setattr__(self, "x_tau", x_tau)
        object.__setattr__(self, "x_t", x_t)
        object.__setattr__(self, "intervened", intervened)
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def n(self) -> int:
        return self.x_tau.shape[0]

    @property
    def d(self) -> int:
        return self.x_tau.shape[1]


def sample_dag(d: int, e: int, seed: int) -> Dag:
    """Erdos-Renyi style DAG: e edges uniform over pairs, oriented by a random order."""
    if e < 0 or e > d * (d - 1) // 2:
        raise ValueError(f"edge count {e} out of range for d={d}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(d)
    pairs = [(int(order[a]), int(order[b]))
             for a in range(d) for b in range(a + 1, d)]
    adj = np.zeros((d, d), dtype=np.uint8)
    if e:
        for k in rng.choice(len(pairs), size=e, replace=False):
            u, v = pairs[k]
            adj[u, v] = 1
    return Dag(adj)


def _structural_step(dag: Dag, link: Callable, prev: np.ndarray,
                     eps: np.ndarray, order: Sequence[int],
                     frozen: dict[int, np.ndarray]) -> np.ndarray:
    """One rollout step; `frozen` maps intervened node -> forced column."""
    n, d = prev.shape
    cur = np.zeros((n, d))
    for i in order:
        if i in frozen:
            cur[:, i] = frozen[i]
            continue
        pa = np.flatnonzero(dag.adj[:, i])
        val = link(cur[:, pa]).sum(axis=1) if pa.size else 0.0
        cur[:, i] = val + link(prev[:, i]) + eps[:, i]
    return cur


def simulate(cfg: ScmConfig, dag: Dag) -> TwoSliceDataset:
    """Roll the structural recursion forward and return the two configured slices."""
    if dag.d != cfg.d:
        raise ValueError(f"dag has {dag.d} nodes, config expects {cfg.d}")
    rng = np.random.default_rng(cfg.seed)
    noise_draw, init_draw = NOISE_FAMILIES[cfg.noise]
    link = LINKS[cfg.link]
    tau, t = cfg.t_slices
    n, d = cfg.n, cfg.d

    n_int = int(np.floor(cfg.intervention_fraction * d))
    intervened = np.zeros(d, dtype=bool)
    if n_int:
        intervened[rng.choice(d, size=n_int, replace=False)] = True

    order = topological_order(dag.adj)
    assert order is not None  # Dag construction guarantees acyclicity

    slices = [init_draw(rng, (n, d))]
    if tau == 0:
        for i in np.flatnonzero(intervened):
            slices[0][:, i] = init_draw(rng, n)
    for s in range(1, t + 1):
        eps = noise_draw(rng, (n, d))
        frozen = ({int(i): init_draw(rng, n) for i in np.flatnonzero(intervened)}
                  if s == tau else {})
        slices.append(_structural_step(dag, link, slices[s - 1], eps, order, frozen))

    return TwoSliceDataset(slices[tau], slices[t], intervened,
                           labels=dag.labels, truth=dag)


def _parse_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    import csv

    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise CsvParseError(f"{path}: duplicate column names in header")
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, "
                        f"column {col!r}") from None
            rows.append(vals)
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def load_two_slice_csv(path_tau: str | Path, path_t: str | Path,
                       schema: Sequence[str] | None = None) -> TwoSliceDataset:
    """Load a dataset from two headered CSV files, aligning columns by name."""
    head_tau, data_tau = _parse_csv(path_tau)
    head_t, data_t = _parse_csv(path_t)
    if set(head_tau) != set(head_t):
        only_tau = sorted(set(head_tau) - set(head_t))
        only_t = sorted(set(head_t) - set(head_tau))
        raise CsvParseError(
            f"column sets differ: only in {path_tau}: {only_tau}; "
            f"only in {path_t}: {only_t}")
    if data_tau.shape[0] != data_t.shape[0]:
        raise CsvParseError(
            f"row count mismatch: {path_tau} has {data_tau.shape[0]}, "
            f"{path_t} has {data_t.shape[0]}")
    columns = list(schema) if schema is not None else head_tau
    missing = [c for c in columns if c not in head_tau]
    if missing:
        raise CsvParseError(f"schema columns missing from input: {missing}")
    idx_tau = [head_tau.index(c) for c in columns]
    idx_t = [head_t.index(c) for c in columns]
    return TwoSliceDataset(
        data_tau[:, idx_tau], data_t[:, idx_t],
        np.zeros(len(columns), dtype=bool), labels=tuple(columns))


def _write_csv(path: Path, labels: Sequence[str], data: np.ndarray) -> None:
    lines = [",".join(labels)]
    lines += [",".join(f"{v:.17g}" for v in row) for row in data]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_dataset(ds: TwoSliceDataset, out_dir: str | Path,
                 cfg: ScmConfig | None = None) -> dict[str, Path]:
    """Write the CSV pair plus a JSON sidecar (truth adjacency, flags, config)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "x_tau": out / "x_tau.csv",
        "x_t": out / "x_t.csv",
        "sidecar": out / "sidecar.json",
    }
    _write_csv(paths["x_tau"], ds.labels, ds.x_tau)
    _write_csv(paths["x_t"], ds.labels, ds.x_t)
    sidecar = {
        "columns": list(ds.labels),
        "intervened": ds.intervened.astype(int).tolist(),
        "truth_adjacency": ds.truth.adj.tolist() if ds.truth is not None else None,
        "config": cfg.to_dict() if cfg is not None else None,
    }
    paths["sidecar"].write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    return paths


def load_dataset(data_dir: str | Path) -> TwoSliceDataset:
    """Load a dataset directory written by :func:`save_dataset`."""
    data_dir = Path(data_dir)
    sidecar_path = data_dir / "sidecar.json"
    ds = load_two_slice_csv(data_dir / "x_tau.csv", data_dir / "x_t.csv")
    if not sidecar_path.exists():
        return ds
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    truth = None
    if sidecar.get("truth_adjacency") is not None:
        truth = Dag(np.asarray(sidecar["truth_adjacency"], dtype=np.uint8),
                    tuple(sidecar["columns"]))
    return replace(ds, intervened=np.asarray(sidecar["intervened"], dtype=bool),
                   truth=truth)
