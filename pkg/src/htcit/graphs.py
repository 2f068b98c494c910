"""Directed acyclic graphs: the shared adjacency-matrix type and algorithms."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Dag:
    """Binary adjacency matrix with node labels; adj[i, j] = 1 means i -> j."""

    adj: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=np.uint8)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.diagonal(adj).any():
            raise ValueError("adjacency diagonal must be zero (no self-loops)")
        labels = self.labels or default_labels(adj.shape[0])
        if len(labels) != adj.shape[0]:
            raise ValueError("label count does not match node count")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        object.__setattr__(self, "labels", tuple(labels))
        if topological_order(adj) is None:
            raise ValueError("adjacency matrix contains a directed cycle")

    @property
    def d(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum())

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adj))]

    def parents(self, j: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.adj[:, j])]

    def children(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adj[i])]

    def reachability(self) -> np.ndarray:
        return reachability(self.adj)

    def ancestors(self, i: int) -> list[int]:
        return [int(a) for a in np.flatnonzero(self.reachability()[:, i])]

    def descendants(self, i: int) -> list[int]:
        return [int(v) for v in np.flatnonzero(self.reachability()[i])]

    @classmethod
    def from_edges(cls, d: int, edges: Iterable[tuple[int, int]],
                   labels: Sequence[str] = ()) -> "Dag":
        adj = np.zeros((d, d), dtype=np.uint8)
        for i, j in edges:
            adj[i, j] = 1
        return cls(adj, tuple(labels))

    def to_json(self) -> str:
        return json.dumps(
            {"labels": list(self.labels), "adjacency": self.adj.tolist()},
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Dag":
        obj = json.loads(text)
        return cls(np.asarray(obj["adjacency"], dtype=np.uint8),
                   tuple(obj["labels"]))

    def write_edge_csv(self, path: str | Path) -> None:
        """Edge-list CSV with a `src,dst` header, one row per directed edge."""
        lines = ["src,dst"]
        lines += [f"{self.labels[i]},{self.labels[j]}" for i, j in self.edges()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def default_labels(d: int) -> tuple[str, ...]:
    return tuple(f"X{i + 1}" for i in range(d))


def topological_order(adj: np.ndarray) -> list[int] | None:
    """Kahn's algorithm; returns None when the graph has a directed cycle."""
    d = adj.shape[0]
    indeg = adj.sum(axis=0).astype(np.int64)
    stack = [i for i in range(d) if indeg[i] == 0]
    order: list[int] = []
    while stack:
        u = stack.pop()
        order.append(u)
        for v in np.flatnonzero(adj[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(int(v))
    return order if len(order) == d else None


def is_acyclic(adj: np.ndarray) -> bool:
    return topological_order(np.asarray(adj)) is not None


def reachability(adj: np.ndarray) -> np.ndarray:
    """Strict reachability: R[i, j] is True iff a directed path i -> ... -> j exists."""
    R = np.asarray(adj, dtype=bool)
    while True:
        R2 = R | (R @ R)
        if (R2 == R).all():
            return R2
        R = R2


def d_separated(adj: np.ndarray, x: int, y: int, z: Iterable[int]) -> bool:
    """Whether x and y are d-separated given z in the DAG `adj`.

    Reachability over active trails: breadth-first search over (node,
    arrived-by-child-edge) states, the standard Bayes-ball formulation.
    """
    adj = np.asarray(adj)
    zset = frozenset(int(c) for c in z)
    if x == y:
        return False
    if x in zset or y in zset:
        raise ValueError("endpoints must not be in the conditioning set")

    d = adj.shape[0]
    parents = [np.flatnonzero(adj[:, v]) for v in range(d)]
    children = [np.flatnonzero(adj[v]) for v in range(d)]

    # ancestors of z, used for the collider-opening rule
    anc_z = set(zset)
    frontier = list(zset)
    while frontier:
        v = frontier.pop()
        for p in parents[v]:
            if int(p) not in anc_z:
                anc_z.add(int(p))
                frontier.append(int(p))

    # state (v, direction): direction "up" = trail entered v from a child
    # (moving against the arrows), "down" = entered from a parent.
    visited: set[tuple[int, str]] = set()
    queue: list[tuple[int, str]] = [(x, "up")]
    while queue:
        v, direction = queue.pop()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v != x and v == y:
            return False
        if direction == "up" and v not in zset:
            # trail may continue to parents (still up) or children (down)
            for p in parents[v]:
                queue.append((int(p), "up"))
            for c in children[v]:
                queue.append((int(c), "down"))
        elif direction == "down":
            if v not in zset:
                for c in children[v]:
                    queue.append((int(c), "down"))
            if v in anc_z:
                # collider at v is open when v has a conditioned descendant
                for p in parents[v]:
                    queue.append((int(p), "up"))
    return True
