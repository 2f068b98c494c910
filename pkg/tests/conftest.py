"""Shared test helpers: brute-force graph oracles kept independent of the
package's own graph algorithms (path enumeration instead of reachability
matrices and Bayes-ball)."""

import itertools

import numpy as np
import pytest

from htcit.graphs import Dag
from htcit.simgen import sample_dag


def all_simple_trails(adj, x, y):
    """All simple node sequences x..y whose consecutive pairs share an edge
    in either direction (paths in the skeleton)."""
    d = adj.shape[0]
    neighbors = [set(np.flatnonzero(adj[v] | adj[:, v])) for v in range(d)]
    trails = []

    def extend(path):
        last = path[-1]
        if last == y:
            trails.append(list(path))
            return
        for nxt in neighbors[last]:
            if nxt not in path:
                path.append(nxt)
                extend(path)
                path.pop()

    extend([x])
    return trails


def descendants_bruteforce(adj, v):
    """Descendant set of v (excluding v) by explicit DFS on edges."""
    seen = set()
    stack = [v]
    while stack:
        u = stack.pop()
        for w in np.flatnonzero(adj[u]):
            if int(w) not in seen:
                seen.add(int(w))
                stack.append(int(w))
    seen.discard(v)
    return seen


def trail_active(adj, trail, zset):
    """Whether a skeleton trail is d-connecting given conditioning set zset."""
    for k in range(1, len(trail) - 1):
        a, v, b = trail[k - 1], trail[k], trail[k + 1]
        collider = adj[a, v] and adj[b, v]
        if collider:
            opened = v in zset or (descendants_bruteforce(adj, v) & zset)
            if not opened:
                return False
        else:
            if v in zset:
                return False
    return True


def dsep_bruteforce(adj, x, y, zset):
    """d-separation by enumerating every simple trail between x and y."""
    zset = set(zset)
    for trail in all_simple_trails(adj, x, y):
        if trail_active(adj, trail, zset):
            return False
    return True


def enumerate_dags(d):
    """Every labeled DAG on d nodes as a uint8 adjacency matrix."""
    pairs = [(i, j) for i in range(d) for j in range(d) if i != j]
    out = []
    for states in itertools.product((0, 1, 2), repeat=d * (d - 1) // 2):
        adj = np.zeros((d, d), dtype=np.uint8)
        idx = 0
        for i in range(d):
            for j in range(i + 1, d):
                s = states[idx]
                idx += 1
                if s == 1:
                    adj[i, j] = 1
                elif s == 2:
                    adj[j, i] = 1
        if _acyclic_bruteforce(adj):
            out.append(adj)
    return out


def _acyclic_bruteforce(adj):
    """Cycle check by depth-first search with a recursion stack."""
    d = adj.shape[0]
    color = [0] * d  # 0 unvisited, 1 on stack, 2 done

    def visit(u):
        color[u] = 1
        for v in np.flatnonzero(adj[u]):
            if color[v] == 1:
                return False
            if color[v] == 0 and not visit(int(v)):
                return False
        color[u] = 2
        return True

    return all(color[u] != 0 or visit(u) for u in range(d))


def random_dags(count, d_max=6, seed=0):
    """Random DAGs with d <= d_max and random edge counts."""
    rng = np.random.default_rng(seed)
    dags = []
    for k in range(count):
        d = int(rng.integers(2, d_max + 1))
        e = int(rng.integers(0, d * (d - 1) // 2 + 1))
        dags.append(sample_dag(d, e, int(rng.integers(0, 2**32))))
    return dags


@pytest.fixture(scope="session")
def dag_triples():
    rng = np.random.default_rng(7)
    triples = []
    for _ in range(1000):
        d = int(rng.integers(2, 7))
        trip = tuple(
            sample_dag(d, int(rng.integers(0, d * (d - 1) // 2 + 1)),
                       int(rng.integers(0, 2**32)))
            for _ in range(3))
        triples.append(trip)
    return triples
