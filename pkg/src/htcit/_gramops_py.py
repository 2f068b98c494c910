"""Pure-numpy implementations of the Gram-matrix hot kernels.

Mirrors the API of the compiled ``htcit._gramops`` extension; the active
implementation is chosen in :mod:`htcit.backend`.
"""

import numpy as np


def pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    """Symmetric matrix of squared Euclidean distances between rows of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    sq = np.einsum("ij,ij->i", X, X)
    D2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D2, 0.0, out=D2)
    np.fill_diagonal(D2, 0.0)
    return D2


def rbf_gram(X: np.ndarray, gamma: float) -> np.ndarray:
    """Gaussian Gram matrix K[i,j] = exp(-gamma * ||x_i - x_j||^2)."""
    D2 = pairwise_sq_dists(X)
    D2 *= -gamma
    return np.exp(D2, out=D2)


def center_gram(K: np.ndarray) -> None:
    """Double-center a symmetric Gram matrix in place: K := H K H."""
    row = K.mean(axis=1, keepdims=True)
    col = K.mean(axis=0, keepdims=True)
    g = K.mean()
    K -= row
    K -= col
    K += g


def sum_hadamard(A: np.ndarray, B: np.ndarray) -> float:
    """Sum of the elementwise product, i.e. tr(A B) for symmetric A, B."""
    return float(np.einsum("ij,ij->", A, B))


def hadamard_moments(A: np.ndarray, B: np.ndarray) -> tuple[float, float, float]:
    """One-pass moments of M = A * B (elementwise).

    Returns (sum(M), dot(diag(A), diag(B)), sum(M**2)); these are the trace
    statistic and the null mean/variance ingredients of the kernel tests.
    """
    M = A * B
    s = float(M.sum())
    dd = float(np.dot(np.diagonal(A), np.diagonal(B)))
    q = float(np.einsum("ij,ij->", M, M))
    return s, dd, q


def perm_trace_stats(Kc: np.ndarray, Lc: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """Trace statistics sum_ij Kc[i,j] * Lc[p[i],p[j]] for each permutation row."""
    out = np.empty(perms.shape[0], dtype=np.float64)
    for b in range(perms.shape[0]):
        p = perms[b]
        out[b] = np.einsum("ij,ij->", Kc, Lc[np.ix_(p, p)])
    return out
