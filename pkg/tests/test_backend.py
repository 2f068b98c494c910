"""Compiled-vs-numpy backend parity and selection."""

import os
import subprocess
import sys

import numpy as np
import pytest

from htcit import _gramops_py as py_ops
from htcit import backend

compiled = pytest.importorskip("htcit._gramops",
                               reason="compiled extension not built")


@pytest.fixture(scope="module")
def arrays():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((80, 3))
    K = compiled.rbf_gram(X, 0.2)
    L = compiled.rbf_gram(rng.standard_normal((80, 1)), 0.4)
    perms = np.stack([rng.permutation(80) for _ in range(10)]).astype(np.int64)
    return X, K, L, perms


def test_pairwise_sq_dists_parity(arrays):
    X, *_ = arrays
    assert np.allclose(compiled.pairwise_sq_dists(X), py_ops.pairwise_sq_dists(X),
                       atol=1e-12)


def test_rbf_gram_parity(arrays):
    X, *_ = arrays
    assert np.allclose(compiled.rbf_gram(X, 0.7), py_ops.rbf_gram(X, 0.7),
                       atol=1e-13)


def test_center_gram_parity(arrays):
    _, K, _, _ = arrays
    a, b = K.copy(), K.copy()
    compiled.center_gram(a)
    py_ops.center_gram(b)
    assert np.allclose(a, b, atol=1e-12)
    assert abs(a.sum()) < 1e-8  # double-centered rows/cols sum to zero


def test_moment_parity(arrays):
    _, K, L, _ = arrays
    mc = compiled.hadamard_moments(K, L)
    mp = py_ops.hadamard_moments(K, L)
    assert mc == pytest.approx(mp, rel=1e-12)
    assert compiled.sum_hadamard(K, L) == pytest.approx(py_ops.sum_hadamard(K, L),
                                                        rel=1e-12)


def test_perm_trace_parity(arrays):
    _, K, L, perms = arrays
    assert np.allclose(compiled.perm_trace_stats(K, L, perms),
                       py_ops.perm_trace_stats(K, L, perms), rtol=1e-12)


def test_backend_env_forces_python():
    code = ("import htcit.backend as b; print(b.BACKEND)")
    env = dict(os.environ, HTCIT_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_is_compiled_when_built():
    assert backend.BACKEND == "compiled"


def test_full_test_identical_across_backends():
    code = (
        "import numpy as np\n"
        "from htcit.kerneltest import hsic_test, kci_test\n"
        "rng = np.random.default_rng(3)\n"
        "x = rng.standard_normal(120); y = np.sin(x) + rng.standard_normal(120)\n"
        "z = rng.standard_normal((120, 2))\n"
        "a = hsic_test(x, y); b = kci_test(x, y, z)\n"
        "print(repr(a.p_value), repr(b.p_value))\n"
    )
    outs = []
    for env_backend in ("", "python"):
        env = dict(os.environ)
        if env_backend:
            env["HTCIT_BACKEND"] = env_backend
        else:
            env.pop("HTCIT_BACKEND", None)
        r = subprocess.run([sys.executable, "-c", code], capture_output=True,
                           text=True, env=env, check=True)
        outs.append(r.stdout.strip().split())
    (g1, k1), (g2, k2) = outs
    assert float(g1) == pytest.approx(float(g2), rel=1e-9)
    assert float(k1) == pytest.approx(float(k2), rel=1e-9)
