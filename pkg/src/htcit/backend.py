"""Selects the compiled Gram-operation kernels, with a pure-numpy fallback.

The compiled extension (htcit._gramops, built from Cython) is used when it
imported successfully; otherwise the numpy implementations take over.  Set
HTCIT_BACKEND=python to force the fallback, e.g. for benchmarking.
"""

import os

from . import _gramops_py

_forced = os.environ.get("HTCIT_BACKEND", "").strip().lower()

if _forced in ("python", "numpy"):
    _impl = _gramops_py
else:
    try:
        from . import _gramops as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _gramops_py

BACKEND: str = "compiled" if _impl is not _gramops_py else "python"

pairwise_sq_dists = _impl.pairwise_sq_dists
rbf_gram = _impl.rbf_gram
center_gram = _impl.center_gram
sum_hadamard = _impl.sum_hadamard
hadamard_moments = _impl.hadamard_moments
perm_trace_stats = _impl.perm_trace_stats
