"""Kernel backend selection.

The hot pair-sampling loop exists twice: a Cython extension and a pure-numpy
fallback with identical output. The compiled backend is used when it imported
successfully; set MLGB_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import _numpy

__all__ = ["BACKEND", "sample_pair_edges", "pair_uniforms", "get_backend"]

if os.environ.get("MLGB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _numpy
    BACKEND = "numpy"
else:
    try:
        from . import _pairs as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _numpy
        BACKEND = "numpy"

sample_pair_edges = _impl.sample_pair_edges
pair_uniforms = _impl.pair_uniforms


def get_backend(name):
    """Return a named kernel module ("cython" or "numpy"); for tests/benchmarks."""
    if name == "numpy":
        return _numpy
    if name == "cython":
        from . import _pairs

        return _pairs
    raise ValueError(f"unknown kernel backend: {name!r}")
