"""Kernel backend selection: compiled extension or pure Python.

The Cython extension hlgkit._kernels is built at install time when a
compiler is available; otherwise, or when HLGKIT_NO_EXT=1 is set, the
pure-Python twins take over.  Both implement the same algorithms with
the same iteration and floating-point operation order, so results are
bit-identical either way (benchmarks/bench_kernels.py checks and times
the two).
"""

import os

from . import _kernels_py

if os.environ.get("HLGKIT_NO_EXT") == "1":
    _impl = _kernels_py
    HAVE_EXT = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        HAVE_EXT = True
    except ImportError:
        _impl = _kernels_py
        HAVE_EXT = False

BACKEND = "compiled" if HAVE_EXT else "pure-python"

viterbi_decode = _impl.viterbi_decode
edit_counts = _impl.edit_counts
