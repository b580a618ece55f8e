"""Backend dispatch for the continuous-time walker hot loop.

The compiled Cython kernel and the vectorized numpy fallback implement the
same counter-based per-path random stream, so a fixed seed pins the walk
ensemble in either backend.  Set HEATLAB_FORCE_FALLBACK=1 to ignore the
compiled extension (used by the benchmark and the parity tests).
"""

import os

from . import ctrw_fallback

_impl = ctrw_fallback
_name = "numpy"

if not os.environ.get("HEATLAB_FORCE_FALLBACK"):
    try:
        from . import _ctrw  # compiled at install time when Cython is present

        _impl = _ctrw
        _name = "cython"
    except ImportError:
        pass


def simulate_counts(indptr, indices, rates, total_rate, start, t, n_paths, seed):
    return _impl.simulate_counts(indptr, indices, rates, total_rate, start,
                                 t, n_paths, seed)


def backend_name() -> str:
    return _name


def available_backends() -> dict:
    out = {"numpy": ctrw_fallback}
    try:
        from . import _ctrw

        out["cython"] = _ctrw
    except ImportError:
        pass
    return out
