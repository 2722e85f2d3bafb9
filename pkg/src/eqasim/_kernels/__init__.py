"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback. Set EQASIM_PURE_PYTHON=1 to force the fallback (used by the
benchmark and the backend-equivalence tests). Both backends produce
bit-identical results; only speed differs.
"""

import os

if os.environ.get("EQASIM_PURE_PYTHON") == "1":
    from . import pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = _impl.BACKEND_NAME

raycast_mask = _impl.raycast_mask
distance_field = _impl.distance_field
plan_route = _impl.plan_route


def load_backend(name):
    """Return the named backend module ('pure' or 'compiled'), for benchmarks."""
    if name == "pure":
        from . import pure
        return pure
    if name == "compiled":
        from . import _core  # type: ignore[attr-defined]
        return _core
    raise ValueError(f"unknown backend {name!r}")
