"""Kernel selection.

The compiled ``_kernels`` module is used when it imports; otherwise the
numpy fallback is used. Set ``PDFLOW_BACKEND=python`` to force the
fallback (the benchmark and the cross-backend tests do this per call via
:func:`get_kernels`).
"""
import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

HAVE_COMPILED = _compiled is not None


def get_kernels(name=None):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name is None:
        name = os.environ.get("PDFLOW_BACKEND", "compiled" if HAVE_COMPILED else "python")
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("pdflow._kernels is not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


kernels = get_kernels()
BACKEND = "python" if kernels is _fallback else "compiled"
