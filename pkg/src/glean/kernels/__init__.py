"""Hot per-pixel kernels: compiled extension when available, NumPy fallback
otherwise.

Set GLEAN_KERNEL_BACKEND=python or =native to force a backend; the default
prefers the compiled extension. `benchmarks/bench_kernels.py` compares the
two.
"""

from __future__ import annotations

import importlib
import os

from . import pyfallback

_requested = os.environ.get("GLEAN_KERNEL_BACKEND", "").strip().lower()
if _requested not in ("", "native", "python"):
    raise RuntimeError(
        f"GLEAN_KERNEL_BACKEND must be 'native' or 'python', got {_requested!r}"
    )

_native = None
if _requested != "python":
    try:
        _native = importlib.import_module("glean.kernels._native")
    except ImportError:
        if _requested == "native":
            raise

BACKEND = "native" if _native is not None else "python"
_impl = _native if _native is not None else pyfallback

warp_bilinear = _impl.warp_bilinear
median_reduce = _impl.median_reduce


def available_backends() -> dict:
    """Importable backends by name (for cross-checking and benchmarks)."""
    backends = {"python": pyfallback}
    if _native is not None:
        backends["native"] = _native
    return backends
