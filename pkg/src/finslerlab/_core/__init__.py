"""Kernel backend selection.

The compiled extension is preferred; setting ``FINSLERLAB_PURE_PYTHON=1``
forces the numpy fallback (used by the benchmark and the parity tests).
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("FINSLERLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        kernels = _compiled
        BACKEND = "cython"

__all__ = ["BACKEND", "kernels", "_fallback"]
