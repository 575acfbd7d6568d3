"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``TORICSLOPE_PURE=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("TORICSLOPE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback

pairwise_sum = _impl.pairwise_sum
fd_d2_lastaxis = _impl.fd_d2_lastaxis
fd_d1_lastaxis = _impl.fd_d1_lastaxis
mixed_det2 = _impl.mixed_det2
legendre_max = _impl.legendre_max

__all__ = [
    "BACKEND",
    "pairwise_sum",
    "fd_d2_lastaxis",
    "fd_d1_lastaxis",
    "mixed_det2",
    "legendre_max",
]
