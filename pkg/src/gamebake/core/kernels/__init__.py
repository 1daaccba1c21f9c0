"""Kernel backend selection.

The compiled Cython core is preferred when present; the pure-numpy fallback
is bit-compatible and always available. Set ``GAMEBAKE_PURE_PYTHON=1`` to
force the fallback (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import fallback

if os.environ.get("GAMEBAKE_PURE_PYTHON"):
    _impl = fallback
    BACKEND = "fallback"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = fallback
        BACKEND = "fallback"

encode_forward = _impl.encode_forward
encode_backward = _impl.encode_backward
rasterize = _impl.rasterize

__all__ = ["BACKEND", "encode_forward", "encode_backward", "rasterize", "fallback"]
