"""Selects the kernel backend at import time.

The compiled extension is preferred when present; set ``LQLAB_BACKEND=pure``
to force the fallback or ``LQLAB_BACKEND=compiled`` to fail loudly when the
extension is missing.
"""

from __future__ import annotations

import os

_choice = os.environ.get("LQLAB_BACKEND", "auto")
if _choice not in ("auto", "compiled", "pure"):
    raise RuntimeError(
        f"LQLAB_BACKEND must be 'auto', 'compiled' or 'pure', got {_choice!r}"
    )

if _choice == "pure":
    from . import _pure as kernels

    BACKEND = "pure"
else:
    try:
        from . import _core as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        from . import _pure as kernels  # type: ignore[no-redef]

        BACKEND = "pure"


def backend_name() -> str:
    """Name of the kernel backend selected at import: compiled or pure."""
    return BACKEND
