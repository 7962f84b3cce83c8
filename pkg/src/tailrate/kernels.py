"""Backend selection for the hot kernels.

The compiled extension ``tailrate._ckernels`` is used when it imports;
otherwise (or when ``TAILRATE_PURE_PYTHON=1``) the numpy fallback in
``tailrate._kernels_py`` is used.  Both expose the same functions.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("TAILRATE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

minimax_center = _impl.minimax_center
moreau_coords = _impl.moreau_coords
moreau_dist = _impl.moreau_dist
components = _impl.components


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _kernels_py}
    try:
        from . import _ckernels  # type: ignore[attr-defined]

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
