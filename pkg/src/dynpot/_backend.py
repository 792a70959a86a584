"""Kernel backend selection.

The compiled extension is used when it imports; setting ``DYNPOT_BACKEND=python``
forces the pure-Python fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

_requested = os.environ.get("DYNPOT_BACKEND", "").strip().lower()
if _requested and _requested not in ("python", "compiled"):
    raise ImportError(f"DYNPOT_BACKEND must be 'python' or 'compiled', got {_requested!r}")
if _requested == "compiled" and _ckernels is None:
    raise ImportError("DYNPOT_BACKEND=compiled but the extension dynpot._ckernels is not built")

DEFAULT = _requested or ("compiled" if _ckernels is not None else "python")


def get_kernels(name: str | None = None) -> ModuleType:
    name = name or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
