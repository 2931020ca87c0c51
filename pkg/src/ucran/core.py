"""Kernel backend selection.

The compiled ``ucran._core`` extension is used when it was built; otherwise
the pure-Python ``ucran._core_py`` takes over.  Setting ``UCRAN_PURE_PYTHON=1``
forces the fallback.  Both expose ``AdmissionCore``, ``fifo_sojourn`` and
``time_average_in_system`` with identical results.
"""
from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _core_py

try:
    from . import _core as _compiled  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def get_backend(name: str | None = None) -> ModuleType:
    if name in (None, "auto"):
        if _compiled is not None and os.environ.get("UCRAN_PURE_PYTHON", "") in ("", "0"):
            return _compiled
        return _core_py
    if name == "python":
        return _core_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("ucran._core is not built; run `pip install -e .`")
        return _compiled
    return importlib.import_module(name)


kernels = get_backend()
BACKEND = "compiled" if kernels is _compiled else "python"
