"""Kernel selection: compiled extension if importable, pure Python otherwise.

Set ``DIRAC_GREEN_PURE=1`` to force the pure-Python kernels.
"""
from __future__ import annotations

import logging
import os
from types import ModuleType

from . import _pure

log = logging.getLogger(__name__)

try:  # pragma: no cover - depends on the build
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None


def available() -> list[str]:
    """Names of the backends that can be used in this interpreter."""
    return ["cython", "python"] if _compiled is not None else ["python"]


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module called ``name`` (``"cython"`` or ``"python"``).

    ``None`` picks the default: the compiled kernels unless they are missing
    or ``DIRAC_GREEN_PURE`` is set to a non-empty value other than ``0``.
    """
    if name is None:
        forced = os.environ.get("DIRAC_GREEN_PURE", "")
        if forced not in ("", "0") or _compiled is None:
            return _pure
        return _compiled
    if name == "python":
        return _pure
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def backend_name(mod: ModuleType | None = None) -> str:
    mod = get_backend() if mod is None else mod
    return "python" if mod is _pure else "cython"
