"""Import-time selection between the compiled and the numpy kernels.

The compiled extension is preferred when it imports cleanly; set the
environment variable ``FUZZYMON_BACKEND`` to ``python`` or ``compiled`` to
force a choice (forcing ``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from fuzzymon._kernels import python_backend

_FORCED = os.environ.get("FUZZYMON_BACKEND", "").strip().lower()

if _FORCED == "python":
    _active = python_backend
elif _FORCED == "compiled":
    from fuzzymon._kernels import _speedups as _active
else:
    try:
        from fuzzymon._kernels import _speedups as _active
    except ImportError:
        _active = python_backend


def get_backend():
    """Module providing ``evolve_steps`` and ``sample_paths``."""
    return _active


def backend_name() -> str:
    return _active.name
