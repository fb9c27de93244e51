"""Backend selection for the RK4 stepping kernel.

The compiled extension is preferred when it was built; otherwise the numpy
fallback is used. Setting the environment variable ``POSCON_PURE_PYTHON=1``
forces the fallback regardless (useful for the backend benchmark and for
debugging). Both backends implement the identical contract documented in
``poscon._kernel_py.rk4_span``; results agree to rounding.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built; numpy fallback covers everything
    _compiled = None

_FORCE_PY = os.environ.get("POSCON_PURE_PYTHON", "") not in ("", "0")

if _compiled is not None and not _FORCE_PY:
    BACKEND = "compiled"
    rk4_span = _compiled.rk4_span
else:
    BACKEND = "python"
    rk4_span = _kernel_py.rk4_span


def available_backends():
    """Names of the stepping backends importable in this environment."""
    return ("compiled", "python") if _compiled is not None else ("python",)


def get_backend(name: str):
    """Explicit backend lookup, for benchmarks and parity tests."""
    if name == "python":
        return _kernel_py.rk4_span
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel not built")
        return _compiled.rk4_span
    raise ValueError(f"unknown backend {name!r}")
