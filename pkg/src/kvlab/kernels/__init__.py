"""Tridiagonal kernels with a compiled backend and a pure-Python fallback.

The Cython module ``_tridiag`` is used when it was built; otherwise the
functions come from ``_fallback``. :func:`use_backend` switches explicitly
(tests and benchmarks compare both).
"""
from __future__ import annotations

from . import _fallback

try:
    from . import _tridiag as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = ["BACKEND", "available_backends", "use_backend", "thomas", "solve_neumann", "solve_dirichlet"]

BACKEND = ""
thomas = solve_neumann = solve_dirichlet = None


def available_backends():
    return ["compiled", "python"] if _compiled is not None else ["python"]


def use_backend(name: str) -> str:
    """Select ``"compiled"`` or ``"python"``; returns the previous backend."""
    global BACKEND, thomas, solve_neumann, solve_dirichlet
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        mod = _compiled
    elif name == "python":
        mod = _fallback
    else:
        raise ValueError(f"unknown backend {name!r}")
    previous = BACKEND
    BACKEND = name
    thomas, solve_neumann, solve_dirichlet = mod.thomas, mod.solve_neumann, mod.solve_dirichlet
    return previous


use_backend("compiled" if _compiled is not None else "python")
