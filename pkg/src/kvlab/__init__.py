"""Finite-difference laboratory for a temperature-dependent Kelvin-Voigt
thermoviscoelastic system, with an existence-time certificate checker."""
from __future__ import annotations

__version__ = "0.1.0"
