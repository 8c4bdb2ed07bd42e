"""Counting statistics of an adiabatically temperature-driven four-level
quantum heat engine, and a Levenberg-Marquardt neural surrogate for its
Fano factor."""

__version__ = "0.1.0"

from .engine import EngineParams, bose_occupation, build_liouvillian, drive_temperatures  # noqa: E402
from .fcs import CumulantSet, FcsConfig, affinity, cumulants, dynamic_cgf, geometric_cgf  # noqa: E402
from .spectral import dominant_eig, spectral_track  # noqa: E402

__all__ = [
    "EngineParams", "bose_occupation", "build_liouvillian", "drive_temperatures",
    "CumulantSet", "FcsConfig", "affinity", "cumulants", "dynamic_cgf", "geometric_cgf",
    "dominant_eig", "spectral_track",
]
