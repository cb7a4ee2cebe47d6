"""Plantard arithmetic, NTT engines and cost/bound analysis for Kyber."""

from .modarith import KYBER, ModParams, RangeError, derive_params

__version__ = "0.1.0"

__all__ = ["KYBER", "ModParams", "RangeError", "derive_params", "__version__"]
