"""Harmonic 2-forms, periods and energies on the Chen-Teo gravitational instanton."""

from .chen_teo import ChenTeoParams, derive_constants
from .errors import ChenTeoError

__version__ = "0.1.0"

__all__ = ["ChenTeoParams", "derive_constants", "ChenTeoError", "__version__"]
