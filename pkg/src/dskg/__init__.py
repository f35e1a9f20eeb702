"""Pseudospectral laboratory for the semilinear Klein-Gordon equation in de Sitter spacetime."""

__version__ = "0.1.0"

from .params import DerivedConstants, PhysicalParams, derive_constants, validate_regime
from .spectral import Field, Grid, SpectralField

__all__ = [
    "DerivedConstants",
    "Field",
    "Grid",
    "PhysicalParams",
    "SpectralField",
    "__version__",
    "derive_constants",
    "validate_regime",
]
