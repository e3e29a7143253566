"""cilab: a desk-scale spectral laboratory for convex-integration constructions.

Periodic-box spectral calculus, trace-class Wiener noise, Mikado building
blocks, glued Euler solutions, one full convex-integration step, and the
verification harness around them.
"""

from .grids import GridSpec
from .fields import (
    SpectralField,
    from_grid,
    to_grid,
    differential,
    leray_project,
    biot_savart,
    inverse_divergence,
    band_project,
    mollify_space,
    dealias,
    save_field,
    load_field,
)
from .holder import holder_norm, HolderNormReport

__all__ = [
    "GridSpec",
    "SpectralField",
    "from_grid",
    "to_grid",
    "differential",
    "leray_project",
    "biot_savart",
    "inverse_divergence",
    "band_project",
    "mollify_space",
    "dealias",
    "save_field",
    "load_field",
    "holder_norm",
    "HolderNormReport",
]
