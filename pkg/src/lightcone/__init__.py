"""Light-cone geometry of conformal metrics on spheres.

Spacelike immersions into Minkowski space, conformal metrics ``e^{2f} g0``
on S^n, the constant ``<H,H>`` equation and its explicit solution family,
quadrature audits of integral identities, and a pseudospectral solver on S^2.
"""

__version__ = "0.1.0"

from .conformal import (
    conformal_report,
    equation_E_residual,
    mean_curvature_sq,
    obata_field,
    scalar_curvature,
    yamabe_energy,
    yamabe_residual,
)
from .embedding import catalog, graph_immersion, invariants_report, shape_operators
from .expr import ParseError, parse_field
from .fields import ObataField, ScalarField, SpectralField, as_field
from .minkowski import ObataParameters, minkowski_dot
from .solver import SolverConfig, classify, kernel_spectrum, solve_E

__all__ = [
    "ObataField",
    "ObataParameters",
    "ParseError",
    "ScalarField",
    "SolverConfig",
    "SpectralField",
    "as_field",
    "catalog",
    "classify",
    "conformal_report",
    "equation_E_residual",
    "graph_immersion",
    "invariants_report",
    "kernel_spectrum",
    "mean_curvature_sq",
    "minkowski_dot",
    "obata_field",
    "parse_field",
    "scalar_curvature",
    "shape_operators",
    "solve_E",
    "yamabe_energy",
    "yamabe_residual",
]
