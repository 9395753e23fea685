"""Green functions of one-dimensional discrete Dirac and Jacobi operators.

The main entry points are :func:`half_line_green`, :func:`glue_full_line`
and :func:`resolvent_entry`; :mod:`dirac_green.oracle` holds the
finite-section cross-checks and :mod:`dirac_green.certify` the energy-window
scans.
"""
from .errors import (
    ConfigError,
    DenominatorVanishes,
    DiracGreenError,
    InsufficientData,
    InvalidPotential,
    MaxDepthExceeded,
    NoHalfPlaneFixedPoint,
    NotHermitian,
    NotInHalfPlane,
    SingularSystem,
    UnstableMarch,
)
from .green import (
    GreenResult,
    SeedStrategy,
    diagonal_green,
    glue_full_line,
    half_line_green,
    periodic_seed,
    propagate_solution,
    resolvent_entry,
)
from .model import FullLine, HalfLine, OperatorSpec, SpinorVector, free_band_edges
from .potentials import PotentialPair, Sequence

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DenominatorVanishes", "DiracGreenError", "InsufficientData",
    "InvalidPotential", "MaxDepthExceeded", "NoHalfPlaneFixedPoint", "NotHermitian",
    "NotInHalfPlane", "SingularSystem", "UnstableMarch",
    "GreenResult", "SeedStrategy", "diagonal_green", "glue_full_line", "half_line_green",
    "periodic_seed", "propagate_solution", "resolvent_entry",
    "FullLine", "HalfLine", "OperatorSpec", "SpinorVector", "free_band_edges",
    "PotentialPair", "Sequence", "__version__",
]
