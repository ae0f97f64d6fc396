"""Pure entangled PEPS with local hidden variable models for restricted measurements.

The package builds lattice PEPS whose virtual bonds are separable with
respect to generalized local state spaces (orthogonal Hermitian operator
bases), certifies positivity against a restricted measurement set, and
samples measurement outcomes classically through a per-edge product
distribution over hidden edge indices.
"""

from pepslhv.errors import (
    ConstraintError,
    DegenerateNormError,
    NotFactorizableError,
    PositivityViolationError,
    StrictInteriorError,
    UsageError,
)

__all__ = [
    "ConstraintError",
    "DegenerateNormError",
    "NotFactorizableError",
    "PositivityViolationError",
    "StrictInteriorError",
    "UsageError",
]

__version__ = "0.1.0"
