"""horolab: numerical laboratory for expanding translates of curved
submanifolds of horospherical subgroups in SL2(R)^d / SL2(Z)^d."""

from horolab.errors import (
    ConvergenceError,
    DomainError,
    FitError,
    HorolabError,
    ResourceError,
    SchemaError,
    UnsupportedError,
)
from horolab.policy import POLICY, NumericPolicy

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DomainError",
    "FitError",
    "HorolabError",
    "NumericPolicy",
    "POLICY",
    "ResourceError",
    "SchemaError",
    "UnsupportedError",
]
