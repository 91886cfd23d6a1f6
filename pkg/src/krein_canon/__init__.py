"""Canonical forms of real matrices normal in an indefinite scalar product."""

from .catalog import CanonicalForm, atlas, construct, families, get_family
from .classify import Report, classify
from .core_linalg import OperatorPair, TolerancePolicy, h_adjoint, is_h_normal, is_h_unitary
from .decomposition import full_decomposition, verify_proposition1
from .eigen import BACKEND
from .errors import KreinCanonError, NotHNormal, ValidationError
from .oracle import ScrambleSpec, fingerprint, scramble, similarity_solve
from .rank1 import classify_rank1
from .rank2 import classify_rank2

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CanonicalForm",
    "KreinCanonError",
    "NotHNormal",
    "OperatorPair",
    "Report",
    "ScrambleSpec",
    "TolerancePolicy",
    "ValidationError",
    "atlas",
    "classify",
    "classify_rank1",
    "classify_rank2",
    "construct",
    "families",
    "fingerprint",
    "full_decomposition",
    "get_family",
    "h_adjoint",
    "is_h_normal",
    "is_h_unitary",
    "scramble",
    "similarity_solve",
    "verify_proposition1",
]
