"""Real-number secret sharing with Beaver arithmetic and leakage analysis."""
from .core import (
    AnchorWitness,
    EvaluationDomain,
    NaiveShareSet,
    SharedMatrix,
    ShareSet,
    SharingParams,
    constant_share,
    interpolate_at,
    lagrange_basis,
    naive_share,
    recon,
    share,
    share_matrix,
    share_with_witness,
)
from .kernels import BACKEND

__version__ = "0.1.0"
