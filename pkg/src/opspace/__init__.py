"""Finite-dimensional laboratory for operator spaces and their tensor norms."""
from .matrix_core import DiamondContext, diamond, diamond_square_factor, op_norm
from .quantum_space import (
    AmplifiedElement,
    OperatorSpace,
    amplified_norm,
    cb_norm_estimate,
    make_column_hilbertian,
    make_omega,
    make_row_hilbertian,
    make_varpi,
)
from .bioperators import Bioperator, estimate_scb, estimate_wcb, strong_amplify, weak_amplify
from .tensor_products import (
    NormBracket,
    TensorRepresentation,
    diamond_tensor,
    effros,
    equality_suite,
    fournamed_bracket,
    haagerup_bracket,
    spatial_norm,
)

__version__ = "0.1.0"

__all__ = [
    "AmplifiedElement", "Bioperator", "DiamondContext", "NormBracket", "OperatorSpace",
    "TensorRepresentation", "amplified_norm", "cb_norm_estimate", "diamond",
    "diamond_square_factor", "diamond_tensor", "effros", "equality_suite", "estimate_scb",
    "estimate_wcb", "fournamed_bracket", "haagerup_bracket", "make_column_hilbertian",
    "make_omega", "make_row_hilbertian", "make_varpi", "op_norm", "spatial_norm",
    "strong_amplify", "weak_amplify",
]
