"""Mixed-precision low-rank ADI for generalized algebraic Lyapunov equations.

Solves ``A^T X E + E^T X A + G S G^T = 0`` for a low-rank factorization
``X ~ Z Y Z^T`` with the factors stored in single or double precision.
"""

__version__ = "0.1.0"

from lyapmix.adi import (
    ADIOptions,
    ADITrace,
    LyapunovProblem,
    PrecisionTriple,
    adi_solve,
    explicit_residual_norm,
    implicit_residual_norm,
    kronecker_structure_check,
)
from lyapmix.dense import dense_lyap_oracle, householder_qr_pivoted, sym_eig
from lyapmix.krylov import gmres_solve
from lyapmix.lowrank import (
    CompressionOptions,
    LDLTFactorization,
    lr_compress,
    lr_concat,
    lr_from_dense,
    lr_norm,
    lr_to_dense,
)
from lyapmix.precision import DOUBLE, SINGLE, Precision, round_to_precision
from lyapmix.problems import (
    StateSpaceSystem,
    TripleChainParams,
    gramian_problem,
    h2_norm,
    heat_model,
    known_solution_problem,
    random_rhs_problem,
    solution_error,
    system_from_spec,
    triple_chain,
)
from lyapmix.shifts import ShiftSet, penzl_shifts
from lyapmix.sparse import ilu0_factorize

__all__ = [
    "ADIOptions",
    "ADITrace",
    "CompressionOptions",
    "DOUBLE",
    "LDLTFactorization",
    "LyapunovProblem",
    "Precision",
    "PrecisionTriple",
    "SINGLE",
    "ShiftSet",
    "StateSpaceSystem",
    "TripleChainParams",
    "adi_solve",
    "dense_lyap_oracle",
    "explicit_residual_norm",
    "gmres_solve",
    "gramian_problem",
    "h2_norm",
    "heat_model",
    "householder_qr_pivoted",
    "ilu0_factorize",
    "implicit_residual_norm",
    "known_solution_problem",
    "kronecker_structure_check",
    "lr_compress",
    "lr_concat",
    "lr_from_dense",
    "lr_norm",
    "lr_to_dense",
    "penzl_shifts",
    "random_rhs_problem",
    "round_to_precision",
    "solution_error",
    "sym_eig",
    "system_from_spec",
    "triple_chain",
]
