"""Loop-group construction of minimal surfaces in the Heisenberg group Nil3."""

from .dpw import frame_grid, generate, sym_L3, sym_nil
from .equivariant import EquivClass, Monodromy, classify, diagonalizer, helicoidal_params
from .errors import ConfigError, NilweierError, NumericError
from .factorization import Cell, birkhoff, iwasawa_su11, meromorphic_frame
from .loop_core import (
    TwistedLoop,
    exp_degree_one,
    identity_loop,
    lambda_derivative,
    loop_eval,
    loop_inv,
    loop_mul,
    omega0,
    reality_residual_su11,
)
from .nil3 import Isometry, iso_apply, iso_compose, nil_mul
from .potentials import DegreeOnePotential, GeneralPotential, NormalizedPotential, det_at_one

__version__ = "0.1.0"

__all__ = [
    "Cell", "ConfigError", "DegreeOnePotential", "EquivClass", "GeneralPotential", "Isometry",
    "Monodromy", "NilweierError", "NormalizedPotential", "NumericError", "TwistedLoop",
    "birkhoff", "classify", "det_at_one", "diagonalizer", "exp_degree_one", "frame_grid",
    "generate", "helicoidal_params", "identity_loop", "iso_apply", "iso_compose",
    "iwasawa_su11", "lambda_derivative", "loop_eval", "loop_inv", "loop_mul",
    "meromorphic_frame", "nil_mul", "omega0", "reality_residual_su11", "sym_L3", "sym_nil",
]
