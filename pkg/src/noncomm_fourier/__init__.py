"""Noncommutative Fourier analysis and symbol calculus on SU(2) and tori."""

from .group_backend import SU2, Spin, Torus, casimir_weight, delta0_set, haar_grid, irrep_matrix, parse_group, rho_squared
from .fourier import (FourierCoefficients, GridFunction, forward, grid_function, grid_l2_norm, inverse, plancherel_norm,
                      random_coefficients, sobolev_norm)
from .symbols import FullSymbol, InvariantSymbol, op_apply, spectral_multiplier, symbol_of
from .differences import DifferenceSpec, difference_apply, first_difference, laplace_difference, multi_difference
from .multiplier_check import (MultiplierReport, check_class, check_hm, check_noninvariant, difference_profile,
                               kappa)
from .operators_zoo import NamedOperator, exceptional_set, invert_x_plus_c, named_symbol, parametrix_symbol, zoo_symbol
from .lp_probe import ProbeResult, SubElliptic, XPlusC, apriori_ratio, opnorm_lower_bound, subelliptic_oracle

__version__ = "0.1.0"
