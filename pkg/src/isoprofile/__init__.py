"""
isoprofile - Local Isoperimetric Profiles on MCP(K,N) Needles
Model densities, exact profiles, Minkowski content and synthetic needle
decompositions for desk-scale verification.
"""

from .config import DEFAULT_CONFIG, NumericsConfig
from .density import Density1D, ModelDensityParams, check_mcp_density, model_density
from .exceptions import DomainError, InputError, IsoprofileError, NumericError
from .geometry import IntervalSet, minkowski_content, set_measure
from .kernels import CurvatureParams, k_const, model_volume, omega, sharp_constant
from .needles import Needle, NeedleDecomposition, check_localized_inequality, sharpness_ratio
from .profile import inverse_mass, isoperimetric_profile, needle_mass, profile_value

__version__ = "0.1.0"
