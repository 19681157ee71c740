"""Spatial sign correlation and robust bivariate correlation estimators."""

from .errors import (ConfigError, ConvergenceError, DegeneracyError, DomainError,
                     SignCorrError)
from .numerics import SymMat2, chi2_quantile, eig_sym2, kron2, stable_sum, std_normal_quantile
from .sscm import (shape_from_sscm2, spatial_median, spatial_sign, spatial_sign_corr,
                   sscm, sscm_to_corr, sscorr_ci, two_stage_spatial_sign_corr)
from .types import CorrEstimate, ScaleEstimate, ScatterEstimate

__version__ = "0.1.0"
