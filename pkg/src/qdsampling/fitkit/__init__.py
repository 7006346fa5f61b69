from .edges import RCFit, fit_rc_edge, rc_edge
from .estimators import ExGaussianPeakRegressor, RCEdgeRegressor
from .exgauss import exgauss_density, exgauss_mode, exgauss_value
from .lsq import LSQResult, nlls_fit
from .peaks import BimodalFit, PeakFit, bootstrap_mode_std, fit_double_exgauss, fit_exgauss

__all__ = [
    "BimodalFit", "ExGaussianPeakRegressor", "LSQResult", "PeakFit", "RCEdgeRegressor", "RCFit",
    "bootstrap_mode_std", "exgauss_density", "exgauss_mode", "exgauss_value", "fit_double_exgauss",
    "fit_exgauss", "fit_rc_edge", "nlls_fit", "rc_edge",
]
