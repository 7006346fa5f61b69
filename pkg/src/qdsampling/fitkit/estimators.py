"""scikit-learn compatible wrappers around the peak and edge fits.

``X`` is a single feature column (cathode voltage or delay), ``y`` the
measured photocurrent or sampled voltage.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .edges import fit_rc_edge, rc_edge
from .exgauss import exgauss_value
from .peaks import fit_double_exgauss, fit_exgauss


def _column(X):
    X = check_array(X, ensure_2d=True, dtype=np.float64)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single feature column, got {X.shape[1]}")
    return X[:, 0]


class ExGaussianPeakRegressor(RegressorMixin, BaseEstimator):
    """Fit one exGaussian resonance (or two, when both hints are given).

    Fitted attributes follow the usual trailing-underscore convention:
    ``mode_``, ``stderr_mode_``, ``mu_``, ``sigma_``, ``tau_v_``,
    ``amplitude_``, ``baseline_``, ``fit_`` (the underlying result) and,
    in two-peak mode, ``weight_hi_`` and ``n_peaks_``.
    """

    def __init__(self, v_lo_hint=None, v_hi_hint=None):
        self.v_lo_hint = v_lo_hint
        self.v_hi_hint = v_hi_hint

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        x = _column(X)
        if self.v_lo_hint is not None and self.v_hi_hint is not None:
            fit = fit_double_exgauss(x, self.v_lo_hint, self.v_hi_hint, y=y)
            peak = fit.dominant
            self.weight_hi_ = fit.weight_hi
            self.n_peaks_ = fit.n_peaks
        else:
            fit = peak = fit_exgauss(x, y)
            self.weight_hi_ = None
            self.n_peaks_ = 1
        self.fit_ = fit
        self.mode_ = peak.mode
        self.stderr_mode_ = peak.stderr_mode
        self.mu_, self.sigma_, self.tau_v_ = peak.mu, peak.sigma, peak.tau_v
        self.amplitude_, self.baseline_ = peak.amplitude, peak.baseline
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        x = _column(X)
        if self.n_peaks_ == 1 and self.weight_hi_ is None:
            return exgauss_value(x, self.mu_, self.sigma_, self.tau_v_, self.amplitude_,
                                 self.baseline_)
        return self.fit_(x)


class RCEdgeRegressor(RegressorMixin, BaseEstimator):
    """Fit ``v_lo + (v_hi - v_lo) * (1 - exp(-(t - t0) / tau))`` to an edge."""

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        t = _column(X)
        fit = fit_rc_edge(np.column_stack([t, y]), self.window)
        self.fit_ = fit
        self.t0_, self.tau_, self.stderr_tau_ = fit.t0, fit.tau, fit.stderr_tau
        self.v_lo_, self.v_hi_ = fit.v_lo, fit.v_hi
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return rc_edge(_column(X), self.t0_, self.tau_, self.v_lo_, self.v_hi_)
