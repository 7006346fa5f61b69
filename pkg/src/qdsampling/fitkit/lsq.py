"""Levenberg-Marquardt nonlinear least squares."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import FitError, RankDeficiencyError


@dataclass
class LSQResult:
    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    n_iter: int = 0
    cost_history: list = field(default_factory=list)
    message: str = ""

    def __iter__(self):
        # (params, covariance, residual_norm, converged) unpacking
        return iter((self.params, self.covariance, self.residual_norm, self.converged))

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))


def numeric_jacobian(model, x, p, scale):
    """Central-difference Jacobian of ``model(x, p)`` w.r.t. ``p``."""
    p = np.asarray(p, dtype=float)
    cols = []
    for k in range(p.size):
        h = 1e-6 * max(abs(p[k]), scale[k])
        dp = np.zeros_like(p)
        dp[k] = h
        cols.append((model(x, p + dp) - model(x, p - dp)) / (2 * h))
    return np.column_stack(cols)


def nlls_fit(model, x, y, p0, *, jac=None, x_scale=None, max_iter=200, ftol=1e-14,
             xtol=1e-13, gtol=1e-14, lam0=1e-3, rcond=1e-12) -> LSQResult:
    """Minimise ``sum((y - model(x, p))**2)`` starting from ``p0``.

    ``jac(x, p)`` supplies the model Jacobian; otherwise central differences
    are used with steps scaled by ``x_scale`` (defaults to ``|p0|``, or 1).
    Hitting ``max_iter`` returns the best point with ``converged=False``.
    A singular Jacobian at the solution raises ``RankDeficiencyError``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.array(p0, dtype=float)
    n = p.size
    if y.size <= n:
        raise FitError(f"need more data points ({y.size}) than parameters ({n})")
    if not np.all(np.isfinite(p)):
        raise FitError("initial parameters must be finite")
    if x_scale is None:
        x_scale = np.where(p != 0, np.abs(p), 1.0)
    x_scale = np.broadcast_to(np.asarray(x_scale, dtype=float), p.shape)

    def jacobian(q):
        return jac(x, q) if jac is not None else numeric_jacobian(model, x, q, x_scale)

    r = y - model(x, p)
    cost = float(r @ r)
    if not np.isfinite(cost):
        raise FitError("model is not finite at the initial parameters")
    history = [cost]
    lam = lam0
    converged = False
    message = "iteration limit reached"
    it = 0
    # data reproduced to rounding: nothing left to fit, whatever the step size
    exact = (1e-10 * float(np.linalg.norm(y))) ** 2
    J = jacobian(p)
    for it in range(1, max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        if np.max(np.abs(g)) <= gtol * max(cost, 1e-300) or cost <= exact:
            converged, message = True, "gradient vanished"
            break
        d = np.diag(A).copy()
        d[d <= 0] = max(np.max(d), 1.0) * 1e-12
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            p_new = p + step
            r_new = y - model(x, p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            converged, message = True, "no further decrease possible"
            break
        rel_drop = (cost - cost_new) / cost if cost > 0 else 0.0
        small_step = np.all(np.abs(step) <= xtol * (np.abs(p) + xtol))
        p, r, cost = p_new, r_new, cost_new
        history.append(cost)
        lam = max(lam / 3.0, 1e-12)
        if small_step or rel_drop <= ftol:
            converged, message = True, "step or cost change below tolerance"
            break
        J = jacobian(p)
    J = jacobian(p)
    cov = _covariance(J, cost, y.size, rcond)
    return LSQResult(p, cov, float(np.sqrt(cost)), converged, it, history, message)


def _covariance(J, cost, m, rcond):
    n = J.shape[1]
    _, s, vt = np.linalg.svd(J, full_matrices=False)
    if s.size < n or s[0] == 0 or s[-1] <= rcond * s[0]:
        raise RankDeficiencyError(
            "Jacobian is rank deficient at the solution; parameters are not identifiable"
        )
    dof = m - n
    s2 = cost / dof if dof > 0 else 0.0
    return (vt.T / s**2) @ vt * s2
