"""ExGaussian fits of photocurrent resonance scans."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from ..errors import FitError, NoPeakError
from .exgauss import exgauss_density, exgauss_mode
from .lsq import nlls_fit

#: A peak must rise this many robust noise std above the baseline.
PROMINENCE_FACTOR = 5.0
_SKEW_MAX = 1.9  # exGaussian skewness is < 2


@dataclass(frozen=True)
class PeakFit:
    mu: float
    sigma: float
    tau_v: float
    amplitude: float  # peak area, A*V
    baseline: float  # A
    mode: float
    stderr_mode: float
    residual_norm: float
    converged: bool
    covariance: np.ndarray | None = None

    def __call__(self, x):
        return self.baseline + self.amplitude * exgauss_density(x, self.mu, self.sigma, self.tau_v)

    @property
    def peak_height(self) -> float:
        return self.amplitude * exgauss_density(self.mode, self.mu, self.sigma, self.tau_v)


@dataclass(frozen=True)
class BimodalFit:
    peak_lo: PeakFit | None
    peak_hi: PeakFit | None
    weight_lo: float
    weight_hi: float
    baseline: float
    residual_norm: float
    converged: bool

    @property
    def n_peaks(self) -> int:
        return (self.peak_lo is not None) + (self.peak_hi is not None)

    @property
    def dominant(self) -> PeakFit:
        if self.peak_hi is None or (self.peak_lo is not None and self.weight_lo > self.weight_hi):
            return self.peak_lo
        return self.peak_hi

    @property
    def minor(self) -> PeakFit | None:
        if self.n_peaks < 2:
            return None
        return self.peak_lo if self.dominant is self.peak_hi else self.peak_hi

    def __call__(self, x):
        out = np.full(np.shape(x), self.baseline, dtype=float)
        for p in (self.peak_lo, self.peak_hi):
            if p is not None:
                out = out + p.amplitude * exgauss_density(x, p.mu, p.sigma, p.tau_v)
        return out


def _xy(scan_or_x, y=None):
    if y is None:
        x, y = scan_or_x.v_n, scan_or_x.i_pc
    else:
        x = scan_or_x
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.lexsort((y, x))
    return x[order], y[order]


def robust_noise(y) -> float:
    """Noise std from the MAD of second differences (insensitive to smooth peaks)."""
    if len(y) < 3:
        return 0.0
    d2 = np.diff(y, 2)
    return 1.4826 * float(np.median(np.abs(d2 - np.median(d2)))) / math.sqrt(6.0)


def edge_baseline(y) -> float:
    """Median of the outer 10 % of points on both ends of the scan."""
    k = max(2, len(y) // 10)
    return float(np.median(np.concatenate([y[:k], y[-k:]])))


def _check_prominence(y):
    base = edge_baseline(y)
    prom = float(np.max(y)) - base
    noise = robust_noise(y)
    if not prom > PROMINENCE_FACTOR * noise or prom <= 0:
        raise NoPeakError(
            f"no resonance: peak prominence {prom:.3g} <= {PROMINENCE_FACTOR} x noise {noise:.3g}"
        )
    return base, prom, noise


def _model(x, p):
    mu, sigma, tau, amp, base = p
    return base + amp * exgauss_density(x, mu, abs(sigma), tau)


def moment_guess(x, y, base):
    """(mu, sigma, tau_v, area) from moments of the baseline-subtracted peak."""
    w = y - base
    peak = np.max(w)
    w = np.where(w > 0.1 * peak, w, 0.0)
    # keep only the contiguous region around the maximum
    i = int(np.argmax(w))
    lo = i
    while lo > 0 and w[lo - 1] > 0:
        lo -= 1
    hi = i
    while hi < len(w) - 1 and w[hi + 1] > 0:
        hi += 1
    xs, ws = x[lo:hi + 1], w[lo:hi + 1]
    area = float(trapezoid(y[lo:hi + 1] - base, xs)) if hi > lo else 0.0
    tot = ws.sum()
    if tot <= 0 or hi - lo < 2:
        return None
    m = float((ws * xs).sum() / tot)
    var = float((ws * (xs - m) ** 2).sum() / tot)
    if var <= 0:
        return None
    skew = float((ws * (xs - m) ** 3).sum() / tot) / var**1.5
    skew = float(np.clip(skew, -_SKEW_MAX, _SKEW_MAX))
    tau = math.copysign(math.sqrt(var) * (abs(skew) / 2.0) ** (1.0 / 3.0), skew)
    sig2 = var - tau * tau
    if sig2 <= 0:
        return None
    # the clipped region underestimates the area of a Gaussian-like peak
    return m - tau, math.sqrt(sig2), tau, area / 0.93


def _grid_starts(x, y, base):
    w = y - base
    i = int(np.argmax(w))
    half = w[i] / 2.0
    above = np.where(w >= half)[0]
    width = max(x[above[-1]] - x[above[0]], 2 * np.min(np.diff(x)))
    sig = width / 2.3548
    area = w[i] * sig * math.sqrt(2 * math.pi)
    return [(x[i], sig, f * sig, area) for f in (-1.0, -1 / 3, 0.0, 1 / 3, 1.0)]


def _finish(res, y_scale):
    mu, sigma, tau, amp, base = res.params
    sigma = abs(sigma)
    cov = res.covariance
    mode = exgauss_mode(mu, sigma, tau)
    h = 1e-6 * sigma
    grad = np.zeros(5)
    for k, (d_mu, d_sig, d_tau) in enumerate(((h, 0, 0), (0, h, 0), (0, 0, h))):
        grad[k] = (exgauss_mode(mu + d_mu, sigma + d_sig, tau + d_tau)
                   - exgauss_mode(mu - d_mu, sigma - d_sig, tau - d_tau)) / (2 * h)
    var_mode = float(grad @ cov @ grad)
    scale = np.array([1.0, 1.0, 1.0, y_scale, y_scale])
    return PeakFit(
        mu=float(mu), sigma=float(sigma), tau_v=float(tau),
        amplitude=float(amp * y_scale), baseline=float(base * y_scale),
        mode=mode, stderr_mode=math.sqrt(max(var_mode, 0.0)),
        residual_norm=float(res.residual_norm * y_scale), converged=res.converged,
        covariance=cov * np.outer(scale, scale),
    )


def _run(x, ys, start, base_s):
    mu, sig, tau, area = start
    p0 = np.array([mu, sig, tau, area, base_s])
    x_scale = np.array([sig, sig, sig, max(abs(area), 1e-12), 1.0])
    return nlls_fit(_model, x, ys, p0, x_scale=x_scale)


def fit_exgauss(scan_or_x, y=None) -> PeakFit:
    """Single exGaussian plus constant baseline.

    Takes a ``ResonanceScan`` or ``(v_n, i_pc)`` arrays. Raises
    ``NoPeakError`` for scans without a prominent peak.
    """
    x, y = _xy(scan_or_x, y)
    base, prom, _ = _check_prominence(y)
    y_scale = prom
    ys = y / y_scale
    base_s = base / y_scale
    # tau = 0 is a stationary point of the cost (skew enters only at third
    # order), so a single start can stall there; always try several tails.
    starts = _grid_starts(x, y, base)
    guess = moment_guess(x, y, base)
    if guess is not None:
        starts.insert(0, guess)
    results = []
    for start in starts:
        try:
            results.append(_run(x, ys, (start[0], start[1], start[2], start[3] / y_scale),
                                base_s))
        except (FitError, FloatingPointError):
            continue
    if not results:
        raise FitError("exGaussian fit failed from every starting point")
    best = min(results,
               key=lambda r: (not r.converged, round(r.residual_norm, 12), abs(r.params[2])))
    return _finish(best, y_scale)


def _double_model(x, p):
    out = p[8] + p[3] * exgauss_density(x, p[0], abs(p[1]), p[2])
    return out + p[7] * exgauss_density(x, p[4], abs(p[5]), p[6])


def _window(x, y, center, half):
    sel = np.abs(x - center) <= half
    return x[sel], y[sel]


def fit_double_exgauss(scan_or_x, v_lo_hint, v_hi_hint, y=None) -> BimodalFit:
    """Two exGaussians with a shared baseline, seeded near the two hints.

    If either amplitude is consistent with zero at 2 standard errors the
    result collapses to a single-peak fit with weights 1/0.
    """
    if not v_hi_hint > v_lo_hint:
        raise FitError("v_hi_hint must exceed v_lo_hint")
    x, y = _xy(scan_or_x, y)
    base, prom, noise = _check_prominence(y)
    y_scale = prom
    ys = y / y_scale
    half = 0.5 * (v_hi_hint - v_lo_hint)
    starts = []
    for hint in (v_lo_hint, v_hi_hint):
        xw, yw = _window(x, y, hint, half)
        local = float(np.max(yw) - base) if len(yw) else 0.0
        if len(yw) < 8 or local <= PROMINENCE_FACTOR * noise or local < 0.02 * prom:
            starts.append(None)
            continue
        try:
            pk = fit_exgauss(xw, yw)
            starts.append((pk.mu, pk.sigma, pk.tau_v, pk.amplitude / y_scale))
        except FitError:
            starts.append(None)
    if None in starts:
        return _single_fallback(x, y, v_lo_hint, v_hi_hint)
    p0 = np.array([*starts[0], *starts[1], base / y_scale])
    sig = min(starts[0][1], starts[1][1])
    x_scale = np.array([sig, sig, sig, abs(starts[0][3]) or 1, sig, sig, sig,
                        abs(starts[1][3]) or 1, 1.0])
    try:
        res = nlls_fit(_double_model, x, ys, p0, x_scale=x_scale)
    except FitError:
        return _single_fallback(x, y, v_lo_hint, v_hi_hint)
    p = res.params
    se = res.stderr
    peaks = []
    for k in (0, 4):
        sub = res.covariance[np.ix_([k, k + 1, k + 2, k + 3, 8], [k, k + 1, k + 2, k + 3, 8])]
        amp, amp_se = p[k + 3], se[k + 3]
        if not amp > 2 * amp_se:
            return _single_fallback(x, y, v_lo_hint, v_hi_hint)
        fake = _Res(np.array([p[k], p[k + 1], p[k + 2], amp, p[8]]), sub,
                    res.residual_norm, res.converged)
        peaks.append(_finish(fake, y_scale))
    lo, hi = sorted(peaks, key=lambda pk: pk.mode)
    if hi.mode - lo.mode < max(lo.sigma, hi.sigma):
        return _single_fallback(x, y, v_lo_hint, v_hi_hint)
    total = lo.amplitude + hi.amplitude
    return BimodalFit(lo, hi, lo.amplitude / total, hi.amplitude / total,
                      float(p[8] * y_scale), float(res.residual_norm * y_scale), res.converged)


@dataclass
class _Res:
    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    converged: bool


def _single_fallback(x, y, v_lo_hint, v_hi_hint) -> BimodalFit:
    pk = fit_exgauss(x, y)
    is_hi = abs(pk.mode - v_hi_hint) < abs(pk.mode - v_lo_hint)
    if is_hi:
        return BimodalFit(None, pk, 0.0, 1.0, pk.baseline, pk.residual_norm, pk.converged)
    return BimodalFit(pk, None, 1.0, 0.0, pk.baseline, pk.residual_norm, pk.converged)


def bootstrap_mode_std(scan_generator, n=100, base_seed=0, min_converged=0.9) -> float:
    """Sample std of fitted modes over ``n`` independently seeded scans.

    ``scan_generator(seed)`` returns a ``ResonanceScan``.
    """
    if n < 30:
        raise ValueError("bootstrap needs n >= 30 replicates")
    seeds = np.random.SeedSequence(base_seed).generate_state(n, dtype=np.uint64)
    modes = []
    for s in seeds:
        try:
            pk = fit_exgauss(scan_generator(int(s)))
        except FitError:
            continue
        if pk.converged:
            modes.append(pk.mode)
    if len(modes) < min_converged * n:
        raise FitError(f"only {len(modes)}/{n} bootstrap fits converged")
    return float(np.std(modes, ddof=1))
