"""CSV and JSON persistence for scans, fits, waveforms and metrics.

Files are plain comma-separated text with '.' decimals, ``#`` comment lines
carrying provenance (always including ``config_hash``), then one header line.
Numbers are written with a fixed number of significant digits so identical
inputs give identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .bench import ResonanceScan
from .errors import QDSamplingError
from .fitkit.peaks import BimodalFit, PeakFit

SCAN_COLUMNS = ("dt_oe_ps", "v_n_V", "i_pc_pA")
FIT_COLUMNS = ("dt_oe_ps", "peak", "n_peaks", "mode_V", "stderr_mode_mV", "mu_V", "sigma_V",
               "tau_v_V", "amplitude_pAV", "baseline_pA", "weight", "weight_hi",
               "residual_norm_pA", "converged")
WAVEFORM_COLUMNS = ("dt_oe_ps", "v_V", "stderr_mV", "n_peaks", "alt_v_V", "alt_weight",
                    "weight_hi")

_PICO = 1e12


class DataFileError(QDSamplingError):
    """Malformed or inconsistent input file."""


def fmt(x, digits=6) -> str:
    """Fixed significant-digit formatting; blank for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0:
        return "0"
    return f"{x:.{digits}g}"


def _write(path, header: dict, columns, rows):
    path = Path(path)
    lines = [f"# {k}: {v}" for k, v in header.items()]
    lines.append(",".join(columns))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def read_table(path, columns):
    """Return ``(header, rows)`` where rows are dicts of raw strings.

    Raises ``DataFileError`` naming the file line of the first bad row.
    """
    path = Path(path)
    header = {}
    rows = []
    seen_columns = None
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.rstrip("\n")
            if not text.strip():
                continue
            if text.startswith("#"):
                key, sep, val = text[1:].partition(":")
                if sep:
                    header[key.strip()] = val.strip()
                continue
            fields = next(csv.reader([text]))
            if seen_columns is None:
                if tuple(fields) != tuple(columns):
                    raise DataFileError(f"{path.name} line {lineno}: expected columns "
                                        f"{','.join(columns)}")
                seen_columns = fields
                continue
            if len(fields) != len(columns):
                raise DataFileError(f"{path.name} row {lineno}: expected {len(columns)} fields, "
                                    f"got {len(fields)}")
            rows.append((lineno, dict(zip(columns, fields))))
    if seen_columns is None:
        raise DataFileError(f"{path.name}: no header line")
    return header, rows


def _float(row, key, path, lineno, allow_blank=False):
    val = row[key]
    if val == "" and allow_blank:
        return None
    try:
        out = float(val)
    except ValueError:
        raise DataFileError(
            f"{Path(path).name} row {lineno}: bad number {val!r} in {key}") from None
    if not math.isfinite(out) and not allow_blank:
        raise DataFileError(f"{Path(path).name} row {lineno}: non-finite {key}")
    return out


# -- scans ---------------------------------------------------------------

def write_scans(path, scans, header: dict):
    rows = []
    for sc in scans:
        for v, i in zip(sc.v_n, sc.i_pc):
            rows.append((sc.dt_oe, v, i * _PICO))
    _write(path, header, SCAN_COLUMNS, rows)


def read_scans(path):
    """Return ``(header, [ResonanceScan, ...])`` sorted by delay."""
    header, rows = read_table(path, SCAN_COLUMNS)
    groups = {}
    for lineno, row in rows:
        dt = _float(row, "dt_oe_ps", path, lineno)
        v = _float(row, "v_n_V", path, lineno)
        i = _float(row, "i_pc_pA", path, lineno)
        groups.setdefault(dt, []).append((v, i / _PICO))
    scans = []
    for dt in sorted(groups):
        pts = sorted(groups[dt])
        try:
            scans.append(ResonanceScan(dt, [p[0] for p in pts], [p[1] for p in pts]))
        except ValueError as exc:
            raise DataFileError(f"{Path(path).name}: scan at dt_oe={dt} ps: {exc}") from None
    return header, scans


# -- fits ----------------------------------------------------------------

def _peak_row(dt, k, n, pk: PeakFit, weight, weight_hi):
    return (dt, k, n, pk.mode, pk.stderr_mode * 1e3, pk.mu, pk.sigma, pk.tau_v,
            pk.amplitude * _PICO, pk.baseline * _PICO, weight, weight_hi,
            pk.residual_norm * _PICO, pk.converged)


def write_fits(path, fits, header: dict):
    """``fits`` is a list of ``(dt_oe, PeakFit | BimodalFit | None)``.

    One row per fitted peak; a delay whose fit failed gets a single row with
    ``n_peaks=0`` and blank numbers.
    """
    rows = []
    for dt, f in sorted(fits, key=lambda e: e[0]):
        if f is None:
            rows.append((dt, 0, 0) + (None,) * 10 + (False,))
        elif isinstance(f, BimodalFit):
            k = 0
            for pk, w in ((f.peak_lo, f.weight_lo), (f.peak_hi, f.weight_hi)):
                if pk is not None:
                    rows.append(_peak_row(dt, k, f.n_peaks, pk, w, f.weight_hi))
                    k += 1
        else:
            rows.append(_peak_row(dt, 0, 1, f, 1.0, None))
    _write(path, header, FIT_COLUMNS, rows)


def _peak_from_row(row, path, lineno) -> PeakFit:
    g = lambda key: _float(row, key, path, lineno)  # noqa: E731
    return PeakFit(mu=g("mu_V"), sigma=g("sigma_V"), tau_v=g("tau_v_V"),
                   amplitude=g("amplitude_pAV") / _PICO, baseline=g("baseline_pA") / _PICO,
                   mode=g("mode_V"), stderr_mode=g("stderr_mode_mV") * 1e-3,
                   residual_norm=g("residual_norm_pA") / _PICO, converged=row["converged"] == "1")


def read_fits(path):
    """Inverse of ``write_fits``: ``(header, [(dt_oe, fit | None), ...])``."""
    header, rows = read_table(path, FIT_COLUMNS)
    by_dt = {}
    for lineno, row in rows:
        dt = _float(row, "dt_oe_ps", path, lineno)
        try:
            n = int(row["n_peaks"])
        except ValueError:
            raise DataFileError(f"{Path(path).name} row {lineno}: bad n_peaks") from None
        if row["converged"] not in ("0", "1"):
            raise DataFileError(f"{Path(path).name} row {lineno}: converged must be 0 or 1")
        by_dt.setdefault(dt, []).append((lineno, n, row))
    out = []
    for dt in sorted(by_dt):
        entries = by_dt[dt]
        n = entries[0][1]
        if n == 0:
            out.append((dt, None))
            continue
        if len(entries) != n or any(e[1] != n for e in entries):
            raise DataFileError(f"{Path(path).name}: dt_oe={dt} ps has {len(entries)} rows "
                                f"but n_peaks={n}")
        lineno, _, row = entries[0]
        w_hi = _float(row, "weight_hi", path, lineno, allow_blank=True)
        if w_hi is None:
            out.append((dt, _peak_from_row(row, path, lineno)))
            continue
        peaks = [_peak_from_row(r, path, ln) for ln, _, r in entries]
        base = peaks[0].baseline
        resid = peaks[0].residual_norm
        conv = all(p.converged for p in peaks)
        if n == 2:
            lo, hi = sorted(peaks, key=lambda p: p.mode)
            out.append((dt, BimodalFit(lo, hi, 1.0 - w_hi, w_hi, base, resid, conv)))
        elif w_hi >= 0.5:
            out.append((dt, BimodalFit(None, peaks[0], 1.0 - w_hi, w_hi, base, resid, conv)))
        else:
            out.append((dt, BimodalFit(peaks[0], None, 1.0 - w_hi, w_hi, base, resid, conv)))
    return header, out


# -- waveform ------------------------------------------------------------

def write_waveform(path, sampled, header: dict):
    rows = [(p.dt_oe, p.v, p.stderr * 1e3, p.n_peaks, p.alt_v, p.weight, p.weight_hi)
            for p in sampled.points]
    _write(path, header, WAVEFORM_COLUMNS, rows)


def read_waveform(path):
    """Return ``(header, dict of column arrays)``; blanks become NaN."""
    header, rows = read_table(path, WAVEFORM_COLUMNS)
    cols = {c: [] for c in WAVEFORM_COLUMNS}
    for lineno, row in rows:
        for c in WAVEFORM_COLUMNS:
            val = _float(row, c, path, lineno, allow_blank=True)
            cols[c].append(math.nan if val is None else val)
    return header, {c: np.array(v, dtype=float) for c, v in cols.items()}


# -- json ----------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if not math.isfinite(x) else float(fmt(x, 10))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, data: dict):
    Path(path).write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
