"""Command line: ``qdsampling simulate|fit|reconstruct|report|run``.

Each step reads the previous step's files from ``--out`` and writes its own
there. Exit codes: 0 success, 1 usage or configuration error, 2 computation
failure, 3 file I/O problem.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from pathlib import Path

from . import __version__, io
from .config import PRESETS, RunConfig, load_config
from .errors import ConfigError, EmptyReconstructionError, QDSamplingError
from .pipeline import fit_scans, reconstruct, simulate
from .report import bimodal_svg, scans_svg, waveform_svg

log = logging.getLogger("qdsampling")

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_IO = 0, 1, 2, 3

SCANS, FITS, WAVEFORM = "scans.csv", "fits.csv", "waveform.csv"
METRICS, MANIFEST = "metrics.json", "manifest.json"
FIGURES = ("scans.svg", "waveform.svg", "bimodal.svg")


class UsageError(Exception):
    pass


class HashMismatch(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qdsampling",
                     description="Simulate and analyse quantum-dot sampling runs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "simulate": "simulate resonance scans for every delay -> scans.csv",
        "fit": "fit exGaussian peaks to scans.csv -> fits.csv",
        "reconstruct": "rebuild the pulse from fits.csv -> waveform.csv, metrics.json",
        "report": "render SVG figures from the CSV files",
        "run": "simulate, fit, reconstruct and report in one go",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", type=Path, default=None,
                       help="TOML config file (defaults apply when omitted)")
        p.add_argument("--out", type=Path, required=True, help="run directory")
        p.add_argument("--seed", type=_u64, default=None,
                       help="unsigned 64-bit seed (default: config, then manifest)")
        p.add_argument("--preset", choices=sorted(PRESETS), default=None)
        p.add_argument("--force", action="store_true",
                       help="accept inputs written under a different config hash")
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes for the scans (output does not depend on it)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


# -- helpers -------------------------------------------------------------

def _manifest_path(out: Path) -> Path:
    return out / MANIFEST


def _load_cfg(args) -> RunConfig:
    seed, preset = args.seed, args.preset
    mpath = _manifest_path(args.out)
    if args.command != "simulate" and mpath.exists() and (seed is None or preset is None):
        try:
            m = io.read_json(mpath)
        except (OSError, ValueError):
            m = {}
        if seed is None and args.config is None:
            seed = m.get("seed")
        if preset is None and args.config is None:
            preset = m.get("preset") or None
    return load_config(args.config, preset, seed)


def _header(cfg: RunConfig, **extra) -> dict:
    h = {"config_hash": cfg.config_hash, "preset": cfg.preset or "-", "seed": cfg.seed,
         "version": __version__}
    h.update(extra)
    return h


def _check_hash(header: dict, cfg: RunConfig, name: str, force: bool):
    found = header.get("config_hash")
    if found == cfg.config_hash:
        return
    msg = (f"{name} was written with config hash {found}, current config is "
           f"{cfg.config_hash}; pass the same --config/--preset/--seed or use --force")
    if not force:
        raise HashMismatch(msg)
    log.warning("%s (continuing because of --force)", msg)


def _require(out: Path, names):
    missing = [n for n in names if not (out / n).is_file()]
    if missing:
        raise FileNotFoundError(f"missing input file(s) in {out}: {', '.join(missing)} "
                                f"(expected {', '.join(names)})")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _update_manifest(out: Path, cfg: RunConfig, step: str, files, **info):
    """Manifest with everything needed to rerun; wall time is logged, not stored,
    so reruns stay byte-identical."""
    path = _manifest_path(out)
    m = io.read_json(path) if path.exists() else {}
    if m.get("config_hash") != cfg.config_hash:
        m = {}
    m.update(version=__version__, config_hash=cfg.config_hash, seed=cfg.seed,
             preset=cfg.preset, config=cfg.resolved)
    steps = m.setdefault("steps", {})
    steps[step] = dict(info, files={f: _sha256(out / f) for f in files})
    io.write_json(path, m)


# -- commands ------------------------------------------------------------

def cmd_simulate(args, cfg: RunConfig):
    args.out.mkdir(parents=True, exist_ok=True)
    errors = {}

    def progress(done, total, dt):
        log.info("scan %d/%d (dt_oe=%g ps)", done, total, dt)

    scans = simulate(cfg, workers=args.workers, progress=progress, errors=errors)
    if not scans:
        raise QDSamplingError(f"all {len(cfg.dt_grid)} scans failed")
    failed = ";".join(f"{dt:g}" for dt in sorted(errors)) or "-"
    io.write_scans(args.out / SCANS, scans, _header(cfg, failed_delays_ps=failed))
    _update_manifest(args.out, cfg, "simulate", [SCANS], n_scans=len(scans),
                     failed_delays_ps=sorted(errors))
    return scans


def cmd_fit(args, cfg: RunConfig):
    _require(args.out, [SCANS])
    header, scans = io.read_scans(args.out / SCANS)
    _check_hash(header, cfg, SCANS, args.force)
    fits = fit_scans(scans, cfg)
    n_failed = sum(f is None for _, f in fits)
    if n_failed == len(fits):
        raise QDSamplingError("no scan could be fitted")
    io.write_fits(args.out / FITS, fits, _header(cfg, bimodal=int(cfg.fit.bimodal)))
    _update_manifest(args.out, cfg, "fit", [FITS], n_fits=len(fits) - n_failed,
                     n_failed=n_failed)
    return fits


def cmd_reconstruct(args, cfg: RunConfig):
    _require(args.out, [FITS])
    header, fits = io.read_fits(args.out / FITS)
    _check_hash(header, cfg, FITS, args.force)
    sampled, metrics = reconstruct(fits, cfg)
    metrics["config_hash"] = cfg.config_hash
    io.write_waveform(args.out / WAVEFORM, sampled,
                      _header(cfg, v_bias_res_V=sampled.v_bias_res_used))
    io.write_json(args.out / METRICS, metrics)
    _update_manifest(args.out, cfg, "reconstruct", [WAVEFORM, METRICS])
    return sampled, metrics


def cmd_report(args, cfg: RunConfig):
    _require(args.out, [SCANS, FITS, WAVEFORM])
    sh, scans = io.read_scans(args.out / SCANS)
    fh, fits = io.read_fits(args.out / FITS)
    wh, wave = io.read_waveform(args.out / WAVEFORM)
    for h, name in ((sh, SCANS), (fh, FITS), (wh, WAVEFORM)):
        _check_hash(h, cfg, name, args.force)
    written = []
    figures = {"scans.svg": scans_svg(scans, fits), "waveform.svg": waveform_svg(wave, cfg),
               "bimodal.svg": bimodal_svg(scans, fits)}
    for name, svg in figures.items():
        if svg is None:
            continue
        (args.out / name).write_text(svg)
        written.append(name)
    _update_manifest(args.out, cfg, "report", written)
    return written


COMMANDS = {"simulate": (cmd_simulate,), "fit": (cmd_fit,), "reconstruct": (cmd_reconstruct,),
            "report": (cmd_report,),
            "run": (cmd_simulate, cmd_fit, cmd_reconstruct, cmd_report)}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("qdsampling: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _load_cfg(args)
    except ConfigError as exc:
        print(f"qdsampling: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qdsampling: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        for step in COMMANDS[args.command]:
            t0 = time.perf_counter()
            step(args, cfg)
            log.info("%s finished in %.1f s", step.__name__[4:], time.perf_counter() - t0)
    except HashMismatch as exc:
        print(f"qdsampling: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.DataFileError, OSError) as exc:
        print(f"qdsampling: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"qdsampling: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EmptyReconstructionError, QDSamplingError) as exc:
        print(f"qdsampling: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
