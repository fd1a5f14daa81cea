"""Command-line front end: ``rrrl blur|noise|deconv|bench``.

Exit codes: 0 success, 1 usage or configuration error, 2 file input/output
error, 3 numerical failure of an iteration. Failures print one JSON object
to stderr, e.g. ``{"error": "usage", "message": "...", "exit": 1}``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench as benchmod
from .blur import BoundaryMode, convolve
from .config import DEFAULT_TAU, DEFAULT_TAU_CONSTRAINED, VARIANTS, DescentConfig, SolverConfig
from .degrade import NOISE_KINDS, NoiseSpec, add_noise
from .errors import DivergenceError, DomainError, NumericalError, ShapeError
from .image import lift_floor, load_image, load_psf, save_image
from .metrics import records_to_csv, snr
from .penalisers import DATA_KINDS, SMOOTHNESS_KINDS, DataPenaliser, SmoothnessPenaliser
from .solvers import run
from .variational import run_descent

logger = logging.getLogger("rrrl")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3
METHODS = VARIANTS + ("variational", "variational-positive")


class UsageError(Exception):
    pass


class InputOutputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


# --------------------------------------------------------------------------
# deconv configuration: defaults < config file < flags

#: key -> (parser, default). ``None`` defaults are resolved per method.
DECONV_KEYS = {
    "method": (str, "rrrl"),
    "iterations": (int, None),
    "alpha": (float, None),
    "data_penaliser": (str, "robust-sqrt"),
    "data_eps": (float, 1e-2),
    "smoothness_penaliser": (str, "perona-malik"),
    "lam": (float, 15.0),
    "tv_eps": (float, 1e-3),
    "l1_eps": (float, 1e-1),
    "tau": (float, None),
    "stop_rel_change": (float, None),
    "mode": (str, "reflect"),
}


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputOutputError(f"cannot read config file {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DECONV_KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = None if value in ("", "none") else DECONV_KEYS[key][0](value)
        except ValueError:
            raise UsageError(f"config line {lineno}: bad value {value!r} for {key}") from None
    return out


def resolve_deconv_config(args) -> dict:
    cfg = {k: d for k, (_, d) in DECONV_KEYS.items()}
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DECONV_KEYS:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    method = cfg["method"]
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    descent = method.startswith("variational")
    if cfg["iterations"] is None:
        cfg["iterations"] = DescentConfig.iterations if descent else SolverConfig.iterations
    if cfg["alpha"] is None:
        cfg["alpha"] = DescentConfig.alpha if descent else SolverConfig.alpha
    if cfg["tau"] is None and descent:
        cfg["tau"] = DEFAULT_TAU_CONSTRAINED if method == "variational-positive" else DEFAULT_TAU
    return cfg


def build_config(cfg: dict):
    """Turn resolved key/values into a solver or descent config; ValueError on bad values."""
    if cfg["mode"] not in ("reflect", "cyclic"):
        raise ValueError(f"mode must be reflect or cyclic, got {cfg['mode']!r}")
    if cfg["alpha"] < 0:
        raise ValueError(f"alpha must be >= 0, got {cfg['alpha']}")
    smooth = SmoothnessPenaliser(cfg["smoothness_penaliser"], lam=cfg["lam"], eps=cfg["tv_eps"])
    if cfg["method"].startswith("variational"):
        return DescentConfig(
            tau=cfg["tau"],
            iterations=cfg["iterations"],
            alpha=cfg["alpha"],
            data_penaliser_l1_eps=cfg["l1_eps"],
            smoothness_penaliser=smooth,
            constrained=cfg["method"] == "variational-positive",
        )
    return SolverConfig(
        iterations=cfg["iterations"],
        alpha=cfg["alpha"],
        data_penaliser=DataPenaliser(cfg["data_penaliser"], eps=cfg["data_eps"]),
        smoothness_penaliser=smooth,
        stop_rel_change=cfg["stop_rel_change"],
    )


def format_config(cfg: dict) -> str:
    return "".join(f"{k} = {'none' if v is None else v}\n" for k, v in cfg.items())


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rrrl", description="Robust and regularised Richardson-Lucy deconvolution.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("blur", help="blur an image with a PSF")
    b.add_argument("input")
    b.add_argument("output")
    b.add_argument("--psf", required=True)
    b.add_argument("--mode", choices=[m.value for m in BoundaryMode], default="cyclic")

    n = sub.add_parser("noise", help="add seeded noise to an image")
    n.add_argument("input")
    n.add_argument("output")
    n.add_argument("--kind", choices=NOISE_KINDS, default="impulse-uniform")
    n.add_argument("--fraction", type=float, default=0.15)
    n.add_argument("--sigma", type=float, default=0.0)
    n.add_argument("--seed", type=int, default=0)

    d = sub.add_parser("deconv", help="deblur an image")
    d.add_argument("input", nargs="?")
    d.add_argument("output", nargs="?")
    d.add_argument("--psf")
    d.add_argument("--config", help="flat key = value file; flags override it")
    d.add_argument("--method", choices=METHODS)
    d.add_argument("--iterations", type=_positive_int)
    d.add_argument("--alpha", type=float)
    d.add_argument("--data-penaliser", dest="data_penaliser", choices=DATA_KINDS)
    d.add_argument("--data-eps", dest="data_eps", type=float)
    d.add_argument("--smoothness-penaliser", dest="smoothness_penaliser", choices=SMOOTHNESS_KINDS)
    d.add_argument("--lam", type=float)
    d.add_argument("--tv-eps", dest="tv_eps", type=float)
    d.add_argument("--l1-eps", dest="l1_eps", type=float)
    d.add_argument("--tau", type=float)
    d.add_argument("--stop-rel-change", dest="stop_rel_change", type=float)
    d.add_argument("--mode", choices=[m.value for m in BoundaryMode])
    d.add_argument("--ground-truth", dest="ground_truth")
    d.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")

    k = sub.add_parser("bench", help="run a benchmark preset and write CSV")
    k.add_argument("--preset", choices=sorted(benchmod.PRESETS), required=True)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out")
    k.add_argument("--no-timing", dest="timing", action="store_false",
                   help="write wall times as NA so the CSV is reproducible byte for byte")
    return p


# --------------------------------------------------------------------------
# commands


def _load(loader, path, what):
    try:
        return loader(path)
    except (OSError, ValueError) as exc:
        raise InputOutputError(f"cannot load {what} {path}: {exc}") from None


def _save(img, path):
    try:
        save_image(img, path)
    except OSError as exc:
        raise InputOutputError(f"cannot write {path}: {exc}") from None


def cmd_blur(args):
    img = _load(load_image, args.input, "image")
    psf = _load(load_psf, args.psf, "PSF")
    _save(convolve(img, psf, args.mode), args.output)


def cmd_noise(args):
    try:
        spec = NoiseSpec(args.kind, args.fraction, args.sigma, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _save(add_noise(_load(load_image, args.input, "image"), spec), args.output)


def cmd_deconv(args):
    cfg = resolve_deconv_config(args)
    try:
        solver_cfg = build_config(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.dump_config:
        sys.stdout.write(format_config(cfg))
        return
    if not (args.input and args.output and args.psf):
        raise UsageError("deconv needs INPUT, OUTPUT and --psf")
    f = _load(load_image, args.input, "image")
    psf = _load(load_psf, args.psf, "PSF")
    g = _load(load_image, args.ground_truth, "ground truth") if args.ground_truth else None
    if g is not None and g.shape != f.shape:
        raise UsageError(f"ground truth shape {g.shape} differs from input {f.shape}")
    f, lifted = lift_floor(f)
    if lifted:
        logger.info("lifted %d values to the positive floor", lifted)
    if cfg["method"].startswith("variational"):
        u, trace = run_descent(f, psf, solver_cfg, cfg["mode"])
    else:
        u, trace = run(f, psf, solver_cfg, cfg["method"], cfg["mode"])
    for w in trace.warnings:
        logger.warning(w)
    _save(u, args.output)
    if g is not None:
        print(f"snr_db={snr(u, g):.4f}")


def cmd_bench(args):
    results = benchmod.bench_preset(args.preset, args.seed)
    text = records_to_csv([r.record for r in results], timing=args.timing)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise InputOutputError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


COMMANDS = {"blur": cmd_blur, "noise": cmd_noise, "deconv": cmd_deconv, "bench": cmd_bench}


def _fail(kind, message, code, **extra):
    payload = {"error": kind, "message": message, "exit": code, **extra}
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except InputOutputError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except DivergenceError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL, iteration=exc.iteration)
    except NumericalError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)
    except (DomainError, ShapeError) as exc:
        return _fail("invalid-input", str(exc), EXIT_USAGE)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
