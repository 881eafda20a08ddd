"""chiral-lab command line.

Exit codes: 0 success, 1 runtime failure in a solver, 2 bad config or arguments.
"""
from __future__ import annotations

import argparse
import configparser
import io as _io
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import __version__
from ..errors import ChiralDimersError, ConfigError, UnknownFigure
from ..trajectories import worker_count
from . import config as C
from .estimates import estimates
from .figures import reproduce_figure
from .io import write_csv, write_matrix
from .manifest import RunManifest
from .modes import DISPATCH
from .presets import FIGURES
from .validate import validate

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _meta(cfg_hash, mode, seed, extra=None):
    m = {"config_hash": cfg_hash, "mode": mode, "seed": seed, "version": __version__}
    m.update(extra or {})
    return m


def write_outputs(outputs, out_dir, manifest, meta):
    os.makedirs(out_dir, exist_ok=True)
    for fname, payload in outputs.items():
        path = os.path.join(out_dir, fname)
        if isinstance(payload, np.ndarray):
            write_matrix(path, payload, meta)
        else:
            cols, rows, extra = payload if len(payload) == 3 else (*payload, {})
            write_csv(path, cols, rows, {**meta, **extra})
        manifest.add(path, out_dir)


def run_config(cfg: C.ExperimentConfig, out_dir):
    t0 = time.perf_counter()
    outputs = DISPATCH[cfg.mode](cfg)
    man = RunManifest(cfg.digest(), cfg.mode, cfg.seed)
    write_outputs(outputs, out_dir, man, _meta(man.config_hash, cfg.mode, cfg.seed))
    with open(os.path.join(out_dir, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(cfg.text + "\n")
    man.wall_time = time.perf_counter() - t0
    man.write(out_dir)
    return man


def _guard(fn):
    """Map library errors onto exit codes with the message on stderr."""
    try:
        return fn()
    except ConfigError as exc:
        key = f" [key: {exc.key}]" if exc.key else ""
        print(f"config error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnknownFigure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChiralDimersError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def cmd_run(args):
    def go():
        cfg = C.load(args.config)
        out = args.out or cfg.output
        man = run_config(cfg, out)
        print(f"{cfg.mode}: wrote {len(man.outputs)} file(s) to {out}")
        return EXIT_OK
    return _guard(go)


def cmd_figure(args):
    def go():
        t0 = time.perf_counter()
        data = reproduce_figure(args.name, seed=args.seed)
        out = args.out or os.path.join("results", args.name)
        man = RunManifest(f"figure:{args.name}", "figure", args.seed)
        outputs = {f"{args.name}_{curve}.csv": (cols, rows) for curve, (cols, rows) in data.items()}
        write_outputs(outputs, out, man, _meta(man.config_hash, f"figure {args.name}", args.seed))
        man.wall_time = time.perf_counter() - t0
        man.write(out)
        print(f"{args.name}: wrote {len(outputs)} curve(s) to {out}")
        return EXIT_OK
    return _guard(go)


def cmd_estimates(args):
    def go():
        rep = estimates(threshold=args.threshold)
        for k, v in rep.rows():
            print(f"{k:32s} {v}")
        for n in rep.notes:
            print(f"note: {n}")
        if args.out:
            man = RunManifest("estimates", "estimates", None)
            write_outputs({"estimates.csv": (["quantity", "value"], rep.rows())}, args.out, man,
                          _meta(man.config_hash, "estimates", None))
            man.write(args.out)
        return EXIT_OK
    return _guard(go)


def cmd_validate(args):
    def go():
        cfg = C.load(args.config)
        if cfg.reservoir is None or cfg.omega is None:
            raise ConfigError("validate needs a [reservoir] section with 'omega'", "omega")
        res = validate(cfg.reservoir, cfg.omega, cfg.chain, cfg.lattice, threshold=args.threshold)
        for name, margin, ok in res.rows():
            print(f"{name:16s} {margin:12.4g}  {'pass' if ok else 'FAIL'}")
        for name, ok in res.checks.items():
            print(f"check {name:12s} {'pass' if ok else 'FAIL'}")
        print("all checks pass" if res.all_ok else "some checks fail")
        if args.out:
            man = RunManifest(cfg.digest(), "validate", None)
            rows = [[k, v, ok] for k, v, ok in res.rows()]
            write_outputs({"validity.csv": (["name", "margin", "passed"], rows)}, args.out, man,
                          _meta(man.config_hash, "validate", None))
            man.write(args.out)
        return EXIT_OK
    return _guard(go)


def override(text, key, value):
    """Set ``key`` in whichever of [reservoir], [chain], [run] defines it."""
    cp = C._reader()
    cp.read_string(text)
    for sec in ("chain", "reservoir", "run", "lattice"):
        if cp.has_section(sec) and key in cp[sec]:
            cp[sec][key] = repr(float(value))
            buf = _io.StringIO()
            cp.write(buf)
            return buf.getvalue()
    raise ConfigError(f"sweep parameter {key!r} is not set in the config", key)


def _sweep_point(item):
    i, text, out = item
    try:
        man = run_config(C.loads(text), out)
        return i, "ok", len(man.outputs)
    except ChiralDimersError as exc:
        return i, f"{type(exc).__name__}: {exc}", 0


def cmd_sweep(args):
    def go():
        if args.steps < 1:
            raise ConfigError("--steps must be >= 1", "steps")
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        base = C.loads(text)
        out = args.out or base.output
        values = np.linspace(args.start, args.stop, args.steps)
        items = []
        for i, v in enumerate(values):
            t = override(text, args.param, v)
            C.loads(t)              # fail fast on a bad value
            items.append((i, t, os.path.join(out, f"{args.param}_{i:03d}")))
        n = min(worker_count(), len(items))
        if n > 1:
            with ProcessPoolExecutor(n) as ex:
                results = list(ex.map(_sweep_point, items))
        else:
            results = [_sweep_point(it) for it in items]
        results.sort()
        rows = [[i, values[i], os.path.basename(items[i][2]), status] for i, status, _ in results]
        man = RunManifest(base.digest(), f"sweep {base.mode}", base.seed)
        write_outputs({"sweep.csv": (["index", args.param, "directory", "status"], rows)}, out, man,
                      _meta(man.config_hash, f"sweep {base.mode}", base.seed,
                            {"param": args.param}))
        man.write(out)
        failed = sum(1 for r in results if r[1] != "ok")
        print(f"sweep over {args.param}: {len(rows) - failed} ok, {failed} failed -> {out}")
        return EXIT_RUNTIME if failed else EXIT_OK
    return _guard(go)


def build_parser():
    ap = argparse.ArgumentParser(prog="chiral-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one config file")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: [run] output)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("figure", help="write the datasets for a figure preset")
    p.add_argument("name", help=", ".join(FIGURES))
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("estimates", help="Rb/Yb order-of-magnitude report")
    p.add_argument("--out")
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_estimates)

    p = sub.add_parser("validate", help="approximation margins for a config")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="repeat a config over one parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
