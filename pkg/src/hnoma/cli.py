"""``hnoma`` command line.

Exit codes: 0 success, 1 runtime failure, 2 invalid input (config,
arguments, image files, CSV).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version

from .analytic import AnalyticConfig, analytic_curve
from .config import bundled_configs, load_config
from .imaging import (
    PgmError,
    mse,
    psnr_report,
    read_pgm,
    synthetic_image,
    transmit_image_pair,
    write_pgm,
)
from .montecarlo import ConfigError, compare_schemes, run_scenario, write_csv, write_json
from .plot import PlotError, read_curve_csv, render_svg

OUT_DIR_ENV = "HNOMA_OUT_DIR"
EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class InvalidInput(Exception):
    pass


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _out_dir(args) -> str:
    d = args.out_dir or os.environ.get(OUT_DIR_ENV) or "results"
    os.makedirs(d, exist_ok=True)
    return d


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _load(args):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"sweep.seed={args.seed}")
    try:
        return load_config(args.config, overrides)
    except ConfigError as exc:
        raise InvalidInput(str(exc)) from exc


def _manifest(out_dir, args, run, outputs, started, extra=None):
    doc = {
        "config_path": run.source,
        "config_echo": run.echo,
        "resolved": run.scenario.to_dict(),
        "seed": run.scenario.seed,
        "tool_version": _version(),
        "outputs": sorted(outputs),
        "wall_clock_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        doc.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=list)
        fh.write("\n")
    return path


def cmd_ber(args) -> int:
    started = time.perf_counter()
    run = _load(args)
    out_dir = _out_dir(args)
    stem = _stem(run.source)
    if args.compare:
        schemes = run.compare_schemes or (run.scenario.scheme,)
        cmp = compare_schemes(run.scenario, schemes, run.compare_targets, args.workers)
        curves = list(cmp.curves.values())
        gaps = [
            {"scheme": s, "user": u, "target_ber": t, **g}
            for (s, u, t), g in sorted(cmp.gaps.items())
        ]
        extra = {"reference": cmp.reference, "gaps": gaps}
    else:
        curves = [run_scenario(run.scenario, args.workers)]
        extra = None
    path = os.path.join(out_dir, f"{stem}_ber.{args.format}")
    if args.format == "csv":
        write_csv(path, curves)
    else:
        write_json(path, curves, run.scenario.to_dict(), run.scenario.seed, extra)
    _manifest(out_dir, args, run, [path], started)
    print(path)
    return EXIT_OK


def cmd_analytic(args) -> int:
    started = time.perf_counter()
    run = _load(args)
    sc = run.scenario
    if sc.n_users != 2:
        raise InvalidInput("the analytic model covers two users only")
    try:
        acfg = AnalyticConfig(M1=run.M1, M2=run.M2, alpha1=sc.alphas[0], alpha2=sc.alphas[1],
                              q1=sc.distances[0], q2=sc.distances[1], zeta=sc.exponent,
                              snr_grid_db=sc.snr_grid_db, pc_variant=run.pc_variant)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    out_dir = _out_dir(args)
    pts = analytic_curve(acfg)
    rows = [{"scheme": "analytic", "user": u, "snr_db": p.snr_dB,
             "ber": p.ber_user1 if u == 1 else p.ber_user2}
            for u in (1, 2) for p in pts]
    path = os.path.join(out_dir, f"{_stem(run.source)}_analytic.{args.format}")
    with open(path, "w") as fh:
        if args.format == "csv":
            fh.write("scheme,user,snr_db,ber\n")
            for r in rows:
                fh.write(f"{r['scheme']},{r['user']},{r['snr_db']!r},{r['ber']!r}\n")
        else:
            json.dump({"config": run.echo, "results": rows}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _manifest(out_dir, args, run, [path], started)
    print(path)
    return EXIT_OK


def _image_source(spec: str, size: int):
    """A PGM path or ``synthetic:<kind>[:<seed>]``."""
    if spec.startswith("synthetic:"):
        parts = spec.split(":")
        kind = parts[1]
        seed = int(parts[2]) if len(parts) > 2 else 0
        try:
            return synthetic_image(kind, size=size, seed=seed)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from exc
    try:
        return read_pgm(spec)
    except (OSError, PgmError) as exc:
        raise InvalidInput(f"{spec}: {exc}") from exc


def cmd_image(args) -> int:
    started = time.perf_counter()
    run = _load(args)
    far = _image_source(args.far or run.image_far, run.image_size)
    near = _image_source(args.near or run.image_near, run.image_size)
    if (far.width, far.height) != (near.width, near.height):
        raise InvalidInput(
            f"image sizes differ: {far.width}x{far.height} vs {near.width}x{near.height}"
        )
    if run.scenario.n_users != 2:
        raise InvalidInput("image transport needs a two-user scenario")
    out_dir = _out_dir(args)
    schemes = run.compare_schemes or (run.scenario.scheme,)
    outputs, entries = [], []
    for s in schemes:
        cfg = run.scenario.replace(scheme=s)
        rf, rn, (pf, pn) = transmit_image_pair(far, near, cfg)
        for user, img, orig, p in ((1, rf, far, pf), (2, rn, near, pn)):
            path = os.path.join(out_dir, f"{cfg.scheme}_user{user}.pgm")
            write_pgm(img, path)
            outputs.append(path)
            entries.append((cfg.scheme, user, p, mse(orig, img)))
    report = os.path.join(out_dir, "psnr.json")
    with open(report, "w") as fh:
        fh.write(psnr_report(entries))
    outputs.append(report)
    _manifest(out_dir, args, run, outputs, started)
    for s, u, p, _ in entries:
        print(f"{s} user {u}: PSNR {'inf' if math.isinf(p) else f'{p:.2f}'} dB")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        series = read_curve_csv(args.csv_in)
    except (OSError, PlotError) as exc:
        raise InvalidInput(str(exc)) from exc
    svg = render_svg(series, title=args.title or _stem(args.csv_in))
    with open(args.svg_out, "w") as fh:
        fh.write(svg)
    print(args.svg_out)
    return EXIT_OK


def cmd_gen_image(args) -> int:
    try:
        img = synthetic_image(args.kind, size=args.size, seed=args.seed or 0)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    write_pgm(img, args.out)
    print(args.out)
    return EXIT_OK


def cmd_configs(args) -> int:
    for name in bundled_configs():
        print(name)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidInput(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hnoma", description="NOMA link-level BER and image experiments")
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="config file or bundled scenario name")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./results)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config key (repeatable)")

    sp = sub.add_parser("ber", help="Monte Carlo BER sweep")
    common(sp)
    sp.add_argument("--compare", action="store_true",
                    help="run every scheme in [compare] under common random numbers")
    sp.set_defaults(func=cmd_ber)

    sp = sub.add_parser("analytic", help="closed-form two-user BER")
    common(sp)
    sp.set_defaults(func=cmd_analytic)

    sp = sub.add_parser("image", help="send an image pair and score PSNR")
    common(sp)
    sp.add_argument("--far", help="PGM for user 1 or synthetic:<kind>[:<seed>]")
    sp.add_argument("--near", help="PGM for user 2 or synthetic:<kind>[:<seed>]")
    sp.set_defaults(func=cmd_image)

    sp = sub.add_parser("plot", help="render a BER CSV as SVG")
    sp.add_argument("csv_in")
    sp.add_argument("svg_out")
    sp.add_argument("--title")
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("gen-image", help="write a synthetic test image")
    sp.add_argument("kind")
    sp.add_argument("out")
    sp.add_argument("--size", type=int, default=512)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_gen_image)

    sp = sub.add_parser("configs", help="list bundled scenarios")
    sp.set_defaults(func=cmd_configs)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
            raise InvalidInput("--workers must be >= 1")
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - top-level runtime guard
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
