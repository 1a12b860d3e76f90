"""Command-line entry point: ``msdehaze {dehaze,synth,eval,inspect}``.

Exit status is 0 on success, 1 for usage/configuration errors and 2 for
runtime failures; failures print one JSON line on standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .airlight import validate_airlight
from .config import ConfigError, PipelineConfig
from .imagecore import ImageError, load_image, save_image
from .pyramid import visualize_laplacian
from .restore import run_pipeline, run_single_scale
from .synth import (SKY_T, HazeScene, evaluate, layer_depths, make_layered_scene, synthesize)
from .transmission import STAGES

log = logging.getLogger("msdehaze")

IMAGE_EXTS = {".ppm", ".pgm", ".pnm", ".png"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _triple(text: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
        return validate_airlight(vals)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _angle(text: str) -> float:
    text = text.strip()
    try:
        if text.startswith("pi/"):
            return math.pi / float(text[3:])
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}") from exc


def _gains(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad gain list {text!r}") from exc


def _add_tuning(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline tuning (override --config)")
    g.add_argument("--config", type=Path, help="key = value config file")
    g.add_argument("--eta", type=float)
    g.add_argument("--levels", type=int, help="pyramid depth L0 (1-3)")
    g.add_argument("--detail-gain", type=_gains, help="comma-separated per-level Laplacian gains")
    g.add_argument("--rho-dark", type=int)
    g.add_argument("--rho-wgif", type=int)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--bin-step", type=_angle, help="radians or pi/N")
    g.add_argument("--nu", type=int)
    g.add_argument("--r-min", type=float)
    g.add_argument("--tl", dest="t_low", type=float, help="single-scale transmission floor")
    g.add_argument("--airlight", type=_triple, help="r,g,b override of the estimated airlight")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="msdehaze", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log stage timings to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dehaze", help="restore haze-free image(s)")
    d.add_argument("--input", required=True, type=Path, help="image file or directory")
    d.add_argument("--output", required=True, type=Path, help="image file or directory")
    d.add_argument("--single-scale", action="store_true", help="run the single-scale baseline instead")
    d.add_argument("--save-transmission", type=Path, help="write a transmission stage as grayscale")
    d.add_argument("--transmission-stage", choices=STAGES, default="refined")
    d.add_argument("--dump-pyramid", type=Path, help="directory for pyramid level images")
    d.add_argument("--threads", type=int, default=0, help="images processed in parallel (0: all cores)")
    _add_tuning(d)

    s = sub.add_parser("synth", help="synthesize a hazy image with known ground truth")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--truth", required=True, type=Path)
    s.add_argument("--tmap", required=True, type=Path)
    s.add_argument("--mask", type=Path, help="write the sky mask (t < 0.02)")
    s.add_argument("--clean", type=Path, help="use this image instead of the generated texture")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--airlight", type=_triple, default=np.array([0.8, 0.82, 0.85]))
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=256)
    s.add_argument("--layers", type=int, default=4)
    s.add_argument("--constant-t", type=float, help="uniform transmission instead of depth bands")

    e = sub.add_parser("eval", help="full-reference metrics as JSON")
    e.add_argument("--clean", required=True, type=Path)
    e.add_argument("--restored", required=True, type=Path)
    e.add_argument("--hazy", type=Path)
    e.add_argument("--tmap-true", type=Path)
    e.add_argument("--tmap-est", type=Path)
    e.add_argument("--mask", type=Path)
    e.add_argument("--reference", type=Path, help="restoration of the noise-free hazy image")
    e.add_argument("--noise", type=float, help="input noise std for the sky noise gain")
    e.add_argument("--json", required=True, type=Path)

    i = sub.add_parser("inspect", help="dump pyramid levels, transmission stages and airlight")
    i.add_argument("--input", required=True, type=Path)
    i.add_argument("--outdir", required=True, type=Path)
    i.add_argument("--timings", action="store_true", help="also write timings.json (not reproducible)")
    _add_tuning(i)
    return p


def resolve_config(args) -> PipelineConfig:
    base = cfgmod.load_config(args.config) if args.config else PipelineConfig()
    return base.updated(
        eta=args.eta, levels=args.levels, detail_gain=args.detail_gain, rho_dark=args.rho_dark,
        rho_wgif=args.rho_wgif, lam=args.lam, bin_step=args.bin_step, nu=args.nu, r_min=args.r_min,
        t_low=args.t_low,
    )


def _dump_pyramid(result, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    for lvl, g in enumerate(result.pyramid.gaussian):
        save_image(g, outdir / f"gaussian_{lvl}.ppm")
    for lvl, lap in enumerate(result.pyramid.laplacian):
        save_image(visualize_laplacian(lap), outdir / f"laplacian_{lvl}.ppm")


def _dehaze_one(src: Path, dst: Path, cfg: PipelineConfig, args) -> None:
    z = load_image(src)
    run = run_single_scale if args.single_scale else run_pipeline
    result = run(z, cfg, args.airlight)
    dst.parent.mkdir(parents=True, exist_ok=True)
    save_image(result.image, dst)
    for name, ms in result.timings_ms.items():
        log.info("%s %s: %.1f ms", src.name, name, ms)
    if args.save_transmission:
        target = args.save_transmission
        if args.input.is_dir():
            target = target / (src.stem + ".pgm")
            target.parent.mkdir(parents=True, exist_ok=True)
        save_image(result.stages.stage(args.transmission_stage).t, target)
    if args.dump_pyramid:
        _dump_pyramid(result, args.dump_pyramid / src.stem if args.input.is_dir() else args.dump_pyramid)


def cmd_dehaze(args) -> None:
    cfg = resolve_config(args)
    if args.input.is_dir():
        srcs = sorted(p for p in args.input.iterdir() if p.suffix.lower() in IMAGE_EXTS)
        args.output.mkdir(parents=True, exist_ok=True)
        jobs = [(s, args.output / s.name) for s in srcs]
    else:
        jobs = [(args.input, args.output)]
    threads = args.threads or os.cpu_count() or 1
    if threads < 1:
        raise UsageError("--threads must be >= 0")
    with ThreadPoolExecutor(max_workers=min(threads, max(len(jobs), 1))) as pool:
        for fut in [pool.submit(_dehaze_one, s, d, cfg, args) for s, d in jobs]:
            fut.result()


def cmd_synth(args) -> None:
    if args.constant_t is not None and not 0 < args.constant_t <= 1:
        raise UsageError("--constant-t must be in (0, 1]")
    if args.alpha <= 0 or args.noise < 0:
        raise UsageError("--alpha must be > 0 and --noise >= 0")
    scene = make_layered_scene(args.width, args.height, args.layers, args.alpha, args.airlight, args.seed,
                               args.noise)
    if args.clean:
        clean = load_image(args.clean)
        if clean.shape[2] == 1:
            clean = np.repeat(clean, 3, axis=2)
        h, w = clean.shape[:2]
        depths = layer_depths(args.layers, args.alpha)[::-1]
        band = np.minimum(np.arange(h) * args.layers // h, args.layers - 1)
        depth = np.repeat(depths[band][:, None], w, axis=1)
        scene = HazeScene(clean, depth, args.alpha, args.airlight, args.noise, args.seed)
    if args.constant_t is not None:
        depth = np.full(scene.depth.shape, -math.log(args.constant_t) / args.alpha)
        scene = HazeScene(scene.clean, depth, args.alpha, args.airlight, args.noise, args.seed, scene.labels)
    save_image(synthesize(scene), args.out)
    save_image(scene.clean, args.truth)
    save_image(scene.transmission, args.tmap)
    if args.mask:
        save_image((scene.transmission < SKY_T).astype(np.float64), args.mask)


def cmd_eval(args) -> None:
    def opt(p):
        return load_image(p) if p else None

    report = evaluate(
        load_image(args.clean), load_image(args.restored), hazy=opt(args.hazy),
        t_true=opt(args.tmap_true), t_est=opt(args.tmap_est), sky_mask=opt(args.mask),
        reference=opt(args.reference), noise_std=args.noise,
    )
    args.json.parent.mkdir(parents=True, exist_ok=True)
    args.json.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def cmd_inspect(args) -> None:
    cfg = resolve_config(args)
    result = run_pipeline(load_image(args.input), cfg, args.airlight)
    out = args.outdir
    _dump_pyramid(result, out)
    save_image(result.expanded, out / "expanded_0.ppm")
    for name in STAGES:
        save_image(result.stages.stage(name).t, out / f"transmission_{name}.pgm")
    save_image(result.stages.guidance, out / "guidance.pgm")
    for lvl, t in enumerate(result.t_pyramid):
        save_image(t, out / f"transmission_level_{lvl}.pgm")
    save_image(result.image, out / "dehazed.ppm")
    info = {
        "airlight": [float(v) for v in result.airlight],
        "haze_line_subsets": result.stages.clusters.n_subsets,
        "config": cfgmod.serialize(cfg).splitlines(),
    }
    (out / "airlight.json").write_text(json.dumps(info, indent=2) + "\n")
    (out / "config.txt").write_text(cfgmod.serialize(cfg))
    for name, ms in result.timings_ms.items():
        log.info("%s: %.1f ms", name, ms)
    if args.timings:
        (out / "timings.json").write_text(json.dumps(result.timings_ms, indent=2) + "\n")


COMMANDS = {"dehaze": cmd_dehaze, "synth": cmd_synth, "eval": cmd_eval, "inspect": cmd_inspect}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 1)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        return _fail("usage", str(exc), 1)
    except (ImageError, OSError, ValueError) as exc:
        return _fail("runtime", str(exc), 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
