"""Command-line surface for batch restoration runs.

Scenes on disk are directories holding ``color.p6``, ``gray.p5``,
``mask.p5`` and optionally ``truth.p6``. Signals are text files with one
sample per line followed by a K/D region tag. Projections are spelled
``mean`` (equal weights, identity curve), ``table:<file>`` (a saved fit
table) or ``fig8`` (the built-in quartic test distortion).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import projection as proj
from .descent1d import Descent1DConfig, parse_signal_text, steep_desc
from .descent2d import Descent2DConfig, steep_desc_2d
from .errors import RecolorError
from .gabor import spectrogram, tight_frame
from .image import (
    KNOWN_COLOR,
    GrayImage,
    ObservedScene,
    load_color,
    load_scene,
    save_image,
    save_mask,
)
from .pipeline import PipelineConfig, initial_guess, run_combined
from .voronoi import RestoreParams, restore


def parse_projection_spec(spec: str) -> proj.NonlinearProjection:
    if spec == "mean":
        return proj.mean_projection()
    if spec == "fig8":
        return proj.quartic_projection()
    if spec.startswith("table:"):
        return proj.load_fit_report(spec[len("table:") :]).projection
    raise ValueError(f"unknown projection spec {spec!r} (want mean, fig8 or table:<file>)")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _scene_paths(scene_dir) -> tuple[Path, Path, Path]:
    base = Path(scene_dir)
    return base / "color.p6", base / "gray.p5", base / "mask.p5"


def _load_scene_dir(scene_dir) -> ObservedScene:
    color, gray, mask = _scene_paths(scene_dir)
    return load_scene(color, gray, mask)


def _fit_from_scene(scene: ObservedScene, bins: int) -> proj.FitReport:
    sel = scene.mask.states == KNOWN_COLOR
    return proj.estimate(scene.color.planes[sel], scene.gray.plane[sel], bins)


def _cmd_distort(args) -> int:
    from .pipeline import distort
    from .image import load_mask

    truth = load_color(args.truth)
    mask = load_mask(args.mask)
    p = parse_projection_spec(args.proj)
    scene = distort(truth, mask, p)
    out = Path(args.out_scene)
    out.mkdir(parents=True, exist_ok=True)
    save_image(scene.color, out / "color.p6")
    save_image(scene.gray, out / "gray.p5")
    save_mask(scene.mask, out / "mask.p5")
    save_image(truth, out / "truth.p6")
    print(f"scene written to {out}")
    return 0


def _cmd_estim(args) -> int:
    scene = _load_scene_dir(args.scene)
    fit = _fit_from_scene(scene, args.bins)
    proj.save_fit_report(fit, args.out)
    w = fit.projection.weights
    print(
        f"weights=({w[0]:.4f}, {w[1]:.4f}, {w[2]:.4f}) "
        f"variance={fit.variance:.3e} samples={fit.sample_count}"
    )
    return 0


def _cmd_restore_interp(args) -> int:
    scene = _load_scene_dir(args.scene)
    params = RestoreParams(threshold_scale=args.c, max_outer_iters=args.max_iters)
    result = restore(scene, params, dump_dir=args.dump_dir)
    save_image(result.color, args.out)
    print(
        f"iterations={result.iterations} accepted={result.accepted_counts[-1]}"
        f"{' (cap reached)' if result.cap_reached else ''}"
    )
    return 0


def _cmd_restore_pde(args) -> int:
    scene = _load_scene_dir(args.scene)
    fit = _fit_from_scene(scene, bins=32)
    cfg = Descent2DConfig(
        mu=args.mu, lam=args.lam, dt=args.dt, max_iters=args.sweeps, modified=args.modified
    )
    truth = load_color(args.truth) if args.truth else None
    u0 = initial_guess(scene, fit.projection)
    dump_dir = Path(args.out).parent / "dumps" if args.dump_every else None
    result = steep_desc_2d(
        fit.projection, scene, u0, cfg, truth=truth,
        dump_every=args.dump_every, dump_dir=dump_dir,
    )
    save_image(result.image, args.out)
    _print_descent_trace(result)
    return 0


def _cmd_restore_combined(args) -> int:
    scene = _load_scene_dir(args.scene)
    cfg = PipelineConfig(
        interp_iters=args.interp_iters,
        descent_cfg=Descent2DConfig(mu=args.mu, lam=args.lam, dt=args.dt, max_iters=args.sweeps),
    )
    truth = load_color(args.truth) if args.truth else None
    result = run_combined(scene, cfg, truth=truth)
    save_image(result.image, args.out)
    if result.report is not None:
        psnr = "exact" if result.report.exact else f"{result.report.psnr:.2f} dB"
        print(f"rmse={result.report.rmse:.5f} psnr={psnr}")
    print(f"descent sweeps={result.descent.sweeps}")
    return 0


def _cmd_restore_1d(args) -> int:
    signal = parse_signal_text(Path(args.signal).read_text(encoding="ascii"))
    p = parse_projection_spec(args.curve)
    cfg = Descent1DConfig(dt=args.dt)
    result = steep_desc(p, signal, signal.samples, cfg)
    out_lines = [
        f"{float(v)!r} {'D' if d else 'K'}"
        for v, d in zip(result.signal, signal.distorted)
    ]
    Path(args.out).write_text("\n".join(out_lines) + "\n", encoding="ascii")
    print("iteration max_residual")
    for it, r in enumerate(result.trace):
        print(f"{it} {r:.6e}")
    return 0


def _cmd_gabor(args) -> int:
    signal = parse_signal_text(Path(args.signal).read_text(encoding="ascii"))
    frame = tight_frame(len(signal), args.hop, args.bins)
    mags = spectrogram(frame, signal.samples)
    save_image(GrayImage(mags), args.spectrogram)
    print(f"spectrogram {mags.shape[1]}x{mags.shape[0]} written to {args.spectrogram}")
    return 0


def _print_descent_trace(result) -> None:
    if result.psnr_trace is not None:
        print("iteration max_residual psnr")
        for it, (r, q) in enumerate(zip(result.trace, result.psnr_trace)):
            print(f"{it} {r:.6e} {q:.4f}")
    else:
        print("iteration max_residual")
        for it, r in enumerate(result.trace):
            print(f"{it} {r:.6e}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recolor",
        description="Color/signal restoration from sparse samples plus a gray projection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dist = sub.add_parser("distort", help="synthesize a scene from a truth image")
    p_dist.add_argument("--truth", required=True)
    p_dist.add_argument("--mask", required=True)
    p_dist.add_argument("--proj", required=True)
    p_dist.add_argument("--out-scene", required=True)
    p_dist.set_defaults(func=_cmd_distort)

    p_est = sub.add_parser("estim", help="fit the color-to-gray curve from a scene")
    p_est.add_argument("--scene", required=True)
    p_est.add_argument("--bins", type=int, default=32)
    p_est.add_argument("--out", required=True)
    p_est.set_defaults(func=_cmd_estim)

    p_ri = sub.add_parser("restore-interp", help="iterative Voronoi restoration")
    p_ri.add_argument("--scene", required=True)
    p_ri.add_argument("--c", type=float, default=2.0)
    p_ri.add_argument("--max-iters", type=int, default=1000)
    p_ri.add_argument("--out", required=True)
    p_ri.add_argument("--dump-dir", default=None)
    p_ri.set_defaults(func=_cmd_restore_interp)

    p_pde = sub.add_parser("restore-pde", help="curvature descent restoration")
    p_pde.add_argument("--scene", required=True)
    p_pde.add_argument("--dt", type=float, default=0.1)
    p_pde.add_argument("--lambda", dest="lam", type=float, default=10.0)
    p_pde.add_argument("--mu", type=float, default=10.0)
    p_pde.add_argument("--sweeps", type=int, default=300)
    p_pde.add_argument("--modified", type=_parse_bool, default=True)
    p_pde.add_argument("--out", required=True)
    p_pde.add_argument("--truth", default=None)
    p_pde.add_argument("--dump-every", type=int, default=0)
    p_pde.set_defaults(func=_cmd_restore_pde)

    p_comb = sub.add_parser("restore-combined", help="interpolation then descent")
    p_comb.add_argument("--scene", required=True)
    p_comb.add_argument("--interp-iters", type=int, default=3)
    p_comb.add_argument("--dt", type=float, default=0.1)
    p_comb.add_argument("--lambda", dest="lam", type=float, default=10.0)
    p_comb.add_argument("--mu", type=float, default=10.0)
    p_comb.add_argument("--sweeps", type=int, default=300)
    p_comb.add_argument("--out", required=True)
    p_comb.add_argument("--truth", default=None)
    p_comb.set_defaults(func=_cmd_restore_combined)

    p_1d = sub.add_parser("restore-1d", help="1D signal descent")
    p_1d.add_argument("--signal", required=True)
    p_1d.add_argument("--curve", default="fig8")
    p_1d.add_argument("--dt", type=float, default=0.1)
    p_1d.add_argument("--out", required=True)
    p_1d.set_defaults(func=_cmd_restore_1d)

    p_gab = sub.add_parser("gabor", help="short-time Fourier spectrogram")
    p_gab.add_argument("--signal", required=True)
    p_gab.add_argument("--hop", type=int, default=8)
    p_gab.add_argument("--bins", type=int, default=16)
    p_gab.add_argument("--spectrogram", required=True)
    p_gab.set_defaults(func=_cmd_gabor)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RecolorError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
