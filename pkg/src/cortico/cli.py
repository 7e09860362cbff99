"""Command line for completion, lifting, inversion, curve fans and benchmarks.

Exit status: 0 on success, 1 on validation errors (bad flags, unreadable or
mismatched files), 2 on numerical failure (instability, non-finite values,
failed benchmark checks). Human-readable messages go to stderr; every
machine-readable record is a single JSON line on stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import synth
from .diffusion import DiffusionConfig
from .gabor import GaborParams, default_frequencies, inverse_transform, \
    lift, make_bank, project_sum
from .geometry import CorticalPoint, curve_fan, integrate_curve
from .pipeline import (
    CompletionRequest,
    complete_image,
    load_image,
    load_mask,
    load_volume,
    rmse_region,
    save_image,
    save_volume,
)


class CliError(Exception):
    """Validation failure; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def parse_frequencies(spec: str) -> tuple:
    """Parse 'min:max:count' (uniform spacing) or an explicit comma list."""
    try:
        if ":" in spec:
            lo, hi, count = spec.split(":")
            return default_frequencies(float(lo), float(hi), int(count))
        return tuple(float(v) for v in spec.split(","))
    except (ValueError, TypeError) as exc:
        raise CliError(f"--freqs: cannot parse {spec!r}: {exc}") from exc


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _add_gabor_flags(p):
    g = p.add_argument_group("filter bank")
    g.add_argument("--sigma", type=float, default=2.0,
                   help="Gaussian scale of the atoms in pixels")
    g.add_argument("--orientations", type=int, default=32, metavar="K",
                   help="orientation channels over the half circle")
    g.add_argument("--phases", type=int, default=5, metavar="M",
                   help="phase channels")
    g.add_argument("--freqs", type=str, default="2:8:12",
                   help="frequency list, 'min:max:count' or comma values "
                        "(radians per pixel)")
    g.add_argument("--support-radius", type=int, default=None,
                   help="atom half-width in pixels (default ceil(3*sigma))")


def _add_diffusion_flags(p):
    g = p.add_argument_group("diffusion")
    g.add_argument("--mode", choices=["exact", "approx", "approximate"],
                   default="exact", help="full 5D generator or per-channel")
    g.add_argument("--dt", type=float, default=0.1, help="time step")
    g.add_argument("--tmax", type=float, default=10.0, help="final time cap")
    g.add_argument("--tol", type=float, default=1e-4,
                   help="relative-change stopping threshold (0 disables)")
    g.add_argument("--beta2", type=float, default=None,
                   help="orientation weight (default K/(N*sqrt(2)))")
    g.add_argument("--beta3", type=float, default=None,
                   help="frequency-fiber weight (default L/(N*sqrt(2)))")
    g.add_argument("--beta4", type=float, default=None,
                   help="frequency-axis weight (default M/(N*sqrt(2)))")
    g.add_argument("--stencil", choices=["composition", "paper-literal"],
                   default="composition",
                   help="rotated second-derivative discretization")
    g.add_argument("--bspline-degree", type=int, choices=[1, 3], default=3,
                   help="interpolation degree for off-grid reads")
    g.add_argument("--dilation", type=int, default=2,
                   help="pixels of mask dilation before lifting the region")


def _gabor_from_args(args) -> GaborParams:
    params = GaborParams(sigma=args.sigma, K=args.orientations,
                         frequencies=parse_frequencies(args.freqs),
                         M=args.phases, support_radius=args.support_radius)
    aliased = params.aliased_frequencies()
    if aliased:
        _say(f"warning: frequencies above pi alias on the pixel grid: "
             f"{', '.join(f'{f:g}' for f in aliased)}")
    return params


def _diffusion_from_args(args) -> DiffusionConfig:
    return DiffusionConfig(mode=args.mode, beta2=args.beta2, beta3=args.beta3,
                           beta4=args.beta4, dt=args.dt, t_max=args.tmax,
                           tol=args.tol, stencil=args.stencil,
                           spline_degree=args.bspline_degree)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="cortico",
        description="Grayscale occlusion completion via an orientation-"
                    "frequency-phase lift and horizontal diffusion.")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("complete", formatter_class=fmt,
                       help="complete the masked region of an image")
    p.add_argument("--input", default="input.png", help="corrupted image")
    p.add_argument("--mask", default="mask.png",
                   help="mask image; nonzero pixels are corrupted")
    p.add_argument("--out", default="completed.png", help="output image")
    p.add_argument("--ground-truth", default=None,
                   help="optional clean image for masked-region RMSE")
    p.add_argument("--blend-band", type=int, default=2,
                   help="linear seam band inside the mask border, pixels")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for transform stages")
    p.add_argument("--allow-color", action="store_true",
                   help="accept color input, converting via luma")
    _add_gabor_flags(p)
    _add_diffusion_flags(p)

    p = sub.add_parser("lift", formatter_class=fmt,
                       help="Gabor-lift an image to a CRTX response volume")
    p.add_argument("--input", default="input.png", help="image to lift")
    p.add_argument("--out", default="volume.crtx", help="output CRTX file")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--allow-color", action="store_true")
    _add_gabor_flags(p)

    p = sub.add_parser("invert", formatter_class=fmt,
                       help="reconstruct an image from a CRTX volume")
    p.add_argument("--volume", default="volume.crtx", help="CRTX input")
    p.add_argument("--out", default="reconstructed.png", help="output image")
    p.add_argument("--reference", default=None,
                   help="optional image whose range anchors the output; "
                        "otherwise the reconstruction is range-normalized")
    p.add_argument("--support-radius", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("curves", formatter_class=fmt,
                       help="export horizontal integral curves as CSV")
    p.add_argument("--start", default="0,0,0,1,0",
                   help="start point x,y,theta,f,s")
    p.add_argument("--coeffs", default=None,
                   help="single curve: four coefficients c1,c2,c3,c4")
    p.add_argument("--base-field", type=int, default=1, choices=[1, 2, 3, 4],
                   help="fan: field with unit coefficient")
    p.add_argument("--sweep-field", type=int, default=2, choices=[1, 2, 3, 4],
                   help="fan: field whose coefficient sweeps")
    p.add_argument("--sweep", default="-0.5,-0.25,0,0.25,0.5",
                   help="fan: comma list of sweep coefficients")
    p.add_argument("--step", type=float, default=1e-3, help="time step")
    p.add_argument("--duration", type=float, default=5.0,
                   help="integration time")
    p.add_argument("--method", choices=["rk4", "euler"], default="rk4")
    p.add_argument("--out", default="curve.csv",
                   help="output CSV path; fans number it per curve")

    p = sub.add_parser("bench", formatter_class=fmt,
                       help="run the built-in round-trip and stripe suites")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for synthetic test images")
    p.add_argument("--size", type=int, default=64, help="image size")
    p.add_argument("--threads", type=int, default=1)
    return parser


def _cmd_complete(args) -> int:
    image = load_image(args.input, allow_color=args.allow_color)
    mask = load_mask(args.mask)
    gabor = _gabor_from_args(args)
    diffusion = _diffusion_from_args(args)
    request = CompletionRequest(image=image, mask=mask, gabor=gabor,
                                diffusion=diffusion,
                                mask_dilation=args.dilation,
                                blend_band=args.blend_band,
                                threads=args.threads)
    truth = load_image(args.ground_truth) if args.ground_truth else None
    _say(f"completing {args.input} ({image.shape[0]}x{image.shape[1]}, "
         f"{gabor.K} orientations, {gabor.L} frequencies, {gabor.M} phases, "
         f"{diffusion.mode} mode)")
    report = complete_image(request, ground_truth=truth)
    save_image(report.completed, args.out)
    _say(f"wrote {args.out}")
    print(report.to_json())
    return 0


def _cmd_lift(args) -> int:
    image = load_image(args.input, allow_color=args.allow_color)
    gabor = _gabor_from_args(args)
    volume = lift(image, make_bank(gabor), threads=args.threads)
    save_volume(volume, args.out)
    _say(f"wrote {args.out}")
    print(json.dumps({"written": args.out, "shape": list(volume.data.shape)}))
    return 0


def _cmd_invert(args) -> int:
    volume = load_volume(args.volume)
    params = volume.params
    if args.support_radius is not None:
        params = GaborParams(sigma=params.sigma, K=params.K,
                             frequencies=params.frequencies, M=params.M,
                             delta_s=params.delta_s,
                             support_radius=args.support_radius)
    if params.L == 1:
        reference = load_image(args.reference) if args.reference else None
        img = project_sum(volume, reference=reference)
        if reference is None:
            img = _range_normalize(img)
    else:
        bank = make_bank(params)
        img = inverse_transform(volume, bank, threads=args.threads)
        if args.reference:
            from .gabor import affine_fit
            ref = load_image(args.reference)
            a, b = affine_fit(img, ref)
            img = a * img + b
        else:
            img = _range_normalize(img)
    save_image(img, args.out)
    _say(f"wrote {args.out}")
    print(json.dumps({"written": args.out, "size": int(img.shape[0])}))
    return 0


def _range_normalize(img: np.ndarray) -> np.ndarray:
    lo, hi = float(img.min()), float(img.max())
    if hi == lo:
        return np.full_like(img, 0.5)
    return (img - lo) / (hi - lo)


def _cmd_curves(args) -> int:
    vals = [float(v) for v in args.start.split(",")]
    if len(vals) != 5:
        raise CliError(f"--start needs x,y,theta,f,s, got {args.start!r}")
    start = CorticalPoint(*vals)
    written = []
    if args.coeffs is not None:
        coeffs = [float(v) for v in args.coeffs.split(",")]
        if len(coeffs) != 4:
            raise CliError(f"--coeffs needs four values, got {args.coeffs!r}")
        curve = integrate_curve(start, coeffs, args.step, args.duration,
                                method=args.method)
        curve.to_csv(args.out)
        written.append(args.out)
    else:
        sweep = [float(v) for v in args.sweep.split(",")]
        fan = curve_fan(start, args.base_field, args.sweep_field, sweep,
                        args.step, args.duration, method=args.method)
        stem, dot, ext = args.out.rpartition(".")
        if not dot:
            stem, ext = args.out, "csv"
        for i, curve in enumerate(fan):
            path = f"{stem}_{i:02d}.{ext}"
            curve.to_csv(path)
            written.append(path)
    _say(f"wrote {len(written)} curve file(s)")
    print(json.dumps({"written": written}))
    return 0


def _cmd_bench(args) -> int:
    from .gabor import affine_fit
    n = args.size
    checks = []

    def check(name, value, limit, smaller_is_better=True):
        ok = value <= limit if smaller_is_better else value >= limit
        checks.append({"name": name, "value": value, "limit": limit,
                       "pass": bool(ok)})
        _say(f"[{'PASS' if ok else 'FAIL'}] {name}: {value:.4f} "
             f"(limit {limit:.4f})")

    rt_params = GaborParams(sigma=2.0, K=16,
                            frequencies=default_frequencies(0.5, 1.75, 6), M=5)
    bank = make_bank(rt_params)
    images = {
        "wood": synth.wood_texture(n, seed=args.seed),
        "weave": synth.weave_texture(n, seed=args.seed + 1),
        "natural": synth.natural_crop(n, seed=args.seed + 2),
    }
    r = rt_params.support_radius
    for name, img in images.items():
        rec = inverse_transform(lift(img, bank, threads=args.threads), bank,
                                threads=args.threads)
        inner = np.zeros(img.shape, bool)
        inner[r:-r, r:-r] = True
        a, b = affine_fit(rec, img, inner)
        err = float(np.linalg.norm((a * rec + b - img)[inner])
                    / np.linalg.norm(img[inner]))
        check(f"round-trip {name}", err, 0.05)

    stripe = _bench_stripe(n, args.threads)
    check("stripe completion vs corrupted", stripe["ratio"], 0.5)
    check("multi-frequency vs single", stripe["multi_rmse"],
          stripe["single_rmse"], smaller_is_better=True)

    print(json.dumps({"checks": checks}))
    return 0 if all(c["pass"] for c in checks) else 2


def _bench_stripe(n: int, threads: int) -> dict:
    f0 = 2 * math.pi / 8
    truth = synth.grating(n, f0, angle=math.pi / 2)
    mask = synth.bar_mask(n, width=8, axis=1)
    corrupted = truth.copy()
    corrupted[mask] = 0.0
    diffusion = DiffusionConfig(mode="approximate", dt=0.1, t_max=10.0, tol=0.0)
    multi = complete_image(CompletionRequest(
        image=corrupted, mask=mask,
        gabor=GaborParams(sigma=2.0, K=16,
                          frequencies=default_frequencies(0.4, 1.2, 6), M=5),
        diffusion=diffusion, threads=threads), ground_truth=truth)
    single = complete_image(CompletionRequest(
        image=corrupted, mask=mask,
        gabor=GaborParams(sigma=2.0, K=16, frequencies=(f0,), M=5),
        diffusion=diffusion, threads=threads), ground_truth=truth)
    base = rmse_region(corrupted, truth, mask)
    return {"multi_rmse": multi.rmse_masked, "single_rmse": single.rmse_masked,
            "corrupted_rmse": base, "ratio": multi.rmse_masked / base}


_HANDLERS = {
    "complete": _cmd_complete,
    "lift": _cmd_lift,
    "invert": _cmd_invert,
    "curves": _cmd_curves,
    "bench": _cmd_bench,
}


def dispatch(argv) -> int:
    """Parse argv and run the selected subcommand; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except CliError as exc:
        _say(f"error: {exc}")
        return 1
    except FileNotFoundError as exc:
        _say(f"error: cannot read {exc.filename!r}")
        return 1
    except (ValueError, OSError) as exc:
        _say(f"error: {exc}")
        return 1
    except FloatingPointError as exc:
        _say(f"numerical failure: {exc}")
        return 2


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
