"""Command-line surface: file-in/file-out pipelines over the library.

Exit codes: 0 success, 1 usage, 2 I/O or file-format problem, 3 numerical
failure (solver non-convergence, undefined metric, impossible sample).
Every failure prints exactly one machine-parsable line to stderr:

    fba: <category>: <message>

with category in {usage, io, format, numeric}. Reports requested with
--json go to stdout and validate against schemas/report.schema.json.
Nothing is overwritten unless --force is given. The --threads flag (or the
FBA_THREADS environment variable) caps worker threads where a subcommand
can use them; results do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .augment import SampleSpec, SamplingError, TTATransform, make_sample_with_meta, tta_inverse, tta_merge
from .core import (
    ConvergenceError,
    DimensionMismatchError,
    FileFormatError,
    MattingError,
    PredictionSet,
    ValueRangeError,
    composite,
)
from .fgbg import FBSolveParams, solve_fb, system_residual
from .fileio import (
    load_prediction_dir,
    read_alpha_map,
    read_color_map,
    save_prediction_dir,
    write_color_map,
    write_fbaf,
    write_image_png,
    write_json,
    write_pfm,
)
from .fusion import FusionParams, fuse
from .losses import EmptyRegionError, EvalMask, total_loss
from .metrics import (
    CONN_STEP,
    CONN_THETA,
    GRAD_EXPONENT,
    GRAD_SIGMA,
    ConnectivitySourceError,
    connectivity_error,
    fg_composite_metrics,
    gradient_error,
    mse,
    sad,
)
from .trimap import (
    DEFAULT_MAX_RADIUS,
    DEFAULT_MIN_RADIUS,
    DEFAULT_SIGMAS,
    RNG_ALGORITHM,
    encode_trimap,
    generate_trimap,
    trimap_from_file,
    trimap_to_file,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

ALL_METRICS = ("sad", "mse", "grad", "conn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here reserves 2 for I/O."""

    def error(self, message):
        raise UsageError(message)


def _diagnose(category: str, message: str) -> None:
    line = " ".join(str(message).split()) or "unknown error"
    print(f"fba: {category}: {line}", file=sys.stderr)


def _ensure_absent(path, force: bool) -> None:
    if not force and Path(path).exists():
        raise FileExistsError(f"{path} exists; pass --force to overwrite")


def _resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("FBA_THREADS", "").strip()
        if env:
            try:
                value = int(env)
            except ValueError as exc:
                raise UsageError(f"FBA_THREADS must be an integer, got {env!r}") from exc
    if value is None:
        return 1
    if value < 1:
        raise UsageError(f"--threads must be >= 1, got {value}")
    return value


def _usage_guard(builder, *args, **kwargs):
    """Flag-derived parameter objects raise usage errors, not data errors."""
    try:
        return builder(*args, **kwargs)
    except (ValueRangeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _print_report(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    skip = {"kind", "version"}
    for key in sorted(report):
        if key in skip:
            continue
        value = report[key]
        if isinstance(value, dict):
            for sub in sorted(value):
                print(f"{key}.{sub} {value[sub]}")
        else:
            print(f"{key} {value}")


def _load_region(trimap_path) -> tuple[EvalMask | None, str]:
    if trimap_path is None:
        return None, "full"
    trimap = trimap_from_file(trimap_path)
    return EvalMask(trimap.unknown_mask), "unknown"


# ---------------------------------------------------------------- commands


def _cmd_composite(args) -> int:
    _ensure_absent(args.output, args.force)
    alpha = read_alpha_map(args.alpha)
    fg = read_color_map(args.fg)
    bg = read_color_map(args.bg)
    write_color_map(args.output, composite(alpha, fg, bg))
    return EXIT_OK


def _cmd_extend_fg(args) -> int:
    params = _usage_guard(
        FBSolveParams,
        smoothness_weight=args.smoothness,
        cg_tolerance=args.tol,
        cg_max_iters=args.cg_max_iters,
    )
    threads = _resolve_threads(args.threads)
    _ensure_absent(args.fg_out, args.force)
    _ensure_absent(args.bg_out, args.force)
    image = read_color_map(args.image)
    alpha = read_alpha_map(args.alpha)
    fg, bg = solve_fb(image, alpha, params, threads=threads)
    write_color_map(args.fg_out, fg)
    write_color_map(args.bg_out, bg)
    if args.verify:
        resid = system_residual(image, alpha, fg, bg, params)
        print(f"relative system residual {resid:.3e}")
    return EXIT_OK


def _cmd_make_trimap(args) -> int:
    if not 1 <= args.min_px <= args.max_px:
        raise UsageError(f"need 1 <= --min-px <= --max-px, got {args.min_px}..{args.max_px}")
    _ensure_absent(args.output, args.force)
    alpha = read_alpha_map(args.alpha)
    trimap = generate_trimap(alpha, args.min_px, args.max_px, seed=args.seed)
    trimap_to_file(trimap, args.output)
    return EXIT_OK


def _cmd_encode_trimap(args) -> int:
    sigmas = _parse_float_list(args.sigmas, expect=3, flag="--sigmas")
    _ensure_absent(args.output, args.force)
    trimap = trimap_from_file(args.trimap)
    encoding = _usage_guard(encode_trimap, trimap, tuple(sigmas))
    write_fbaf(args.output, encoding.as_array())
    return EXIT_OK


def _cmd_fuse(args) -> int:
    have_dir = args.pred_dir is not None
    have_files = all(v is not None for v in (args.alpha, args.fg, args.bg))
    if have_dir == have_files:
        raise UsageError("fuse needs either --pred-dir or all of --alpha/--fg/--bg")
    params = _usage_guard(
        FusionParams,
        sigma_alpha_sq=args.sigma_alpha_sq,
        sigma_fb_sq=args.sigma_fb_sq,
        sigma_c_sq=args.sigma_c_sq,
        iterations=args.iters,
    )
    if have_dir:
        pred = load_prediction_dir(args.pred_dir)
    else:
        pred = PredictionSet(
            alpha=read_alpha_map(args.alpha),
            fg=read_color_map(args.fg),
            bg=read_color_map(args.bg),
        )
    image = read_color_map(args.image)
    fused = fuse(pred, image, params)
    save_prediction_dir(args.output, fused, force=args.force)
    return EXIT_OK


def _cmd_loss(args) -> int:
    if args.mask == "unknown" and args.trimap is None:
        raise UsageError("--mask unknown requires --trimap")
    pred = load_prediction_dir(args.pred_dir)
    gt = load_prediction_dir(args.gt_dir)
    image = read_color_map(args.image)
    mask = None
    if args.mask == "unknown":
        mask = EvalMask(trimap_from_file(args.trimap).unknown_mask)
    report = total_loss(
        pred, gt, image, mask_alpha=mask, mask_fb=mask, gradient_mode=args.gradient_mode
    )
    payload = {
        "kind": "loss",
        "version": __version__,
        "pred_dir": str(args.pred_dir),
        "gt_dir": str(args.gt_dir),
        "image": str(args.image),
        "trimap": str(args.trimap) if args.trimap else None,
        "mask": args.mask,
        "gradient_mode": args.gradient_mode,
        "fb_weight": 0.25,
        **report.as_dict(),
    }
    _print_report(payload, args.json)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    wanted = _parse_metric_list(args.metrics)
    pred = read_alpha_map(args.pred)
    gt = read_alpha_map(args.gt)
    region, region_name = _load_region(args.trimap)
    values: dict[str, float] = {}
    if "sad" in wanted:
        values["sad"] = sad(pred, gt, region)
    if "mse" in wanted:
        values["mse"] = mse(pred, gt, region)
    if "grad" in wanted:
        values["grad"] = _usage_guard(gradient_error, pred, gt, region, sigma=args.sigma, q=args.q)
    if "conn" in wanted:
        values["conn"] = _usage_guard(connectivity_error, pred, gt, region, step=args.step, theta=args.theta)
    table = {
        name: (value * 1000.0 if name == "mse" else value / 1000.0)
        for name, value in values.items()
    }
    payload = {
        "kind": "evaluate",
        "version": __version__,
        "pred": str(args.pred),
        "gt": str(args.gt),
        "trimap": str(args.trimap) if args.trimap else None,
        "region": region_name,
        "params": {"sigma": args.sigma, "q": args.q, "step": args.step, "theta": args.theta},
        **values,
        "table": table,
    }
    _print_report(payload, args.json)
    return EXIT_OK


def _cmd_evaluate_fg(args) -> int:
    pred = load_prediction_dir(args.pred_dir)
    gt = load_prediction_dir(args.gt_dir)
    region, region_name = _load_region(args.trimap)
    sad_fg, mse_fg = fg_composite_metrics(pred, gt, region)
    payload = {
        "kind": "evaluate_fg",
        "version": __version__,
        "pred_dir": str(args.pred_dir),
        "gt_dir": str(args.gt_dir),
        "trimap": str(args.trimap) if args.trimap else None,
        "region": region_name,
        "sad_fg": sad_fg,
        "mse_fg": mse_fg,
        "table": {"sad_fg": sad_fg / 1000.0, "mse_fg": mse_fg * 1000.0},
    }
    _print_report(payload, args.json)
    return EXIT_OK


def _cmd_make_sample(args) -> int:
    spec_path = Path(args.spec)
    with open(spec_path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {"crop_size", "flip", "gamma", "brightness", "second_fg_prob", "use_2x", "seed"}
    extra = set(raw) - known - {"second_fg", "second_alpha"}
    if extra:
        raise FileFormatError(f"unknown sample spec fields: {sorted(extra)}")
    spec = SampleSpec(**{k: raw[k] for k in known & set(raw)})

    second_fg = second_alpha = None
    if "second_fg" in raw or "second_alpha" in raw:
        if not ("second_fg" in raw and "second_alpha" in raw):
            raise FileFormatError("second_fg and second_alpha must be given together")
        second_fg = read_color_map(spec_path.parent / raw["second_fg"])
        second_alpha = read_alpha_map(spec_path.parent / raw["second_alpha"])

    fg = read_color_map(args.fg)
    alpha = read_alpha_map(args.alpha)
    bg = read_color_map(args.bg)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    names = ("image.png", "alpha.pfm", "fg.fbaf", "bg.fbaf", "trimap.png", "meta.json")
    for name in names:
        _ensure_absent(out / name, args.force)

    (image, gt, trimap), meta = make_sample_with_meta(
        fg, alpha, bg, spec, second_fg=second_fg, second_alpha=second_alpha
    )
    write_image_png(out / "image.png", image)
    write_pfm(out / "alpha.pfm", gt.alpha)
    write_fbaf(out / "fg.fbaf", gt.fg.data)
    write_fbaf(out / "bg.fbaf", gt.bg.data)
    trimap_to_file(trimap, out / "trimap.png")
    meta_payload = {
        "version": __version__,
        "rng": RNG_ALGORITHM,
        "spec": {k: getattr(spec, k) for k in sorted(known)},
        "draws": meta,
        "inputs": {"fg": str(args.fg), "alpha": str(args.alpha), "bg": str(args.bg)},
    }
    write_json(out / "meta.json", meta_payload)
    return EXIT_OK


def _cmd_tta_merge(args) -> int:
    ids = [token.strip() for token in args.transforms.split(",") if token.strip()]
    if not ids:
        raise UsageError("--transforms must list at least one transform id")
    try:
        transforms = [TTATransform.from_identifier(token) for token in ids]
    except (ValueError, ValueRangeError) as exc:
        raise UsageError(str(exc)) from exc

    inputs = Path(args.inputs)
    preds = [load_prediction_dir(inputs / token) for token in ids]

    if args.size is not None:
        target = (args.size[0], args.size[1])
    else:
        h0, w0 = preds[0].shape
        t0 = transforms[0]
        pre_h, pre_w = round(h0 / t0.scale), round(w0 / t0.scale)
        target = (pre_w, pre_h) if t0.quarter_turns % 2 else (pre_h, pre_w)

    restored = [tta_inverse(p, t, target) for p, t in zip(preds, transforms)]
    merged = tta_merge(restored)
    save_prediction_dir(args.output, merged, force=args.force)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _parse_float_list(text: str, expect: int, flag: str) -> list[float]:
    try:
        values = [float(token) for token in text.split(",") if token.strip()]
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from exc
    if len(values) != expect:
        raise UsageError(f"{flag} expects {expect} values, got {len(values)}")
    return values


def _parse_metric_list(text: str) -> list[str]:
    names = [token.strip() for token in text.split(",") if token.strip()]
    bad = [name for name in names if name not in ALL_METRICS]
    if bad or not names:
        raise UsageError(f"--metrics must be a subset of {','.join(ALL_METRICS)}, got {text!r}")
    return names


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker thread cap")
    common.add_argument("--force", action="store_true", help="allow overwriting outputs")

    parser = _Parser(prog="fba", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fba {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("composite", parents=[common], help="blend fg over bg through a matte")
    p.add_argument("--alpha", required=True)
    p.add_argument("--fg", required=True)
    p.add_argument("--bg", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_composite)

    p = sub.add_parser("extend-fg", parents=[common], help="estimate full-frame F and B layers")
    p.add_argument("--image", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--smoothness", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--cg-max-iters", type=int, default=None)
    p.add_argument("--verify", action="store_true", help="print the final system residual")
    p.add_argument("--fg-out", required=True)
    p.add_argument("--bg-out", required=True)
    p.set_defaults(handler=_cmd_extend_fg)

    p = sub.add_parser("make-trimap", parents=[common], help="random-erosion trimap from a matte")
    p.add_argument("--alpha", required=True)
    p.add_argument("--min-px", type=int, default=DEFAULT_MIN_RADIUS)
    p.add_argument("--max-px", type=int, default=DEFAULT_MAX_RADIUS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_make_trimap)

    p = sub.add_parser("encode-trimap", parents=[common], help="6-channel blurred-mask encoding")
    p.add_argument("--trimap", required=True)
    p.add_argument("--sigmas", default=",".join(str(s) for s in DEFAULT_SIGMAS))
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_encode_trimap)

    p = sub.add_parser("fuse", parents=[common], help="reconcile a prediction with the image")
    p.add_argument("--pred-dir", default=None, help="directory with alpha.pfm, fg.fbaf, bg.fbaf")
    p.add_argument("--alpha", default=None)
    p.add_argument("--fg", default=None)
    p.add_argument("--bg", default=None)
    p.add_argument("--image", required=True)
    p.add_argument("--iters", type=int, default=1)
    p.add_argument("--sigma-alpha-sq", type=float, default=10.0)
    p.add_argument("--sigma-fb-sq", type=float, default=1.0)
    p.add_argument("--sigma-c-sq", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_fuse)

    p = sub.add_parser("loss", parents=[common], help="training losses of a prediction")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--mask", choices=["full", "unknown"], default="full")
    p.add_argument("--trimap", default=None)
    p.add_argument("--gradient-mode", choices=["forward", "sobel"], default="forward")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_loss)

    p = sub.add_parser("evaluate", parents=[common], help="matte metrics against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--trimap", default=None)
    p.add_argument("--metrics", default=",".join(ALL_METRICS))
    p.add_argument("--sigma", type=float, default=GRAD_SIGMA)
    p.add_argument("--q", type=float, default=GRAD_EXPONENT)
    p.add_argument("--step", type=float, default=CONN_STEP)
    p.add_argument("--theta", type=float, default=CONN_THETA)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("evaluate-fg", parents=[common], help="premultiplied-foreground metrics")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--trimap", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=_cmd_evaluate_fg)

    p = sub.add_parser("make-sample", parents=[common], help="synthesize one training sample")
    p.add_argument("--fg", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--bg", required=True)
    p.add_argument("--spec", required=True, help="JSON file of SampleSpec fields")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_make_sample)

    p = sub.add_parser("tta-merge", parents=[common], help="invert and average augmented predictions")
    p.add_argument("--inputs", required=True, help="directory of per-transform prediction dirs")
    p.add_argument("--transforms", required=True, help="comma-separated ids, e.g. r0,r90_f")
    p.add_argument("--size", type=int, nargs=2, default=None, metavar=("H", "W"))
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=_cmd_tta_merge)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        _diagnose("usage", str(exc))
        return EXIT_USAGE
    except (FileFormatError, DimensionMismatchError, ValueRangeError) as exc:
        _diagnose("format", str(exc))
        return EXIT_IO
    except json.JSONDecodeError as exc:
        _diagnose("format", f"invalid JSON: {exc}")
        return EXIT_IO
    except OSError as exc:
        _diagnose("io", str(exc))
        return EXIT_IO
    except (ConvergenceError, ConnectivitySourceError, EmptyRegionError, SamplingError) as exc:
        _diagnose("numeric", str(exc))
        return EXIT_NUMERIC
    except MattingError as exc:
        _diagnose("format", str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
