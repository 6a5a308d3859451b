"""Command-line front end: sample, recover, evaluate, demo.

Every subcommand is deterministic given its flags; numeric defaults are the
published operating point.  --threads caps the BLAS thread pools (via
threadpoolctl); --threads 1 is the default and gives the sequential,
bit-exact mode.
"""

import argparse
import sys
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from sgsr.image import load_pgm, psnr, save_pgm
from sgsr.sampling import (
    build_operator,
    forward,
    load_measurements,
    measurements_per_block,
    save_measurements,
)
from sgsr.solver import RecoveryConfig, recover_dct, recover_sgsr

ALGORITHMS = {
    "sgsr": recover_sgsr,
    "dct": recover_dct,
    "dct-baseline": recover_dct,
}


def _add_config_flags(parser):
    parser.add_argument("--lambda", dest="lam", type=float, default=1.8e3,
                        help="group regularization weight")
    parser.add_argument("--lambda-dct", dest="lam_dct", type=float, default=20.0,
                        help="baseline DCT regularization weight")
    parser.add_argument("--rho", type=float, default=1.0, help="gradient step size")
    parser.add_argument("--patch", type=int, default=8, help="patch edge in pixels")
    parser.add_argument("--stride", type=int, default=4, help="patch stride in pixels")
    parser.add_argument("--window", type=int, default=40, help="search window edge")
    parser.add_argument("--group-size", type=int, default=50,
                        help="matched patches per group")
    parser.add_argument("--max-iter", type=int, default=60, help="outer iterations")
    parser.add_argument("--regroup-every", type=int, default=1,
                        help="iterations between re-running block matching")
    parser.add_argument("--stop-tol", type=float, default=None,
                        help="early stop when mean |change| drops below this")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sgsr",
        description="Block compressive sensing of grayscale PGM images: "
        "sample, recover (group-sparse or DCT baseline), evaluate, demo.",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="BLAS thread cap; 1 = sequential bit-exact mode")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="measure an image into a .meas file")
    p.add_argument("image", help="input PGM (dimensions multiples of 32)")
    p.add_argument("--ratio", type=float, required=True,
                   help="measurement ratio in (0, 1]")
    p.add_argument("--seed", type=int, default=0, help="measurement matrix seed")
    p.add_argument("-o", "--output", required=True, help="output measurement file")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("recover", help="reconstruct an image from measurements")
    p.add_argument("measurements", help="input .meas file")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), default="sgsr")
    _add_config_flags(p)
    p.add_argument("--reference", help="reference PGM for PSNR reporting")
    p.add_argument("--trace", help="write per-iteration CSV trace here")
    p.add_argument("-o", "--output", required=True, help="output PGM")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("evaluate", help="print PSNR between two PGM files")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("demo", help="sample, recover and evaluate in one run")
    p.add_argument("image", help="input PGM")
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algo", choices=sorted(ALGORITHMS), default="sgsr")
    p.add_argument("-o", "--outdir", required=True, help="output directory")
    p.set_defaults(func=cmd_demo)

    return parser


def cmd_sample(args):
    image = load_pgm(args.image)
    height, width = image.shape
    op = build_operator(args.seed, args.ratio, width, height)
    meas = forward(op, image)
    save_measurements(meas, args.output)
    print(f"measurements per block: {op.m_b}")
    print(f"total measurements: {len(meas.values)}")
    return 0


def _config_from_args(args, reference):
    return RecoveryConfig(
        lam=args.lam,
        rho=args.rho,
        patch_edge=args.patch,
        stride=args.stride,
        window_edge=args.window,
        group_size=args.group_size,
        max_iter=args.max_iter,
        regroup_every=args.regroup_every,
        lam_dct=args.lam_dct,
        stop_tol=args.stop_tol,
        emit_trace=args.trace is not None,
        reference_image=reference,
    )


def cmd_recover(args):
    meas = load_measurements(args.measurements)
    op = build_operator(meas.seed, meas.ratio, meas.width, meas.height)
    if op.m_b != meas.m_b:
        raise ValueError(
            f"measurement header m_b={meas.m_b} inconsistent with ratio {meas.ratio}"
        )
    reference = load_pgm(args.reference) if args.reference else None
    config = _config_from_args(args, reference)
    print(
        f"recover algo={args.algo} lambda={config.lam:g} rho={config.rho:g} "
        f"patch={config.patch_edge} stride={config.stride} "
        f"window={config.window_edge} c={config.group_size} "
        f"max_iter={config.max_iter} ratio={meas.ratio:g} seed={meas.seed} "
        f"threads={args.threads}"
    )
    recovered, trace = ALGORITHMS[args.algo](op, meas, config)
    save_pgm(recovered, args.output)
    if config.emit_trace:
        trace.to_csv(args.trace)
    if reference is not None:
        print(f"PSNR: {psnr(reference, load_pgm(args.output)):.2f} dB")
    return 0


def cmd_evaluate(args):
    value = psnr(load_pgm(args.reference), load_pgm(args.test))
    print(f"{value:.2f}")
    return 0


def cmd_demo(args):
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()

    image = load_pgm(args.image)
    height, width = image.shape
    op = build_operator(args.seed, args.ratio, width, height)
    meas = forward(op, image)
    save_measurements(meas, outdir / "measurements.meas")

    config = RecoveryConfig(emit_trace=True, reference_image=image)
    recovered, trace = ALGORITHMS[args.algo](op, meas, config)
    save_pgm(recovered, outdir / "recovered.pgm")
    trace.to_csv(outdir / "trace.csv")

    quality = psnr(image, load_pgm(outdir / "recovered.pgm"))
    seconds = time.perf_counter() - start
    summary = f"{args.algo},{args.ratio:g},{args.seed},{quality:.2f},{seconds:.2f}"
    with open(outdir / "summary.csv", "w") as fh:
        fh.write("algorithm,ratio,seed,psnr_db,seconds\n")
        fh.write(summary + "\n")
    print(summary)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
