"""Command line entry point: ``tvtv run | solve | metrics``."""
import argparse
import logging
import sys

from . import pipeline
from .errors import ConfigError, TvtvError

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_TOTAL = 0, 1, 2, 3


def _solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--beta", type=float)
    g.add_argument("--kernel", choices=["bicubic", "box", "direct"])
    g.add_argument("--phase", type=int, help="sampling lattice offset in HR pixels")
    g.add_argument("--rho", type=float, help="initial ADMM penalty")
    g.add_argument("--no-adaptive-rho", dest="adaptive_rho", action="store_const", const=False)
    g.add_argument("--max-iters", dest="max_iter", type=int)
    g.add_argument("--tol-rel", type=float)
    g.add_argument("--tol-abs", type=float)
    g.add_argument("--schur", choices=["fft", "cg"], help="Schur system solver in the projection")
    g.add_argument("--full-swing", action="store_const", const=True,
                   help="full-range YCbCr instead of BT.601 studio swing")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tvtv", description="TV-TV minimization post-processing for super-resolution")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process a dataset directory")
    run.add_argument("--config", help="key=value file; command-line flags take precedence")
    run.add_argument("--dataset")
    run.add_argument("--base", help=f"directory of base outputs or {pipeline.BUILTIN_BICUBIC}")
    run.add_argument("--scale", type=int, choices=[2, 4])
    run.add_argument("--shave", type=int)
    run.add_argument("--clip", action="store_const", const=True,
                     help="clip reconstructions to [0, 255] before metrics")
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("--no-images", dest="save_images", action="store_const", const=False)
    _solver_flags(run)

    solve = sub.add_parser("solve", help="super-resolve a single LR image")
    solve.add_argument("--lr", required=True)
    solve.add_argument("--side", required=True,
                       help=f"side-information HR image or {pipeline.BUILTIN_BICUBIC}")
    solve.add_argument("--scale", type=int, required=True)
    solve.add_argument("--out", required=True)
    _solver_flags(solve)

    met = sub.add_parser("metrics", help="PSNR/SSIM of a test directory against references")
    met.add_argument("--ref", required=True)
    met.add_argument("--test", required=True)
    met.add_argument("--shave", type=int, default=0)
    met.add_argument("--clip", action="store_true")
    met.add_argument("--full-swing", action="store_true")
    return parser


_NOT_CONFIG = {"command", "verbose", "config", "lr", "side", "ref", "test"}


def _config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        values.update(pipeline.parse_config_file(args.config))
    for key, val in vars(args).items():
        if key not in _NOT_CONFIG and val is not None:
            values[key] = val
    return pipeline.build_config(values)


def _cmd_run(args):
    cfg = _config_from_args(args)
    result = pipeline.run_dataset(cfg)
    for r in sorted(result.records, key=lambda r: r.id):
        print(f"{r.id}: base {r.psnr_base:.4f} dB ({r.ssim_base:.4f})  "
              f"ours {r.psnr_ours:.4f} dB ({r.ssim_ours:.4f})  "
              f"|Ax-b|inf={r.feas_inf:.1e}  {r.seconds:.1f}s")
    if result.failures:
        print(f"{len(result.failures)} image(s) failed; see {result.out_dir / 'failures.csv'}",
              file=sys.stderr)
    print(f"reports written to {result.out_dir}")
    return result.exit_code


def _cmd_solve(args):
    cfg = _config_from_args(args)
    rep = pipeline.solve_single(args.lr, args.side, args.scale, args.out, cfg)
    state = "converged" if rep.converged else "iteration cap reached"
    print(f"{state} after {rep.iterations} iterations, objective {rep.objective:.4f}, "
          f"|Ax-b|inf={rep.feas_inf:.2e}, {rep.seconds:.2f}s -> {args.out}")
    return EXIT_OK


def _cmd_metrics(args):
    rows = pipeline.metrics_dirs(args.ref, args.test, args.shave, args.full_swing, args.clip)
    if not rows:
        print("no matching images", file=sys.stderr)
        return EXIT_TOTAL
    print("id,psnr,ssim")
    for stem, p, s in rows:
        print(f"{stem},{pipeline._fmt_db(p)},{s:.4f}")
    mp = sum(r[1] for r in rows) / len(rows)
    ms = sum(r[2] for r in rows) / len(rows)
    print(f"MEAN,{pipeline._fmt_db(mp)},{ms:.4f}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "solve": _cmd_solve, "metrics": _cmd_metrics}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TvtvError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command != "run" else EXIT_TOTAL


if __name__ == "__main__":
    sys.exit(main())
