"""Command-line entry points: run experiments, solve sources, phi diagnostic."""

import argparse
import sys

from . import harness
from .prior import build_prior, uniform_prior


def _cmd_run(args):
    config = harness.load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    curve = harness.run_experiment(config, out_dir=args.out,
                                   workers=args.workers)
    for (k, alg), (mean, half) in curve.series.items():
        print(f"{k}-{alg}: final return {mean[-1]:.4f} "
              f"+/- {half[-1]:.4f} over {config.n_runs} runs")
    if args.out:
        print(f"artifacts written to {args.out}")
    return 0


def _cmd_solve_sources(args):
    config = harness.load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    sources = harness.solve_source_set(config, run_idx=0)
    harness.archive_weights(args.out, sources)
    print(f"{sources.n_entries} source solutions (dim {sources.dim}) "
          f"written to {args.out}")
    return 0


def _cmd_phi(args):
    sources = harness.load_weights(args.weights)
    target = harness.load_weights(args.target, expect_dim=sources.dim)
    if target.n_entries == 0:
        print("target archive is empty", file=sys.stderr)
        return 1
    theta_star = target.thetas[0]
    tv = build_prior(sources, args.query_t, args.time_lambda, args.sigma2)
    uni = uniform_prior(sources, args.sigma2)
    print(f"phi(T2VT weights)    = {harness.phi_diagnostic(theta_star, tv)!r}")
    print(f"phi(uniform weights) = {harness.phi_diagnostic(theta_star, uni)!r}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tvtransfer",
        description="Variational transfer of value functions under "
                    "drifting task distributions")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full experiment matrix")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_src = sub.add_parser("solve-sources",
                           help="solve one source-task grid, write an archive")
    p_src.add_argument("--config", required=True)
    p_src.add_argument("--out", required=True)
    p_src.add_argument("--seed", type=int, default=None)
    p_src.set_defaults(func=_cmd_solve_sources)

    p_phi = sub.add_parser("phi", help="source-quality diagnostic")
    p_phi.add_argument("--weights", required=True,
                       help="source-solutions archive")
    p_phi.add_argument("--target", required=True,
                       help="archive whose first entry is the target optimum")
    p_phi.add_argument("--time-lambda", dest="time_lambda", type=float,
                       default=0.3333)
    p_phi.add_argument("--sigma2", type=float, default=1e-5)
    p_phi.add_argument("--query-t", dest="query_t", type=float, default=1.0)
    p_phi.set_defaults(func=_cmd_phi)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, harness.ArchiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
