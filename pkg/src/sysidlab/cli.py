"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 domain or numerical error.  Every
stochastic subcommand requires an explicit ``--seed`` (no wall-clock
defaults), and all floating-point output uses 17 significant digits so
printed values round-trip exactly.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .bounds import (
    exp_hard_lower_bound,
    gramian22_decay_bound,
    gramian_upper_bound,
    integrator_distance_closed_form,
    kl_trajectory,
    minimax_required_samples,
    powers_bound,
    sigma_min_certificate,
)
from .ctrb import (
    controllability_index,
    distance_to_uncontrollability,
    staircase,
)
from .errors import SysidlabError
from .fileio import (
    format_matrix_blocks,
    read_model,
    read_trajectory,
    write_estimate,
    write_trajectory,
)
from .ident import estimation_error, least_squares
from .lti import NoiseSpec, simulate, zoo_kl_pair
from .mc import default_config, load_config, run_experiment

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2


class _UsageError(Exception):
    """Flag combinations argparse cannot express (per-bound requirements)."""


def _g(x: float) -> str:
    return "%.17g" % x


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1 (not 2)."""

    def error(self, message):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _formatter(prog: str) -> argparse.HelpFormatter:
    # Fixed width keeps --help output independent of the caller's terminal.
    return argparse.HelpFormatter(prog, width=100)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(","))


def _int_range(text: str) -> tuple[int, ...]:
    if ":" in text:
        lo_s, _, hi_s = text.partition(":")
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(tok) for tok in text.split(","))


def _add_noise_flags(parser: argparse.ArgumentParser) -> None:
    group_u = parser.add_mutually_exclusive_group()
    group_u.add_argument("--input-std", type=float, default=1.0,
                         help="input standard deviation (default 1)")
    group_u.add_argument("--input-var", type=float,
                         help="input variance (alternative to --input-std)")
    group_w = parser.add_mutually_exclusive_group()
    group_w.add_argument("--noise-std", type=float, default=1.0,
                         help="process-noise standard deviation (default 1)")
    group_w.add_argument("--noise-var", type=float,
                         help="process-noise variance (alternative to --noise-std)")


def _noise_from_args(args) -> NoiseSpec:
    input_std = args.input_std
    noise_std = args.noise_std
    if args.input_var is not None:
        input_std = math.sqrt(args.input_var)
    if args.noise_var is not None:
        noise_std = math.sqrt(args.noise_var)
    return NoiseSpec(input_std=input_std, noise_std=noise_std)


def _add_model_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True,
                        help="model file (labelled A/B/H matrix blocks)")


def _add_distance_flags(parser: argparse.ArgumentParser) -> None:
    _add_model_flag(parser)
    parser.add_argument("--grid-resolution", type=float,
                        help="grid spacing over the search disk "
                             "(default: 2%% of its radius)")
    parser.add_argument("--no-refine", action="store_true",
                        help="skip local refinement of the best grid point")


def _add_staircase_flags(parser: argparse.ArgumentParser) -> None:
    _add_model_flag(parser)
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="relative rank tolerance (default 1e-8)")
    parser.add_argument("--out", help="also write U/A_tilde/H_tilde blocks here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sysidlab",
        description="Linear system identification lab: simulation, "
                    "least squares, controllability analysis, hardness "
                    "bounds, and Monte Carlo sample-complexity experiments.",
        formatter_class=_formatter,
    )
    parser.add_argument("--version", action="version",
                        version=f"sysidlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_Parser, required=True)

    p = sub.add_parser("simulate", formatter_class=_formatter,
                       help="roll out a model under Gaussian inputs and noise")
    _add_model_flag(p)
    p.add_argument("--steps", type=int, required=True, help="horizon N")
    p.add_argument("--seed", type=int, required=True, help="simulation seed")
    _add_noise_flags(p)
    p.add_argument("--out", required=True, help="trajectory CSV to write")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("identify", formatter_class=_formatter,
                       help="ridge least-squares fit of a trajectory CSV")
    p.add_argument("--traj", required=True, help="trajectory CSV to fit")
    p.add_argument("--ridge", type=float, default=0.001,
                   help="ridge regularizer (default 0.001)")
    p.add_argument("--out", required=True, help="estimate file to write")
    p.add_argument("--truth",
                   help="model file; prints the spectral error against it")
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("ctrb", formatter_class=_formatter,
                       help="controllability analysis of a model file")
    ctrb_sub = p.add_subparsers(dest="ctrb_command", metavar="ANALYSIS",
                                parser_class=_Parser, required=True)
    q = ctrb_sub.add_parser("index", formatter_class=_formatter,
                            help="controllability index (rank sweep)")
    _add_model_flag(q)
    q.add_argument("--tol", type=float, default=1e-8,
                   help="relative rank tolerance (default 1e-8)")
    q.set_defaults(func=_cmd_ctrb_index)
    q = ctrb_sub.add_parser("staircase", formatter_class=_formatter,
                            help="orthogonal staircase decomposition")
    _add_staircase_flags(q)
    q.set_defaults(func=_cmd_staircase)
    q = ctrb_sub.add_parser("distance", formatter_class=_formatter,
                            help="distance to the nearest uncontrollable pair")
    _add_distance_flags(q)
    q.set_defaults(func=_cmd_distance)

    p = sub.add_parser("distance", formatter_class=_formatter,
                       help="shortcut for `ctrb distance`")
    _add_distance_flags(p)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("staircase", formatter_class=_formatter,
                       help="shortcut for `ctrb staircase`")
    _add_staircase_flags(p)
    p.set_defaults(func=_cmd_staircase)

    p = sub.add_parser("bounds", formatter_class=_formatter,
                       help="evaluate hardness bounds and certificates")
    bounds_sub = p.add_subparsers(dest="bounds_command", metavar="ACTION",
                                  parser_class=_Parser, required=True)
    q = bounds_sub.add_parser("eval", formatter_class=_formatter,
                              help="print a named bound's value")
    q.add_argument("bound",
                   choices=["powers", "gramian-upper", "gramian22-decay",
                            "integrator-distance", "exp-hard", "kl",
                            "minimax"],
                   help="which bound to evaluate")
    q.add_argument("--M", type=float, help="norm bound on A, B, H")
    q.add_argument("--n", type=int, help="state dimension")
    q.add_argument("--k", type=int, help="horizon / power index")
    q.add_argument("--rho", type=float, help="chain weight")
    q.add_argument("--eps", type=float, help="accuracy target")
    q.add_argument("--delta", type=float, help="failure probability")
    q.add_argument("--beta", type=float, help="hidden-coordinate weight")
    q.add_argument("--steps", type=int, default=100,
                   help="trajectory length for kl (default 100)")
    q.add_argument("--n-max", type=int, default=10_000_000,
                   help="search cap for minimax (default 1e7)")
    q.add_argument("--proof-form", action="store_true",
                   help="use the sharper in-proof constants for exp-hard")
    q.set_defaults(func=_cmd_bounds_eval)
    q = bounds_sub.add_parser("certify", formatter_class=_formatter,
                              help="print the comparison-matrix certificate")
    q.add_argument("--M", type=float, required=True, help="norm bound")
    q.add_argument("--mu", type=float, required=True,
                   help="smallest structural singular value")
    q.add_argument("--kappa", type=int, required=True,
                   help="controllability index")
    q.set_defaults(func=_cmd_bounds_certify)

    p = sub.add_parser("mc", formatter_class=_formatter,
                       help="run a Monte Carlo experiment from a config file")
    p.add_argument("--config", required=True, help="key=value experiment config")
    p.add_argument("--seed", type=int, required=True,
                   help="master seed (overrides the config file)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker thread cap (default 1)")
    p.add_argument("--out", required=True, help="complexity-curve CSV to write")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("repro", formatter_class=_formatter,
                       help="reproduce a figure preset end to end")
    p.add_argument("preset", choices=["fig1", "fig2", "fig3"],
                   help="which figure protocol to run")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--eps", type=_float_list,
                   help="comma-separated accuracy targets")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per probe")
    p.add_argument("--n-range", type=_int_range,
                   help="dimensions, as lo:hi or a comma list")
    p.add_argument("--lambdas", type=_float_list,
                   help="comma-separated eigenvalues (fig2/fig3)")
    p.add_argument("--patterns",
                   help="comma-separated input patterns (fig3)")
    p.add_argument("--n-max", type=int, help="horizon search cap")
    p.add_argument("--quantiles", type=_float_list,
                   help="extra error quantile columns, e.g. 0.5,0.9")
    p.add_argument("--threads", type=int, default=1,
                   help="worker thread cap (default 1)")
    p.add_argument("--out", required=True, help="complexity-curve CSV to write")
    p.set_defaults(func=_cmd_repro)

    return parser


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    system = read_model(args.model)
    traj = simulate(system, args.steps, _noise_from_args(args), args.seed)
    write_trajectory(args.out, traj)
    print(f"wrote {args.out} ({traj.n_steps} steps, n={system.n}, p={system.p})")
    return EXIT_OK


def _cmd_identify(args) -> int:
    traj = read_trajectory(args.traj)
    est = least_squares(traj, ridge=args.ridge)
    write_estimate(args.out, est.A_hat, est.B_hat)
    print(f"wrote {args.out}")
    if args.truth:
        err = estimation_error(est, read_model(args.truth))
        print(f"error_vs_truth = {_g(err)}")
    return EXIT_OK


def _cmd_ctrb_index(args) -> int:
    system = read_model(args.model)
    kappa = controllability_index(system.A, system.H, tol=args.tol)
    print("none" if kappa is None else kappa)
    return EXIT_OK


def _cmd_staircase(args) -> int:
    system = read_model(args.model)
    form = staircase(system.A, system.H, tol=args.tol)
    print(f"controllable = {str(form.controllable).lower()}")
    print("kappa =", "none" if form.kappa is None else form.kappa)
    print("block_sizes =", ",".join(str(r) for r in form.block_sizes))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(format_matrix_blocks([
                ("U", form.U),
                ("A_tilde", form.A_tilde),
                ("H_tilde", form.H_tilde),
            ]))
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_distance(args) -> int:
    system = read_model(args.model)
    est = distance_to_uncontrollability(
        system.A,
        system.H,
        grid_resolution=args.grid_resolution,
        refine=not args.no_refine,
    )
    print(f"distance = {_g(est.value)}")
    print(f"minimizer_re = {_g(est.minimizer_s.real)}")
    print(f"minimizer_im = {_g(est.minimizer_s.imag)}")
    print(f"grid_resolution = {_g(est.grid_resolution)}")
    print(f"refined = {str(est.refined).lower()}")
    return EXIT_OK


_BOUND_FLAGS = {
    "powers": ("M", "n", "k"),
    "gramian-upper": ("M", "n", "k"),
    "gramian22-decay": ("rho", "n"),
    "integrator-distance": ("rho", "n"),
    "exp-hard": ("n", "eps", "delta"),
    "kl": ("beta", "eps"),
    "minimax": ("beta", "eps", "delta"),
}


def _cmd_bounds_eval(args) -> int:
    for flag in _BOUND_FLAGS[args.bound]:
        if getattr(args, flag) is None:
            raise _UsageError(f"bounds eval {args.bound} requires --{flag}")
    if args.bound == "powers":
        print(_g(powers_bound(args.M, args.n, args.k)))
    elif args.bound == "gramian-upper":
        print(_g(gramian_upper_bound(args.M, args.n, args.k)))
    elif args.bound == "gramian22-decay":
        print(_g(gramian22_decay_bound(args.rho, args.n)))
    elif args.bound == "integrator-distance":
        closed = integrator_distance_closed_form(args.rho, args.n)
        print(f"value = {_g(closed.value)}")
        print(f"lower = {_g(closed.lower)}")
        print(f"upper = {_g(closed.upper)}")
    elif args.bound == "exp-hard":
        print(_g(exp_hard_lower_bound(args.n, args.eps, args.delta,
                                      proof_form=args.proof_form)))
    elif args.bound == "kl":
        pair = zoo_kl_pair(args.beta, args.eps)
        print(_g(kl_trajectory(pair[0], pair[1], args.steps).value))
    else:
        needed = minimax_required_samples(
            zoo_kl_pair(args.beta, args.eps)[0],
            zoo_kl_pair(args.beta, args.eps)[1],
            args.delta,
            N_max=args.n_max,
        )
        print("none" if needed is None else needed)
    return EXIT_OK


def _cmd_bounds_certify(args) -> int:
    cert = sigma_min_certificate(args.M, args.mu, args.kappa)
    print(f"bound = {_g(cert.bound)}")
    eigs = sorted(np.linalg.eigvals(cert.xi),
                  key=lambda z: (-z.real, -z.imag))
    print("xi_spectrum =", ",".join(
        _g(z.real) if z.imag == 0.0 else f"{_g(z.real)}{z.imag:+.17g}j"
        for z in eigs
    ))
    return EXIT_OK


def _cmd_mc(args) -> int:
    if args.threads < 1:
        raise _UsageError("--threads must be >= 1")
    cfg = load_config(args.config)
    cfg = replace(cfg, master_seed=args.seed)
    curve = run_experiment(cfg.preset, cfg, threads=args.threads)
    curve.write_csv(args.out)
    print(f"wrote {args.out} ({len(curve.rows)} rows)")
    return EXIT_OK


def _cmd_repro(args) -> int:
    if args.threads < 1:
        raise _UsageError("--threads must be >= 1")
    cfg = default_config(args.preset, master_seed=args.seed)
    updates = {}
    if args.eps is not None:
        updates["eps"] = args.eps
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.n_range is not None:
        updates["n_range"] = args.n_range
    if args.lambdas is not None:
        updates["lambdas"] = args.lambdas
    if args.patterns is not None:
        updates["patterns"] = tuple(
            tok.strip() for tok in args.patterns.split(",")
        )
    if args.n_max is not None:
        updates["n_max"] = args.n_max
    if args.quantiles is not None:
        updates["quantiles"] = args.quantiles
    cfg = replace(cfg, **updates)
    curve = run_experiment(args.preset, cfg, threads=args.threads)
    curve.write_csv(args.out)
    print(f"wrote {args.out} ({len(curve.rows)} rows)")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"sysidlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SysidlabError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"sysidlab: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"sysidlab: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
