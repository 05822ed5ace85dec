"""Command-line interface: ``htmp-lab <command> [options]``.

Exit codes: 0 success, 2 invalid usage or input, 3 numerical or estimation
failure.  Errors other than usage errors are reported as a JSON object on
standard error.  Output files are written atomically.
"""
import argparse
import json
import math
import sys

import numpy as np

from ._io import atomic_write_text, dumps, format_float, read_values_csv, values_to_csv
from .applications import classify_phase, gradient_norm_tail_check, scaling_error_curve
from .errors import (ConditioningError, ContractError, DomainError, EstimationError,
                     PrecisionError)
from .estimators import (StructureKind, StructureSpec, estimate_kappa_fixed_point, fit_htmp,
                         invgamma_mle)
from .rmt_densities import (HTMPParams, InvGammaParams, InverseParams, MPParams, htmp_pdf,
                            inverse_law_pdf, invgamma_pdf, mp_pdf)
from .sampler import (EigenSample, RngStream, conjugate_with_covariance, sample_htmp_esd,
                      sample_inverse_esd)

DEFAULT_SEED = 42


def _kappa(text):
    if text.strip().lower() in ("inf", "infinite", "infinity"):
        return math.inf
    return float(text)


def _emit(args, text):
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _law_params(args):
    if args.law == "mp":
        return MPParams(args.gamma)
    if args.kappa is None:
        raise ContractError(f"--kappa is required for law {args.law}")
    return HTMPParams(args.gamma, args.kappa)


# ----------------------------------------------------------------------------
# commands

def cmd_sample(args):
    rng = RngStream(args.seed)
    if args.law == "inverse":
        if args.kappa is None or args.alpha_master is None:
            raise ContractError("inverse sampling needs --kappa and --alpha-master")
        out = sample_inverse_esd(args.n, None, args.kappa, args.alpha_master, args.beta_master, rng)
    else:
        kappa = math.inf if args.law == "mp" else args.kappa
        if kappa is None:
            raise ContractError("--kappa is required for law htmp")
        out = sample_htmp_esd(args.n, args.gamma, kappa, rng)
    if args.out:
        out.to_csv(args.out)
    else:
        sys.stdout.write(values_to_csv(out.values))


def cmd_pdf(args):
    if args.points < 2 or not args.xmax > args.xmin:
        raise ContractError("need --points >= 2 and --xmax > --xmin")
    if args.xmin < 0:
        raise DomainError("--xmin must be nonnegative")
    x = np.linspace(args.xmin, args.xmax, args.points)
    if args.law == "mp":
        y = mp_pdf(x, MPParams(args.gamma))
    elif args.law == "htmp":
        y = htmp_pdf(x, _law_params(args))
    elif args.law == "inverse":
        base = MPParams(args.gamma) if args.kappa is None or math.isinf(args.kappa) else _law_params(args)
        y = inverse_law_pdf(x, InverseParams(base))
    else:
        if args.alpha is None or args.beta is None:
            raise ContractError("invgamma needs --alpha and --beta")
        y = invgamma_pdf(x, InvGammaParams(args.alpha, args.beta))
    rows = ["x,density"] + [f"{format_float(a)},{format_float(b)}" for a, b in zip(x, y)]
    _emit(args, "\n".join(rows) + "\n")


def cmd_fit(args):
    values = read_values_csv(args.input)
    if args.law == "invgamma":
        rep = invgamma_mle(values, window=args.window)
    else:
        if args.window is not None:
            values = np.sort(values)[: max(1, int(math.floor(args.window * values.size)))]
        rep = fit_htmp(values)
    _emit(args, rep.to_json())


_STRUCTURES = {k.value: k for k in StructureKind}


def cmd_kappa(args):
    kind = _STRUCTURES[args.structure]
    spec = StructureSpec(kind, args.m, args.n, args.d if args.d is not None else 0)
    beta0 = None if args.beta0 is None else args.beta0 / spec.N
    est = estimate_kappa_fixed_point(spec, shape_alpha=args.alpha, p=args.p, step=args.step,
                                     tol=args.tol, rng=RngStream(args.seed), beta0=beta0,
                                     max_iter=args.max_iter)
    _emit(args, est.to_json())


def cmd_phases(args):
    values = read_values_csv(args.input)
    res = classify_phase(values)
    _emit(args, dumps(res.to_dict()))


def cmd_scaling(args):
    if not (0 < args.lmin < args.lmax):
        raise ContractError("need 0 < --lmin < --lmax")
    grid = np.geomspace(args.lmin, args.lmax, args.points)
    rep = scaling_error_curve(args.gamma, args.kappa, grid)
    _emit(args, dumps(rep.to_dict()))


def cmd_gradtails(args):
    rep = gradient_norm_tail_check(args.N, args.d, args.samples, RngStream(args.seed))
    _emit(args, dumps(rep))


def cmd_convolve(args):
    values = read_values_csv(args.input)
    sigma = read_values_csv(args.sigma)
    out = conjugate_with_covariance(EigenSample(values), sigma, RngStream(args.seed))
    _emit(args, values_to_csv(out.values))


# ----------------------------------------------------------------------------
# parser

def build_parser():
    ap = argparse.ArgumentParser(prog="htmp-lab",
                                 description="Heavy-tailed random-matrix spectra: sampling, densities and fits.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("--out", help="output file (default: standard output)")
        if seed:
            p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("sample", help="draw an eigenvalue sample")
    p.add_argument("--law", choices=["htmp", "mp", "inverse"], default="htmp")
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=_kappa)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha-master", type=float)
    p.add_argument("--beta-master", type=float, default=1.0)
    common(p, seed=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("pdf", help="tabulate a density")
    p.add_argument("--law", choices=["mp", "htmp", "inverse", "invgamma"], required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=_kappa)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--xmin", type=float, required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--points", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("fit", help="fit HTMP/MP or inverse-Gamma to a spectrum")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--law", choices=["htmp", "invgamma"], default="htmp")
    p.add_argument("--window", type=float, help="keep values up to this quantile")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("kappa", help="fixed-point estimate of kappa* for a structure")
    p.add_argument("--structure", choices=sorted(_STRUCTURES), required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--alpha", type=float, default=2.0, help="Laguerre shape parameter")
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--tol", type=float, help="default 1e-3/N")
    p.add_argument("--beta0", type=float, help="initial N*beta (default 5)")
    p.add_argument("--max-iter", type=int, default=2000)
    common(p, seed=True)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("phases", help="classify a spectrum into a phase")
    p.add_argument("--in", dest="input", required=True)
    common(p)
    p.set_defaults(func=cmd_phases)

    p = sub.add_parser("scaling", help="ridge error curve lambda^2 S'(-lambda)")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--lmin", type=float, default=1e-4)
    p.add_argument("--lmax", type=float, default=1e-2)
    p.add_argument("--points", type=int, default=20)
    common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("gradtails", help="tail check of stochastic-gradient norms")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--samples", type=int, default=5000)
    common(p, seed=True)
    p.set_defaults(func=cmd_gradtails)

    p = sub.add_parser("convolve", help="conjugate a spectrum with a covariance spectrum")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--sigma", required=True)
    common(p, seed=True)
    p.set_defaults(func=cmd_convolve)
    return ap


def _fail(code, exc):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    needs_gamma = (args.command == "pdf" and args.law != "invgamma") or \
        (args.command == "sample" and args.law != "inverse")
    if needs_gamma and args.gamma is None:
        parser.error(f"--gamma is required for {args.command} --law {args.law}")
    try:
        args.func(args)
    except (ContractError, DomainError, OSError) as exc:
        return _fail(2, exc)
    except (EstimationError, PrecisionError, ConditioningError) as exc:
        return _fail(3, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
