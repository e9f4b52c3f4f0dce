"""``rectgauss`` command line: gen-model, sample, fit, fit2, eval, experiment.

Exit codes: 0 success, 1 estimation failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io as rio
from .core import RandomStream
from .estimator import fit_one_layer, fit_zero_bias_noisy
from .experiment import ConfigError, ExperimentConfig, rows_to_csv, run_experiment
from .metrics import DegenerateCovariance, kl_estimate, param_errors
from .sampler import TruncationExhausted, make_random_model, sample
from .truncated_mle import SgdConfig
from .two_layer import AnchorCountError, RankDeficientAnchors, aligned_truth, fit_two_layer

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _add_sgd_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--batches", type=_positive_int, default=1)
    p.add_argument("--radius", type=float, default=3.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--steps", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="ground-truth model JSON; prints error metrics")


def _sgd(args) -> SgdConfig:
    try:
        return SgdConfig(steps=args.steps, lam=args.lam, radius=args.radius, batches=args.batches)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _metrics_line(est, truth) -> str:
    s_err, b_err = param_errors(est, truth)
    try:
        kl = kl_estimate(est, truth)
        kl_s, tv_s = repr(kl), repr(math.sqrt(kl / 2))
    except DegenerateCovariance:
        kl_s = tv_s = ""
    return f"sigma_rel_err,bias_rel_err,kl,tv_bound\n{s_err!r},{b_err!r},{kl_s},{tv_s}"


def cmd_gen_model(args) -> int:
    model = make_random_model(args.dim, args.latent or args.dim, args.kappa, args.bias_mode,
                              RandomStream(args.seed), eta=args.eta, outer_dim=args.outer_dim)
    if args.noise_sigma:
        model = type(model)(model.weight, model.bias, model.outer, args.noise_sigma)
    rio.save_model(model, args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    model = rio.load_model(args.model)
    x = sample(model, args.n, RandomStream(args.seed))
    rio.save_samples(x, args.out)
    print(f"n={x.n} d={x.d} zero_fraction={float(np.mean(x.data == 0)):.6f}")
    return EXIT_OK


def cmd_fit(args) -> int:
    x = rio.load_samples(args.samples)
    if args.noise_sigma is not None:
        est = fit_zero_bias_noisy(x, args.noise_sigma)
    else:
        if np.any(x.data < 0):
            raise UsageError("samples contain negative entries; the estimator needs "
                             "non-negative ReLU outputs (use --noise-sigma for noisy zero-bias data)")
        est = fit_one_layer(x, _sgd(args), RandomStream(args.seed))
    rio.save_estimate(est, args.out)
    for line in est.diagnostics:
        print(f"# {line}", file=sys.stderr)
    if args.truth:
        print(_metrics_line(est, rio.load_model(args.truth)))
    return EXIT_OK


def cmd_fit2(args) -> int:
    x = rio.load_samples(args.samples)
    fit = fit_two_layer(x, _sgd(args), RandomStream(args.seed), p=args.p, tol=args.tol,
                        dedup_tol=args.dedup_tol)
    a_out = args.a_out or str(Path(args.out).with_suffix("")) + "_A.json"
    rio.save_matrix(fit.a_hat, a_out)
    rio.save_estimate(fit.model, args.out, anchors={
        "count": fit.anchors.count,
        "source_indices": fit.anchors.source_indices,
        "residuals": fit.anchors.residuals,
    })
    print(f"anchors={fit.anchors.count} min_residual={min(fit.anchors.residuals, default=0.0):.3g}")
    if args.truth:
        truth = rio.load_model(args.truth)
        target = aligned_truth(truth, fit.a_hat, args.match_tol) if truth.outer is not None else None
        print(f"A_recovered={int(target is not None)}")
        if target is not None:
            print(_metrics_line(fit.model, target))
    return EXIT_OK


def cmd_eval(args) -> int:
    est = rio.load_estimate(args.estimate)
    truth = rio.load_model(args.truth)
    if truth.outer is not None:
        if not args.a_hat:
            raise UsageError("two-layer truth needs --a-hat to align latent coordinates")
        truth = aligned_truth(truth, rio.load_matrix(args.a_hat), args.match_tol)
        if truth is None:
            print("A_recovered=0")
            return EXIT_FAIL
    print(_metrics_line(est, truth))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    text = rows_to_csv(run_experiment(cfg))
    out = args.out or cfg.output
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rectgauss", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="random ground-truth model")
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--latent", type=_positive_int, default=None, help="k (default: --dim)")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--bias-mode", choices=("nonneg", "zero", "negative"), default="nonneg")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--outer-dim", type=_positive_int, default=None, help="rows of A (two-layer)")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("sample", help="draw samples from a model file")
    p.add_argument("model")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a one-layer model")
    p.add_argument("samples")
    _add_sgd_flags(p)
    p.add_argument("--noise-sigma", type=float, default=None,
                   help="use the zero-bias moment estimator with this known noise level")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("fit2", help="fit a two-layer model")
    p.add_argument("samples")
    _add_sgd_flags(p)
    p.add_argument("--p", type=_positive_int, default=None, help="expected number of anchors")
    p.add_argument("--tol", type=float, default=1e-6, help="cone-membership residual tolerance")
    p.add_argument("--dedup-tol", type=float, default=1e-6)
    p.add_argument("--match-tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.add_argument("--a-out", default=None)
    p.set_defaults(func=cmd_fit2)

    p = sub.add_parser("eval", help="score an estimate against a model")
    p.add_argument("estimate")
    p.add_argument("--truth", required=True)
    p.add_argument("--a-hat", default=None)
    p.add_argument("--match-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run a sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, rio.FormatError, FileNotFoundError, IsADirectoryError,
            PermissionError) as exc:
        print(f"rectgauss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TruncationExhausted, AnchorCountError, RankDeficientAnchors, ValueError,
            np.linalg.LinAlgError) as exc:
        print(f"rectgauss: estimation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
