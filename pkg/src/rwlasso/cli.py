"""Command-line interface: ``rwlasso {fit,sample,cv,simulate,diagnose}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Failures print a one-line JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import diagnose
from .exceptions import DataParseError, InvalidArgumentError, RWLassoError
from .io import SimulationWriter, load_csv, read_batch, write_batch, write_diagnostics, write_matrix_csv
from .samplers import (
    CvMode,
    Procedure,
    cross_validate,
    lasso_ls,
    one_step_sample,
    residual_bootstrap,
    two_step_sample,
)
from .simulation import DEFAULT_METHODS, METHODS, SETTINGS, derive_seed, run_replicate
from .solver import SolverConfig, lasso
from .weights import DEFAULT_DISTRIBUTION, WeightDistribution, WeightScheme

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {s}")
    return v


def _level(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"level must be in (0, 1), got {s}")
    return v


def _lambda(s):
    if s == "cv":
        return s
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--lambda must be 'cv' or a number, got {s!r}") from None
    if not (np.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError("--lambda must be finite and non-negative")
    return v


def _scheme(s):
    try:
        return WeightScheme.parse(s)
    except InvalidArgumentError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _dist(s):
    """A JSON object, a path to a JSON file, or a bare family name."""
    try:
        if s.lstrip().startswith("{"):
            spec = json.loads(s)
        elif Path(s).is_file():
            spec = json.loads(Path(s).read_text(encoding="utf-8"))
        else:
            spec = {"family": s}
        return WeightDistribution.from_dict(spec)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"bad --dist: {exc}") from None


def _existing_file(s):
    if not Path(s).is_file():
        raise argparse.ArgumentTypeError(f"file not found: {s}")
    return s


def _existing_dir(s):
    if not Path(s).is_dir():
        raise argparse.ArgumentTypeError(f"directory not found: {s}")
    return s


def build_parser():
    parser = _Parser(prog="rwlasso", description="Random-weighting inference for the LASSO.")
    parser.add_argument("--version", action="version", version=f"rwlasso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--workers", type=_positive_int, default=None,
                        help="thread cap (default: RW_LASSO_WORKERS or 1); never changes results")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--kkt-tol", type=float, default=1e-8)

    data = _Parser(add_help=False)
    data.add_argument("--data", type=_existing_file, required=True, help="CSV file with a header row")
    data.add_argument("--response", required=True, help="name of the response column")
    data.add_argument("--standardize", action="store_true", help="scale predictors to unit variance")
    data.add_argument("--folds", type=_positive_int, default=10)
    data.add_argument("--centered-scale", action="store_true",
                      help="report coefficients for the centered (and standardized) design")

    p = sub.add_parser("fit", parents=[common, data], help="single LASSO or LASSO+LS fit")
    p.add_argument("--lambda", dest="lam", type=_lambda, default="cv")
    p.add_argument("--procedure", choices=["one-step", "two-step"], default="two-step")

    p = sub.add_parser("sample", parents=[common, data], help="draw random-weighting or bootstrap samples")
    p.add_argument("--procedure", choices=[x.value for x in Procedure], default="two-step")
    p.add_argument("--scheme", type=_scheme, default=None)
    p.add_argument("--dist", type=_dist, default=None, help="weight law as JSON, e.g. '{\"family\": \"exponential\"}'")
    p.add_argument("--lambda", dest="lam", type=_lambda, default="cv")
    p.add_argument("--B", type=_positive_int, default=1000)
    p.add_argument("--level", type=_level, default=0.90)

    p = sub.add_parser("cv", parents=[common, data], help="cross-validate lambda")
    p.add_argument("--mode", choices=[m.value for m in CvMode], default="two-step")

    p = sub.add_parser("simulate", parents=[common], help="run a preset simulation setting")
    p.add_argument("--setting", type=int, choices=sorted(SETTINGS), required=True)
    p.add_argument("--T", type=_positive_int, default=None)
    p.add_argument("--B", type=_positive_int, default=None)
    p.add_argument("--methods", default=",".join(DEFAULT_METHODS),
                   help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--folds", type=_positive_int, default=10)
    p.add_argument("--reference-B", type=int, default=0,
                   help="draws in a long RW1 reference batch for ecdf distances (0 disables)")
    p.add_argument("--level", type=_level, default=0.90)

    p = sub.add_parser("diagnose", parents=[common], help="metrics for a stored batch")
    p.add_argument("--batch", type=_existing_dir, required=True, help="directory written by 'sample'")
    p.add_argument("--data", type=_existing_file, required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--test-data", type=_existing_file, default=None)
    p.add_argument("--reference", type=_existing_dir, default=None, help="another batch directory")
    p.add_argument("--beta0", default=None, help="comma-separated true coefficients, for coverage")
    p.add_argument("--level", type=_level, default=0.90)
    return parser


def _validate(args):
    if args.command == "sample":
        proc = Procedure(args.procedure)
        if proc is Procedure.RESIDUAL_BOOTSTRAP:
            if args.scheme is not None or args.dist is not None:
                raise UsageError("--scheme/--dist do not apply to the residual bootstrap")
        else:
            args.scheme = args.scheme or WeightScheme.OBS_ONLY
            args.dist = args.dist or DEFAULT_DISTRIBUTION
    if args.command == "simulate":
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise UsageError(f"unknown methods {bad}; choose from {','.join(METHODS)}")
        args.methods = tuple(methods)
    if getattr(args, "folds", 2) < 2:
        raise UsageError("--folds must be at least 2")
    if not args.kkt_tol > 0:
        raise UsageError("--kkt-tol must be positive")


def _report_coef(data, beta, centered):
    """Coefficients (draws may be stacked) on the requested scale, with intercepts."""
    if centered:
        return np.zeros(np.shape(beta)[:-1]) if np.ndim(beta) > 1 else 0.0, np.asarray(beta)
    return data.to_original_scale(beta)


def _choose_lambda(args, data, mode, cfg):
    if args.lam != "cv":
        return float(args.lam), None
    cv = cross_validate(data, args.folds, mode=mode, seed=derive_seed(args.seed, "cv"), cfg=cfg,
                        workers=args.workers)
    return cv.chosen_lambda, cv


def cmd_fit(args, cfg):
    data = load_csv(args.data, args.response, args.standardize)
    mode = CvMode.parse(args.procedure)
    lam, _ = _choose_lambda(args, data, mode, cfg)
    fit = lasso(data, lam, cfg)
    beta = lasso_ls(data, lam, cfg)[0] if mode is CvMode.TWO_STEP else fit.beta
    intercept, coef = _report_coef(data, beta, args.centered_scale)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "coef.csv", ["variable", "coef"],
                     [["(intercept)", intercept]] + [[n, c] for n, c in zip(data.names(), coef)])
    summary = {"lambda": lam, "procedure": args.procedure, "kkt_residual": fit.kkt_residual,
               "converged": fit.converged, "selected": [data.names()[j] for j in fit.active],
               "software_version": __version__}
    (out / "fit.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if not fit.converged:
        raise ArithmeticError(f"solver did not reach kkt_tol (residual {fit.kkt_residual:.3e})")


def cmd_sample(args, cfg):
    data = load_csv(args.data, args.response, args.standardize)
    proc = Procedure(args.procedure)
    mode = CvMode.TWO_STEP if proc is Procedure.TWO_STEP else CvMode.ONE_STEP
    lam, _ = _choose_lambda(args, data, mode, cfg)
    if proc is Procedure.RESIDUAL_BOOTSTRAP:
        batch = residual_bootstrap(data, lam, args.B, seed=args.seed, cfg=cfg, workers=args.workers)
    else:
        sampler = two_step_sample if proc is Procedure.TWO_STEP else one_step_sample
        batch = sampler(data, lam, args.B, args.dist, args.scheme, args.seed, cfg, args.workers)
    report = diagnose(batch, data, level=args.level)
    _, draws = _report_coef(data, batch.draws, args.centered_scale)
    out_batch = batch if draws is batch.draws else _with_draws(batch, draws)
    extra = {"scale": "centered" if args.centered_scale else "original",
             "standardized": bool(args.standardize), "response": args.response}
    write_batch(out_batch, args.out, data.names(), extra)
    write_diagnostics(report, args.out, data.names())
    if batch.failures:
        logging.getLogger("rwlasso").warning("%d draws flagged; see manifest.json", len(batch.failures))


def _with_draws(batch, draws):
    from dataclasses import replace

    return replace(batch, draws=np.ascontiguousarray(draws))


def cmd_cv(args, cfg):
    data = load_csv(args.data, args.response, args.standardize)
    cv = cross_validate(data, args.folds, mode=CvMode.parse(args.mode), seed=derive_seed(args.seed, "cv"),
                        cfg=cfg, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "cv.csv", ["lambda", "cv_error"], zip(cv.lambda_grid, cv.cv_error))
    d = cv.to_dict()
    d.pop("fold_ids", None)
    d["software_version"] = __version__
    (out / "cv.json").write_text(json.dumps(d, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_simulate(args, cfg):
    setting = SETTINGS[args.setting]
    changes = {k: v for k, v in (("T", args.T), ("B", args.B)) if v is not None}
    setting = setting.replace(**changes) if changes else setting
    manifest = {
        "setting": args.setting, "n": setting.n, "p": setting.p, "q": setting.q,
        "error_law": setting.error_law.value, "cov": setting.cov.value, "T": setting.T, "B": setting.B,
        "methods": list(args.methods), "seed": args.seed, "folds": args.folds,
        "reference_B": args.reference_B, "level": args.level, "kkt_tol": cfg.kkt_tol,
    }
    with SimulationWriter(args.out, setting.p) as writer:
        for r in range(setting.T):
            rep = run_replicate(setting, r, args.methods, args.seed, folds=args.folds,
                                reference_B=args.reference_B, level=args.level, cfg=cfg, workers=args.workers)
            writer.write(rep)
        writer.close(manifest)


def cmd_diagnose(args, cfg):
    batch, _ = read_batch(args.batch)
    meta = json.loads((Path(args.batch) / "manifest.json").read_text(encoding="utf-8"))
    standardized = bool(meta.get("standardized", False))
    data = load_csv(args.data, args.response, standardized)
    if batch.p != data.p:
        raise DataParseError(f"batch has {batch.p} columns but data has {data.p} predictors")

    def centered(b):
        # stored draws may be on the original scale; metrics use the centered design
        if b is None or not standardized or meta.get("scale") == "centered":
            return b
        return _with_draws(b, b.draws * data.means.x_scale)

    batch = centered(batch)
    test = None if args.test_data is None else load_csv(args.test_data, args.response, False)
    if test is not None and standardized:
        test = test.__class__(test.X / data.means.x_scale, test.y, test.means, test.feature_names)
    ref = None if args.reference is None else centered(read_batch(args.reference)[0]).draws
    beta0 = None
    if args.beta0 is not None:
        try:
            beta0 = np.array([float(t) for t in args.beta0.split(",")])
        except ValueError:
            raise UsageError("--beta0 must be comma-separated numbers") from None
        if beta0.shape[0] != data.p:
            raise UsageError(f"--beta0 has {beta0.shape[0]} entries, data has p={data.p}")
    report = diagnose(batch, data, test, beta0, ref, args.level)
    write_diagnostics(report, args.out, data.names())


COMMANDS = {"fit": cmd_fit, "sample": cmd_sample, "cv": cmd_cv, "simulate": cmd_simulate, "diagnose": cmd_diagnose}


def _fail(code, kind, exc, **extra):
    payload = {"error": kind, "message": str(exc), "exit_code": code, **extra}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    try:
        cfg = SolverConfig(kkt_tol=args.kkt_tol)
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except DataParseError as exc:
        return _fail(EXIT_DATA, "data", exc, row=exc.row, column=exc.column)
    except OSError as exc:
        return _fail(EXIT_DATA, "io", exc)
    except InvalidArgumentError as exc:
        return _fail(EXIT_USAGE, "invalid-argument", exc)
    except (ArithmeticError, RWLassoError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
