"""Command-line front end.

Subcommands: ``evaluate`` (utility report for an observed/synthetic pair),
``compare`` (rank several synthetic candidates), ``simulate`` (replication
studies), ``reweight`` (importance-weighted regression), ``fit`` and
``predict`` (serialize a ratio model, score new data with it).

stdout carries only the report; diagnostics and warnings go to stderr.
Exit codes: 0 success, 1 usage, 2 input error, 3 numerical failure.
"""

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__
from ._jsonio import dump, dumps
from .dataset import encode_pair, load_csv
from .errors import InputError, NumericError
from .formula import build_design, parse_formula
from .inference import permutation_test
from .knn import default_k, kl_divergence_knn
from .pmse import pmse_ratio, stack_samples
from .reweight import importance_weights, weighted_least_squares
from .simlab import (
    MEASURES,
    MultivariateConfig,
    UNIVARIATE_SCENARIOS,
    run_ranking_experiment,
    run_univariate_experiment,
)
from .ulsif import UlsifEstimator

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _centers_arg(value):
    if value == "all":
        return "all"
    try:
        count = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("must be an integer or 'all'")
    if count < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return count


def _grid_arg(value):
    try:
        grid = [float(v) for v in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("must be comma-separated numbers")
    if not grid or any(v <= 0 for v in grid):
        raise argparse.ArgumentTypeError("grid values must be positive")
    return grid


def _positive_int(value):
    try:
        count = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("must be an integer")
    if count < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return count


def _knn_arg(value):
    if value == "auto":
        return "auto"
    return _positive_int(value)


def _add_fit_flags(sub):
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for all stochastic choices (default 0)")
    sub.add_argument("--centers", type=_centers_arg, default=200,
                     help="kernel center count sampled from the observed rows, "
                          "or 'all' (default 200)")
    sub.add_argument("--sigma-grid", type=_grid_arg, default=None,
                     help="comma-separated kernel widths (default: data-driven)")
    sub.add_argument("--lambda-grid", type=_grid_arg, default=None,
                     help="comma-separated ridge strengths (default: 1e3..1e-3)")
    sub.add_argument("--cv", choices=("kfold", "loocv"), default="kfold",
                     help="hyperparameter selection method (default kfold)")
    sub.add_argument("--standardize", action=argparse.BooleanOptionalAction,
                     default=True,
                     help="jointly standardize the encoded pair (default on)")


def _estimator(args):
    return UlsifEstimator(
        sigma_grid=args.sigma_grid,
        lambda_grid=args.lambda_grid,
        n_centers=args.centers,
        cv=args.cv,
        random_state=args.seed,
    )


def _emit(report, json_path):
    text = dumps(report)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _log(message):
    print(message, file=sys.stderr)


# ----------------------------------------------------------------------
# evaluate
# ----------------------------------------------------------------------


def cmd_evaluate(args):
    observed = load_csv(args.observed)
    synthetic = load_csv(args.synthetic)
    fm_obs, fm_syn = encode_pair(observed, synthetic, standardize=args.standardize)
    est = _estimator(args).fit(fm_obs, fm_syn)
    report = {
        "report": "synthratio-evaluate",
        "version": __version__,
        "provenance": {
            "observed": args.observed,
            "synthetic": args.synthetic,
            "seed": args.seed,
            "flags": {
                "centers": str(args.centers),
                "cv": args.cv,
                "standardize": args.standardize,
                "truncate": args.truncate,
            },
        },
        "global": {
            "pearson_divergence": est.pearson_divergence(fm_obs, fm_syn),
            "kl_knn": None,
            "knn_k": None,
            "pmse": None,
            "pmse_expected": None,
            "pmse_ratio": None,
            "pmse_model": None,
        },
        "test": None,
        "fit": {
            "sigma": est.sigma_,
            "lambda": est.lambda_,
            "n_centers": est.centers_.shape[0],
            "cv_method": est.cv_method_,
            "n_numerator": est.n_numerator_,
            "n_denominator": est.n_denominator_,
            "encoded_columns": list(fm_obs.column_names),
        },
        "per_record_ratios": None,
    }
    if args.knn is not None:
        k = default_k(fm_obs.n_rows) if args.knn == "auto" else args.knn
        report["global"]["kl_knn"] = kl_divergence_knn(fm_obs.data, fm_syn.data, k)
        report["global"]["knn_k"] = k
    if args.pmse is not None:
        pr = pmse_ratio(
            stack_samples(fm_obs.data, fm_syn.data), args.pmse, seed=args.seed
        )
        report["global"]["pmse"] = pr.pmse
        report["global"]["pmse_expected"] = pr.expected
        report["global"]["pmse_ratio"] = pr.ratio
        report["global"]["pmse_model"] = pr.model_kind
    if args.test is not None:
        result = permutation_test(
            fm_obs, fm_syn, n_permutations=args.test,
            estimator=_estimator(args), seed=args.seed, reselect=args.reselect,
        )
        report["test"] = {
            "p_value": result.p_value,
            "statistic": result.statistic,
            "n_permutations": result.n_permutations,
            "reselected": result.reselected,
        }
    if args.ratios:
        r_obs = est.predict(fm_obs, truncate=args.truncate)
        r_syn = est.predict(fm_syn, truncate=args.truncate)
        with open(args.ratios, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["table", "row", "ratio"])
            for i, value in enumerate(r_obs, start=1):
                writer.writerow(["observed", i, repr(float(value))])
            for i, value in enumerate(r_syn, start=1):
                writer.writerow(["synthetic", i, repr(float(value))])
        report["per_record_ratios"] = {
            "observed": r_obs,
            "synthetic": r_syn,
            "truncated": args.truncate,
        }
    _emit(report, args.json)
    return EXIT_OK


# ----------------------------------------------------------------------
# compare
# ----------------------------------------------------------------------


def cmd_compare(args):
    if len(args.synthetic) < 2:
        raise _UsageError("compare needs at least 2 synthetic files")
    observed = load_csv(args.observed)
    entries = []
    for position, path in enumerate(args.synthetic):
        synthetic = load_csv(path)
        fm_obs, fm_syn = encode_pair(observed, synthetic, standardize=args.standardize)
        est = _estimator(args).fit(fm_obs, fm_syn)
        pe = est.pearson_divergence(fm_obs, fm_syn)
        entries.append({"path": path, "position": position, "pearson_divergence": pe})
    entries.sort(key=lambda e: (e["pearson_divergence"], e["position"]))
    for rank, entry in enumerate(entries, start=1):
        entry["rank"] = rank
    report = {
        "report": "synthratio-compare",
        "version": __version__,
        "provenance": {"observed": args.observed, "seed": args.seed},
        "ranking": [
            {
                "rank": e["rank"],
                "path": e["path"],
                "pearson_divergence": e["pearson_divergence"],
            }
            for e in entries
        ],
    }
    _emit(report, args.json)
    return EXIT_OK


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_simulate(args):
    os.makedirs(args.out_dir, exist_ok=True)
    if args.study == "univariate":
        result = run_univariate_experiment(
            args.scenario, args.n, args.reps, seed=args.seed,
            grid=np.linspace(-1.0, 3.0, args.grid_points), knn_k=args.knn_k,
        )
        grid_path = os.path.join(args.out_dir, f"univariate_{args.scenario}_grid.csv")
        mean_ratio = result.mean_ulsif()
        mean_knn = result.mean_knn()
        _write_csv(
            grid_path,
            ["x", "mean_ratio", "mean_ratio_knn", "true_ratio"],
            [
                [repr(float(x)), repr(float(r)), repr(float(rk)), repr(float(t))]
                for x, r, rk, t in zip(result.grid, mean_ratio, mean_knn, result.truth)
            ],
        )
        scores_path = os.path.join(
            args.out_dir, f"univariate_{args.scenario}_scores.csv"
        )
        _write_csv(
            scores_path,
            ["replication", "pearson_divergence"],
            [
                [rep, repr(float(pe))]
                for rep, pe in enumerate(result.pearson_divergences)
            ],
        )
        report = {
            "report": "synthratio-simulate",
            "version": __version__,
            "study": "univariate",
            "scenario": args.scenario,
            "n": args.n,
            "replications": args.reps,
            "seed": args.seed,
            "mean_abs_deviation": float(np.mean(np.abs(mean_ratio - result.truth))),
            "max_abs_deviation": float(np.max(np.abs(mean_ratio - result.truth))),
            "files": {"grid": grid_path, "scores": scores_path},
        }
    else:
        measures = tuple(args.measures.split(","))
        unknown = set(measures) - set(MEASURES)
        if unknown:
            raise _UsageError(
                f"unknown measures {sorted(unknown)}; choose from {','.join(MEASURES)}"
            )
        config = MultivariateConfig(D=args.D, n=args.n, seed=args.seed)
        result = run_ranking_experiment(config, measures, args.reps, seed=args.seed)
        proportions = result.proportions()
        prop_csv = os.path.join(args.out_dir, "multivariate_proportions.csv")
        _write_csv(
            prop_csv,
            ["n", "D", *measures],
            [[args.n, args.D, *[repr(proportions[m]) for m in measures]]],
        )
        prop_json = os.path.join(args.out_dir, "multivariate_proportions.json")
        dump(
            {"n": args.n, "D": args.D, "replications": args.reps,
             "proportions": proportions},
            prop_json,
        )
        scores_path = os.path.join(args.out_dir, "multivariate_scores.csv")
        rows = []
        for rep in range(args.reps):
            for j, measure in enumerate(measures):
                for model in range(3):
                    rows.append(
                        [rep, measure, model + 1,
                         repr(float(result.scores[rep, j, model])),
                         int(result.ordering[rep, j])]
                    )
        _write_csv(
            scores_path,
            ["replication", "measure", "model", "score", "ordering_correct"],
            rows,
        )
        report = {
            "report": "synthratio-simulate",
            "version": __version__,
            "study": "multivariate",
            "n": args.n,
            "D": args.D,
            "replications": args.reps,
            "seed": args.seed,
            "proportions": proportions,
            "files": {
                "proportions_csv": prop_csv,
                "proportions_json": prop_json,
                "scores": scores_path,
            },
        }
    _emit(report, args.json)
    return EXIT_OK


# ----------------------------------------------------------------------
# reweight
# ----------------------------------------------------------------------


def cmd_reweight(args):
    observed = load_csv(args.observed)
    synthetic = load_csv(args.synthetic)
    formula = parse_formula(args.formula)
    X_obs, y_obs, names = build_design(observed, formula)
    X_syn, y_syn, _ = build_design(synthetic, formula, reference=observed)

    fm_obs, fm_syn = encode_pair(observed, synthetic, standardize=args.standardize)
    est = _estimator(args).fit(fm_obs, fm_syn)
    weights = importance_weights(est, fm_syn, normalize=args.normalize_weights)
    w = weights.weights
    if args.max_weight is not None:
        w = np.minimum(w, args.max_weight)

    ones = np.ones_like(y_obs)
    fit_obs = weighted_least_squares(X_obs, y_obs, ones, names=names)
    fit_syn = weighted_least_squares(X_syn, y_syn, np.ones_like(y_syn), names=names)
    fit_rw = weighted_least_squares(X_syn, y_syn, w, names=names)

    if args.weights_out:
        _write_csv(args.weights_out, ["weight"], [[repr(float(v))] for v in w])

    writer = csv.writer(sys.stdout)
    writer.writerow(["term", "observed", "synthetic", "reweighted"])
    for i, name in enumerate(names):
        writer.writerow(
            [name,
             repr(float(fit_obs.coefficients[i])),
             repr(float(fit_syn.coefficients[i])),
             repr(float(fit_rw.coefficients[i]))]
        )
    if args.json:
        dump(
            {
                "report": "synthratio-reweight",
                "version": __version__,
                "formula": args.formula,
                "seed": args.seed,
                "terms": list(names),
                "observed": fit_obs.coefficients,
                "synthetic": fit_syn.coefficients,
                "reweighted": fit_rw.coefficients,
            },
            args.json,
        )
    return EXIT_OK


# ----------------------------------------------------------------------
# fit / predict
# ----------------------------------------------------------------------


def cmd_fit(args):
    observed = load_csv(args.observed)
    synthetic = load_csv(args.synthetic)
    fm_obs, fm_syn = encode_pair(observed, synthetic, standardize=args.standardize)
    est = _estimator(args).fit(fm_obs, fm_syn)
    est.save_json(args.out)
    _emit(
        {
            "report": "synthratio-fit",
            "version": __version__,
            "file": args.out,
            "sigma": est.sigma_,
            "lambda": est.lambda_,
            "n_centers": est.centers_.shape[0],
            "cv_method": est.cv_method_,
        },
        None,
    )
    return EXIT_OK


def cmd_predict(args):
    est = UlsifEstimator.load_json(args.fit)
    if est.encoder_ is None:
        raise InputError("serialized fit carries no encoder; cannot score raw tables")
    data = load_csv(args.data)
    X = est.encoder_.transform(data)
    values = est.predict(X, truncate=args.truncate)
    rows = [[i, repr(float(v))] for i, v in enumerate(values, start=1)]
    if args.ratios:
        _write_csv(args.ratios, ["row", "ratio"], rows)
        _log(f"wrote {len(rows)} ratios to {args.ratios}")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(["row", "ratio"])
        writer.writerows(rows)
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def build_parser():
    parser = _Parser(
        prog="synthratio",
        description="Synthetic data utility via direct density ratio estimation.",
    )
    parser.add_argument("--version", action="version", version=f"synthratio {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="utility report for one synthetic table")
    p_eval.add_argument("observed")
    p_eval.add_argument("synthetic")
    _add_fit_flags(p_eval)
    p_eval.add_argument("--test", type=_positive_int, metavar="B", default=None,
                        help="run a permutation test with B permutations")
    p_eval.add_argument("--reselect", action="store_true",
                        help="re-select hyperparameters on every permutation")
    p_eval.add_argument("--knn", type=_knn_arg, metavar="K", default=None,
                        help="also report the k-NN KL divergence ('auto' = sqrt(n))")
    p_eval.add_argument("--pmse", choices=("logit", "cart"), default=None,
                        help="also report the pMSE-ratio under this model")
    p_eval.add_argument("--ratios", metavar="PATH", default=None,
                        help="write per-record ratios to this CSV")
    p_eval.add_argument("--truncate", action=argparse.BooleanOptionalAction,
                        default=True, help="clamp exported ratios at zero")
    p_eval.add_argument("--json", metavar="PATH", default=None,
                        help="also write the JSON report to this file")
    p_eval.set_defaults(func=cmd_evaluate)

    p_cmp = sub.add_parser("compare", help="rank synthetic candidates by divergence")
    p_cmp.add_argument("observed")
    p_cmp.add_argument("synthetic", nargs="+")
    _add_fit_flags(p_cmp)
    p_cmp.add_argument("--json", metavar="PATH", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_sim = sub.add_parser("simulate", help="replication studies")
    p_sim.add_argument("study", choices=("univariate", "multivariate"))
    p_sim.add_argument("--scenario", choices=UNIVARIATE_SCENARIOS, default="normal",
                       help="univariate data-generating mechanism")
    p_sim.add_argument("--n", type=_positive_int, default=250)
    p_sim.add_argument("--D", type=_positive_int, default=5,
                       help="column count for the multivariate study")
    p_sim.add_argument("--reps", type=_positive_int, default=200)
    p_sim.add_argument("--measures", default="PE",
                       help=f"comma-separated subset of {','.join(MEASURES)}")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--knn-k", type=_positive_int, default=15,
                       help="neighbor count for the univariate grid comparison")
    p_sim.add_argument("--grid-points", type=_positive_int, default=41)
    p_sim.add_argument("--out-dir", default=".")
    p_sim.add_argument("--json", metavar="PATH", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_rw = sub.add_parser("reweight", help="importance-weighted regression")
    p_rw.add_argument("observed")
    p_rw.add_argument("synthetic")
    p_rw.add_argument("--formula", required=True,
                      help="e.g. 'y ~ a + log1p(b) + pow(c,2)'")
    _add_fit_flags(p_rw)
    p_rw.add_argument("--normalize-weights", action=argparse.BooleanOptionalAction,
                      default=True, help="rescale weights to mean one")
    p_rw.add_argument("--max-weight", type=float, default=None,
                      help="cap weights at this value (variance control)")
    p_rw.add_argument("--weights-out", metavar="PATH", default=None,
                      help="write the weight vector to this CSV")
    p_rw.add_argument("--json", metavar="PATH", default=None)
    p_rw.set_defaults(func=cmd_reweight)

    p_fit = sub.add_parser("fit", help="fit and serialize a ratio model")
    p_fit.add_argument("observed")
    p_fit.add_argument("synthetic")
    p_fit.add_argument("--out", required=True, metavar="PATH")
    _add_fit_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="ratios from a serialized model")
    p_pred.add_argument("fit")
    p_pred.add_argument("data")
    p_pred.add_argument("--ratios", metavar="PATH", default=None,
                        help="write ratios to this CSV instead of stdout")
    p_pred.add_argument("--truncate", action=argparse.BooleanOptionalAction,
                        default=True)
    p_pred.set_defaults(func=cmd_predict)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        _log(f"synthratio: error: {exc}")
        return EXIT_USAGE
    except InputError as exc:
        _log(f"synthratio: input error: {exc}")
        return EXIT_INPUT
    except NumericError as exc:
        _log(f"synthratio: numeric failure: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        _log(f"synthratio: input error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
