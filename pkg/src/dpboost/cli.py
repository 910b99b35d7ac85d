"""Command-line interface: ``dpboost <command> [options]``.

Exit codes: 0 on success, 2 for usage errors, 3 for data errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import evaluation as ev
from .audit import audit_selection, audit_weak_learner, nonprivate_1r, toy_neighboring_pair
from .boosting import LEARNERS, BoostConfig, ConfigError, Ensemble, accuracy, advantage_curve, lazybb
from .data import (
    BooleanDataset,
    ColumnSpec,
    DataError,
    EncodingSchema,
    boolean_schema,
    load_dataset,
    load_schema,
    one_hot_encode,
)
from .learners import train_dp_1r, train_dp_topdown
from .mechanisms import weighted_exponential_mechanism, weighted_report_noisy_max
from .rng import RngStream

EXIT_USAGE = 2
EXIT_DATA = 3
AUDIT_MECHANISMS = ("dp-1r", "dp-topdown", "wem", "wrnm", "1r")


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------------

def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_lines(lines, path) -> None:
    with _output(path) as fh:
        fh.write("\n".join(lines) + "\n")


def load_boolean(path, fmt: str, schema_path=None, label_column=None, positive=None) -> BooleanDataset:
    """Load a table and binarize it; non-Boolean data needs a schema."""
    if schema_path:
        schema = load_schema(schema_path)
        raw = load_dataset(path, fmt, label_column or (schema.label_column if fmt == "csv" else None))
        if fmt == "libsvm":
            schema = EncodingSchema(schema.columns, raw.label_column, schema.positive)
        return one_hot_encode(raw, schema)
    raw = load_dataset(path, fmt, label_column)
    return one_hot_encode(raw, boolean_schema(raw, positive))


def _load_for_model(args, model: Ensemble) -> tuple[BooleanDataset, bool]:
    """Encode prediction data for ``model``; returns (dataset, labels present)."""
    if args.schema:
        schema = load_schema(args.schema)
        raw = load_dataset(args.data, args.format, args.label_column or schema.label_column,
                           require_label=False)
        if args.format == "libsvm":
            schema = EncodingSchema(schema.columns, raw.label_column, schema.positive)
        ds = one_hot_encode(raw, schema, require_label=False)
        labeled = raw.has_column(schema.label_column)
    else:
        raw = load_dataset(args.data, args.format, args.label_column, require_label=False)
        names = [c.name for c in raw.columns]
        known = set(model.feature_names)
        extra = [c for c in names if c not in known]
        if args.label_column:
            label = args.label_column
        elif args.format == "libsvm":
            label = "label"
        elif len(extra) == 1:
            label = extra[0]
        elif not extra:
            label = None
        else:
            raise DataError(f"data has {len(names)} columns; model expects {model.n_features} features")
        label = label if label is not None else "__label__"
        labeled = raw.has_column(label)
        raw = type(raw)(raw.columns, raw.rows, label)
        if args.format == "libsvm":
            raw = _pad_libsvm(raw, model.feature_names)
        cols = tuple(ColumnSpec(name, "boolean") for name in model.feature_names)
        ds = one_hot_encode(raw, EncodingSchema(cols, label, args.positive), require_label=False)
    if ds.r != model.n_features:
        raise DataError(f"model expects {model.n_features} features, data has {ds.r}")
    return ds, labeled


def _pad_libsvm(raw, names):
    """Sparse files may stop short of the model's highest index; fill with zeros."""
    from .data import Column, RawDataset

    have = {c.name for c in raw.columns}
    missing = [n for n in names if n not in have]
    if not missing:
        return raw
    cols = raw.columns + tuple(Column(n, "boolean") for n in missing)
    rows = tuple(row + ("0",) * len(missing) for row in raw.rows)
    return RawDataset(cols, rows, raw.label_column)


def _config(args, **over) -> BoostConfig:
    if args.delta > 0 and args.accounting == "basic" and "accounting" not in over:
        raise UsageError("--delta > 0 requires --accounting advanced")
    fields = dict(
        kappa=args.kappa, lam=args.lam, tau=args.rounds, learner=args.learner,
        tree_nodes=args.tree_nodes, epsilon=args.epsilon if args.learner != "1r" else None,
        delta=args.delta, accounting=args.accounting, seed=args.seed,
        early_stop=getattr(args, "early_stop", None),
    )
    fields.update(over)
    return BoostConfig(**fields)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.10g}"
    return str(v)


# -- commands ------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _config(args)
    ds = load_boolean(args.data, args.format, args.schema, args.label_column, args.positive)
    ens = lazybb(ds, cfg, RngStream(args.seed))
    if args.out:
        ens.save(args.out)
    priv = ens.privacy()
    print(f"rounds={ens.rounds}")
    print(f"epsilon={_fmt(priv['epsilon'])}")
    print(f"delta={_fmt(priv['delta'])}")
    print(f"eta_per_round={_fmt(priv['eta'])}")
    print(f"train_accuracy={accuracy(ens, ds):.6f}")
    print(f"features_used={len(ens.features_used())}")
    if args.test_data:
        test = load_boolean(args.test_data, args.format, args.schema, args.label_column, args.positive)
        print(f"test_accuracy={accuracy(ens, test):.6f}")
    return 0


def cmd_predict(args) -> int:
    model = Ensemble.load(args.model)
    ds, labeled = _load_for_model(args, model)
    pred = model.predict(ds.x)
    _write_lines(["prediction"] + [str(int(p)) for p in pred], args.out)
    if labeled:
        acc = float(np.mean(pred == ds.y))
        print(f"accuracy={acc:.6f}", file=sys.stdout if args.out else sys.stderr)
    return 0


def cmd_cv(args) -> int:
    cfg = _config(args)
    ds = load_boolean(args.data, args.format, args.schema, args.label_column, args.positive)
    res = ev.cross_validate(ds, cfg, args.folds, args.repeats, args.seed)
    lines = ["repeat,fold,accuracy,features_used"]
    for i, (acc, feats) in enumerate(zip(res.accuracies, res.feature_counts)):
        lines.append(f"{i // args.folds},{i % args.folds},{acc:.6f},{feats}")
    _write_lines(lines, args.out)
    print(f"mean_accuracy={res.mean:.6f}", file=sys.stderr if not args.out else sys.stdout)
    print(f"std_accuracy={res.std:.6f}", file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_grid(args) -> int:
    try:
        grid = ev.GridSpec(args.taus, args.lambdas, args.kappas, args.epsilons, args.folds)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    base = _config(args, tau=grid.tau_values[0], lam=grid.lambda_values[0],
                   kappa=grid.kappa_values[0],
                   epsilon=grid.epsilon_values[0] if args.learner != "1r" else None)
    ds = load_boolean(args.data, args.format, args.schema, args.label_column, args.positive)
    rows = ev.grid_search(ds, grid, base, args.repeats, args.seed, args.threads)
    _write_lines(ev.grid_csv(rows), args.out)
    return 0


def cmd_report(args) -> int:
    kind = args.report
    if kind == "sparsity":
        models = [Ensemble.load(p) for p in args.model]
        usage = ev.feature_usage(models)
        lines = ["model,features_used,percent"]
        for path, count in zip(args.model, usage["counts"]):
            lines.append(f"{path},{count},{100.0 * count / usage['n_features']:.4f}")
        lines.append(f"mean,{usage['mean']:.4f},{usage['percent']:.4f}")
        lines.append(f"std,{usage['std']:.4f},")
        _write_lines(lines, args.out)
    elif kind == "margins":
        model = Ensemble.load(args.model[0])
        ds = load_boolean(args.data, args.format, args.schema, args.label_column, args.positive)
        counts, edges = ev.margin_histogram(model, ds)
        lines = ["bin_low,bin_high,count"]
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            lines.append(f"{lo:.6g},{hi:.6g},{int(c)}")
        _write_lines(lines, args.out)
    elif kind == "advantage":
        model = Ensemble.load(args.model[0])
        try:
            curve = advantage_curve(model)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        _write_lines(["round,advantage"] + [f"{i},{a:.8f}" for i, a in enumerate(curve, 1)],
                     args.out)
    else:
        ds = load_boolean(args.data, args.format, args.schema, args.label_column, args.positive)
        if args.draws < 100:
            raise UsageError("--draws must be at least 100")
        rad = ev.estimate_rademacher(ds, args.draws, RngStream(args.seed, 0x5AD))
        lines = ["quantity,value", f"n,{ds.n}", f"features,{ds.r}", f"draws,{args.draws}",
                 f"rademacher,{rad:.6f}"]
        if args.model:
            model = Ensemble.load(args.model[0])
            est, theta = ev.margin_bound_accuracy(model, ds, rad)
            lines += [f"accuracy,{accuracy(model, ds):.6f}",
                      f"pessimistic_accuracy_estimate,{est:.6f}", f"theta,{theta:.4f}"]
        _write_lines(lines, args.out)
    return 0


def cmd_audit(args) -> int:
    rng = RngStream(args.seed, 0xA0D17)
    mech = args.mechanism
    if mech in ("wem", "wrnm"):
        scores = np.array(args.scores, dtype=float)
        scores_prime = np.array(args.scores_prime or args.scores, dtype=float)
        if scores.shape != scores_prime.shape or scores.size == 0:
            raise UsageError("--scores and --scores-prime must be nonempty and the same length")
        # Scores with sensitivity 1 make either selection rule 2*eta-private.
        eta = args.epsilon / 2
        select = weighted_exponential_mechanism if mech == "wem" else weighted_report_noisy_max
        report = audit_selection(select, scores, scores_prime, eta, args.trials, rng)
    else:
        ds, ds_prime = toy_neighboring_pair()
        mu = np.full(ds.n, 1.0 / ds.n)
        zeta = 1.0 / (args.kappa * ds.n)
        if mech == "dp-1r":
            eta = args.epsilon / (4 * zeta)
            fn = lambda d, m, r: train_dp_1r(d, m, eta, r)  # noqa: E731
        elif mech == "dp-topdown":
            eta = args.epsilon / (16 * args.tree_nodes * zeta)
            fn = lambda d, m, r: train_dp_topdown(d, m, args.tree_nodes, eta, r, zeta)  # noqa: E731
        else:
            fn = nonprivate_1r
        report = audit_weak_learner(fn, ds, ds_prime, mu, mu.copy(), args.trials, rng, zeta)
    _write_lines(report.csv_lines(), args.out)
    print(f"epsilon_hat={_fmt(report.epsilon_hat)}",
          file=sys.stdout if args.out else sys.stderr)
    return 0


# -- parser --------------------------------------------------------------------------

def _data_flags(p, required=True):
    p.add_argument("--data", required=required, help="CSV or LIBSVM file")
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--schema", help="JSON encoding schema (required for non-Boolean columns)")
    p.add_argument("--label-column", help="label column name (CSV; default last column)")
    p.add_argument("--positive", help="label value mapped to +1")


def _boost_flags(p):
    p.add_argument("--learner", choices=LEARNERS, default="dp-1r")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=0.35)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--rounds", type=int, default=9)
    p.add_argument("--tree-nodes", type=int, default=1)
    p.add_argument("--accounting", choices=("basic", "advanced"), default="basic")
    p.add_argument("--early-stop", type=int, default=None, metavar="W",
                   help="stop after W consecutive rounds of negative advantage")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpboost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an ensemble and write it as JSON")
    _data_flags(p)
    _boost_flags(p)
    p.add_argument("--test-data", help="held-out file to report accuracy on")
    p.add_argument("--out", help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict with a saved ensemble")
    p.add_argument("--model", required=True)
    _data_flags(p)
    p.add_argument("--out", help="predictions CSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="k-fold cross-validation of one configuration")
    _data_flags(p)
    _boost_flags(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("grid", help="cross-validated grid search per epsilon")
    _data_flags(p)
    _boost_flags(p)
    p.add_argument("--taus", type=_int_list, default=ev.DEFAULT_TAUS)
    p.add_argument("--lambdas", type=_float_list, default=ev.DEFAULT_RATES)
    p.add_argument("--kappas", type=_float_list, default=ev.DEFAULT_RATES)
    p.add_argument("--epsilons", type=_float_list, default=ev.DEFAULT_EPSILONS)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repeats", type=int, default=ev.DEFAULT_REPEATS)
    p.add_argument("--threads", type=int, default=None, help="overrides DPBOOST_THREADS")
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("report", help="sparsity, margin, advantage or Rademacher reports")
    p.add_argument("report", choices=("sparsity", "margins", "advantage", "rademacher"))
    p.add_argument("--model", nargs="+", help="model file(s); sparsity accepts several")
    _data_flags(p, required=False)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("audit", help="Monte Carlo privacy audit of a selection mechanism")
    p.add_argument("--mechanism", required=True, choices=AUDIT_MECHANISMS)
    p.add_argument("--epsilon", type=float, default=1.0, help="declared epsilon")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--kappa", type=float, default=0.5, help="density setting the distance promise")
    p.add_argument("--tree-nodes", type=int, default=1)
    p.add_argument("--scores", type=_float_list, default=(0.0, 0.0, 0.0, 0.0))
    p.add_argument("--scores-prime", type=_float_list, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)
    return parser


def _check_report_args(parser, args):
    need_model = args.report in ("sparsity", "margins", "advantage")
    need_data = args.report in ("margins", "rademacher")
    if need_model and not args.model:
        parser.error(f"report {args.report} needs --model")
    if need_data and not args.data:
        parser.error(f"report {args.report} needs --data")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "report":
        _check_report_args(parser, args)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"dpboost: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, json.JSONDecodeError, KeyError, OSError) as exc:
        print(f"dpboost: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"dpboost: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
