"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import logging
import sys


from . import __version__
from .classifier import (
    Landmarks,
    SimilarityEvaluator,
    accuracy,
    knn_predict,
    predict,
    train_l1_classifier,
)
from .data import CSV, SPARSE, UCI_BREAST, apply_scaling, fit_scaling, generate_rings, load_dataset, serialize_csv, serialize_sparse
from .exceptions import DataError, InvalidParameter, NumericalError
from .goodness import ReasonableSet, empirical_goodness, stability_bound
from .harness import METHODS, ExperimentConfig, decade_grid, format_report, run_experiment
from .kpca import default_n_components, kpca_fit, kpca_project
from .persistence import load_model, save_model
from .sllc import SllcConfig, solve_sllc

log = logging.getLogger("simgood")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_grid(text):
    """``1e-7:1e-2`` for a decade range, or a comma-separated list."""
    try:
        if ":" in text:
            low, high = text.split(":")
            return decade_grid(float(low), float(high))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except (ValueError, InvalidParameter) as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None


def _format_arg(value):
    return {"sparse": SPARSE, "csv": CSV, "uci-breast": UCI_BREAST, None: None}[value]


def _load(path, fmt=None):
    return load_dataset(path, _format_arg(fmt))


def _write_dataset(ds, path):
    payload = serialize_csv(ds) if str(path).lower().endswith(".csv") else serialize_sparse(ds)
    with open(path, "wb") as fh:
        fh.write(payload)


def cmd_gen_rings(args):
    train, test = generate_rings(args.n_train, args.n_test, seed=args.seed)
    _write_dataset(train, args.train_out)
    _write_dataset(test, args.test_out)
    print(f"wrote {len(train)} training and {len(test)} test points")


def cmd_kpca(args):
    train = _load(args.train, args.format)
    if not args.no_scale:
        params = fit_scaling(train)
        train = apply_scaling(params, train)
    if args.model:
        model = load_model(args.model, "kpca")
    else:
        n = args.components or default_n_components(train.dim, args.kpca_mult)
        model = kpca_fit(train, n, sigma=args.sigma)
        save_model(model, args.model_out)
        print(f"sigma\t{model.sigma:.17g}\ncomponents\t{model.n_components}")
    if args.train_out:
        _write_dataset(train.with_features(kpca_project(model, train.X)), args.train_out)
    for src, dst in args.transform or ():
        ds = _load(src, args.format)
        if not args.no_scale:
            ds = apply_scaling(params, ds)
        _write_dataset(ds.with_features(kpca_project(model, ds.X)), dst)


def cmd_train_sllc(args):
    train = _load(args.train, args.format)
    R = ReasonableSet.from_dataset(train, args.tau_hat, seed=args.seed)
    cfg = SllcConfig(beta=args.beta, gamma=args.gamma, max_iters=args.max_iters, seed=args.seed,
                     normalize=not args.no_normalize)
    model = solve_sllc(train, R, cfg, args.solver)
    save_model(model, args.out)
    print(f"objective\t{model.objective_value:.10g}\nfrobenius_norm\t{model.frobenius_norm_A:.10g}\n"
          f"rescaled\t{int(model.rescaled)}")


def _evaluator(path):
    if path is None:
        return SimilarityEvaluator.cosine()
    return SimilarityEvaluator.bilinear(load_model(path, "similarity").A)


def cmd_train_classifier(args):
    train = _load(args.train, args.format)
    K = _evaluator(args.similarity)
    clf = train_l1_classifier(K, Landmarks.from_dataset(train), train, args.lam, args.max_iters, args.solver)
    save_model(clf, args.out)
    print(f"objective\t{clf.objective:.10g}\nsparsity\t{clf.sparsity}")


def cmd_evaluate(args):
    test = _load(args.test, args.format)
    if args.knn:
        if args.train is None:
            raise UsageError("--knn needs --train")
        train = _load(args.train, args.format)
        pred = knn_predict(_evaluator(args.similarity), train, test.X, args.knn)
        sparsity = len(train)
    else:
        if args.classifier is None:
            raise UsageError("give --classifier or --knn")
        clf = load_model(args.classifier, "classifier")
        pred = predict(clf, test.X)
        sparsity = clf.sparsity
    print(f"accuracy\tsparsity\n{accuracy(test.y, pred):.2f}\t{sparsity}")


def cmd_bound(args):
    if args.similarity:
        if args.train is None:
            raise UsageError("--similarity needs --train")
        model = load_model(args.similarity, "similarity")
        train = _load(args.train, args.format)
        report = empirical_goodness(model.A, train, model.reasonable, model.gamma)
        eps, n = min(1.0, report.epsilon_normalized), len(train)
        beta, gamma, tau_hat = model.beta, model.gamma, model.reasonable.tau_hat
        print(f"epsilon_hat\t{report.epsilon_hat:.10g}\nviolation_rate\t{report.violation_rate:.10g}")
    else:
        missing = [name for name in ("epsilon", "n_train", "beta", "gamma") if getattr(args, name) is None]
        if missing:
            raise UsageError("missing " + ", ".join("--" + m.replace("_", "-") for m in missing))
        eps, n, beta, gamma, tau_hat = args.epsilon, args.n_train, args.beta, args.gamma, args.tau_hat
    b = stability_bound(eps, n, beta, gamma, tau_hat, args.delta)
    print(f"kappa\t{b.kappa:.17g}\nbound\t{b.bound_value:.17g}")


def cmd_experiment(args):
    cfg = ExperimentConfig(
        dataset=args.dataset,
        test_path=args.test,
        data_format=_format_arg(args.format),
        n_runs=args.runs if args.runs is not None else (1 if args.test else 10),
        seed=args.seed,
        kpca_multiplier=args.kpca_mult,
        kpca_components=args.kpca_components,
        beta_grid=args.beta_grid,
        gamma_grid=args.gamma_grid,
        lambda_grid=args.lambda_grid,
        tau_hat=args.tau_hat,
        k_nn=args.knn_k,
        methods=tuple(args.method) if args.method else METHODS,
        rings_train=args.rings_train,
        rings_test=args.rings_test,
        report_timing=args.timing,
    )
    report = run_experiment(cfg)
    text = format_report(report)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    for i, run in enumerate(report.runs):
        stages = " ".join(f"{k}={v:.2f}s" for k, v in run.stage_times.items())
        log.info("run %d stage times: %s", i, stages)


def build_parser():
    p = _Parser(prog="simgood", description="Similarity learning for sparse linear classification.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(sp):
        sp.add_argument("--format", choices=["sparse", "csv", "uci-breast"],
                        help="input format (default: by file extension)")

    sp = sub.add_parser("gen-rings", help="generate the two-rings dataset")
    sp.add_argument("--n-train", type=int, default=700)
    sp.add_argument("--n-test", type=int, default=300)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--train-out", required=True)
    sp.add_argument("--test-out", required=True)
    sp.set_defaults(func=cmd_gen_rings)

    sp = sub.add_parser("kpca", help="fit Gaussian KPCA and project datasets")
    sp.add_argument("train")
    fmt(sp)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--model-out", help="fit a model and save it here")
    group.add_argument("--model", help="reuse a saved model")
    sp.add_argument("--components", type=int)
    sp.add_argument("--kpca-mult", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--no-scale", action="store_true", help="skip the [-1/d, 1/d] attribute scaling")
    sp.add_argument("--train-out", help="write the projected training set")
    sp.add_argument("--transform", nargs=2, action="append", metavar=("IN", "OUT"),
                    help="project another dataset (scaled with the training statistics)")
    sp.set_defaults(func=cmd_kpca)

    sp = sub.add_parser("train-sllc", help="learn a bilinear similarity")
    sp.add_argument("train")
    fmt(sp)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--tau-hat", type=float, default=1.0)
    sp.add_argument("--solver", choices=["reduced", "full", "subgradient"], default="reduced")
    sp.add_argument("--max-iters", type=int, default=50000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-normalize", action="store_true", help="keep ||A||_F > 1 solutions as they are")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_sllc)

    sp = sub.add_parser("train-classifier", help="fit the sparse L1 linear classifier")
    sp.add_argument("train")
    fmt(sp)
    sp.add_argument("--similarity", help="similarity model file (default: cosine)")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--solver", choices=["lp", "subgradient"], default="lp")
    sp.add_argument("--max-iters", type=int, default=50000)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_classifier)

    sp = sub.add_parser("evaluate", help="test accuracy of a classifier or of k-NN")
    sp.add_argument("test")
    fmt(sp)
    sp.add_argument("--classifier")
    sp.add_argument("--knn", type=int, metavar="K")
    sp.add_argument("--train")
    sp.add_argument("--similarity")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("bound", help="stability constant and generalization bound")
    fmt(sp)
    sp.add_argument("--epsilon", type=float, help="normalized empirical goodness in [0, 1]")
    sp.add_argument("--n-train", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--tau-hat", type=float, default=1.0)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--similarity", help="take beta, gamma and reasonable points from a model")
    sp.add_argument("--train", help="training set on which to measure the goodness")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("experiment", help="run the full protocol and print a TSV report")
    sp.add_argument("dataset", nargs="?", default="rings", help="'rings' or a dataset path")
    fmt(sp)
    sp.add_argument("--test", help="predefined test set")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--kpca-mult", type=float)
    sp.add_argument("--kpca-components", type=int)
    sp.add_argument("--beta-grid", type=parse_grid, default=decade_grid(1e-7, 1e-2))
    sp.add_argument("--gamma-grid", type=parse_grid, default=decade_grid(1e-7, 1e-2))
    sp.add_argument("--lambda-grid", type=parse_grid, default=decade_grid(1e-3, 1e2))
    sp.add_argument("--tau-hat", type=float, default=1.0)
    sp.add_argument("--knn-k", type=int, default=3)
    sp.add_argument("--method", action="append", choices=METHODS)
    sp.add_argument("--rings-train", type=int, default=700)
    sp.add_argument("--rings-test", type=int, default=300)
    sp.add_argument("--timing", action="store_true", help="fill the time_s column (not reproducible)")
    sp.add_argument("--out", help="also write the TSV here")
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (UsageError, InvalidParameter) as exc:
        print(f"simgood: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"simgood: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"simgood: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
