"""Experiment pipeline: scale, KPCA, SLLC, sparse classifier, evaluation."""
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    Landmarks,
    SimilarityEvaluator,
    accuracy,
    knn_predict,
    predict,
    signed_similarity_matrix,
    train_l1_classifier,
)
from .data import (
    SPARSE,
    Dataset,
    SplitSpec,
    apply_scaling,
    fit_scaling,
    generate_rings,
    load_dataset,
    split,
)
from .exceptions import InvalidParameter, SimGoodError
from .goodness import ReasonableSet, empirical_goodness, stability_bound
from .kpca import default_n_components, kpca_fit, kpca_project
from .numerics import Rng
from .sllc import SllcConfig, solve_sllc

log = logging.getLogger(__name__)

METHODS = ("sllc-linear", "sllc-knn", "identity-linear", "identity-knn")
DEFAULT_BETA_GRID = tuple(10.0 ** e for e in range(-7, -1))
DEFAULT_GAMMA_GRID = tuple(10.0 ** e for e in range(-7, -1))
DEFAULT_LAMBDA_GRID = tuple(10.0 ** e for e in range(-3, 3))


def decade_grid(low, high):
    """Powers of ten from ``low`` to ``high`` inclusive."""
    lo, hi = math.log10(low), math.log10(high)
    if abs(lo - round(lo)) > 1e-9 or abs(hi - round(hi)) > 1e-9:
        raise InvalidParameter("decade grids need powers of ten as bounds")
    lo, hi = int(round(lo)), int(round(hi))
    if lo > hi:
        raise InvalidParameter("grid lower bound exceeds upper bound")
    return tuple(10.0 ** e for e in range(lo, hi + 1))


@dataclass
class ExperimentConfig:
    dataset: str = "rings"
    test_path: str = None
    data_format: str = None
    n_runs: int = 10
    seed: int = 0
    kpca_multiplier: float = None
    kpca_components: int = None
    beta_grid: tuple = DEFAULT_BETA_GRID
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    tau_hat: float = 1.0
    k_nn: int = 3
    methods: tuple = METHODS
    rings_train: int = 700
    rings_test: int = 300
    delta: float = 0.05
    sllc_solver: str = "reduced"
    l1_solver: str = "lp"
    report_timing: bool = False

    def __post_init__(self):
        for name in ("beta_grid", "gamma_grid", "lambda_grid"):
            grid = tuple(float(v) for v in getattr(self, name))
            if not grid:
                raise InvalidParameter(f"{name} must not be empty")
            setattr(self, name, grid)
        if any(v <= 0 for v in self.beta_grid + self.gamma_grid):
            raise InvalidParameter("beta and gamma grids must be positive")
        if any(v < 0 for v in self.lambda_grid):
            raise InvalidParameter("lambda grid must be non-negative")
        self.methods = tuple(self.methods)
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise InvalidParameter(f"methods must be a non-empty subset of {METHODS}")
        if self.n_runs < 1:
            raise InvalidParameter("n_runs must be at least 1")
        if self.k_nn < 1 or self.k_nn % 2 == 0:
            raise InvalidParameter("k_nn must be a positive odd number")
        if not 0.0 < self.tau_hat <= 1.0:
            raise InvalidParameter("tau_hat must lie in (0, 1]")


@dataclass
class Selection:
    beta: float = None
    gamma: float = None
    lam: float = None
    accuracy: float = math.nan

    def key(self):
        return (self.accuracy, self.beta or 0.0, self.gamma or 0.0, self.lam or 0.0)


@dataclass
class MethodResult:
    method: str
    accuracy: float
    sparsity: float
    selection: Selection
    time_s: float


@dataclass
class RunResult:
    seed: int
    methods: dict
    stage_times: dict
    goodness: object = None
    bound: object = None
    models: dict = field(default_factory=dict, repr=False)


@dataclass
class MethodSummary:
    method: str
    accuracy: float
    accuracy_std: float
    sparsity: float
    beta: float
    gamma: float
    lam: float
    time_s: float


@dataclass
class RunReport:
    config: ExperimentConfig
    summaries: list
    runs: list

    def summary(self, method):
        for s in self.summaries:
            if s.method == method:
                return s
        raise KeyError(method)


def _sllc_config(beta, gamma, seed):
    return SllcConfig(beta=beta, gamma=gamma, seed=seed)


def _lambda_sweep(K, landmarks, fit_set, eval_set, grid, cfg):
    """Validation accuracy of the linear classifier for each lambda."""
    M = signed_similarity_matrix(K, landmarks, fit_set)
    out = []
    for lam in grid:
        clf = train_l1_classifier(K, landmarks, fit_set, lam, method=cfg.l1_solver, M=M)
        out.append((lam, accuracy(eval_set.y, predict(clf, eval_set.X))))
    return out


def cross_validate_all(train, validation, cfg, seed=0):
    """Hyperparameter selection for every method in ``cfg.methods``.

    SLLC is trained once per ``(beta, gamma)`` cell on ``train``; for the
    linear methods each lambda is then tried on the same learned similarity.
    The best validation accuracy wins; ties go to larger beta, then larger
    gamma, then larger lambda.
    """
    best = {m: None for m in cfg.methods}

    def offer(method, sel):
        if best[method] is None or sel.key() > best[method].key():
            best[method] = sel

    landmarks = Landmarks.from_dataset(train)
    wants_sllc = {"sllc-linear", "sllc-knn"} & set(cfg.methods)
    if wants_sllc:
        R = ReasonableSet.from_dataset(train, cfg.tau_hat, seed=seed)
        for beta in cfg.beta_grid:
            for gamma in cfg.gamma_grid:
                model = solve_sllc(train, R, _sllc_config(beta, gamma, seed), cfg.sllc_solver)
                K = SimilarityEvaluator.bilinear(model.A)
                if "sllc-linear" in cfg.methods:
                    for lam, acc in _lambda_sweep(K, landmarks, train, validation, cfg.lambda_grid, cfg):
                        offer("sllc-linear", Selection(beta, gamma, lam, acc))
                if "sllc-knn" in cfg.methods:
                    acc = accuracy(validation.y, knn_predict(K, train, validation.X, cfg.k_nn))
                    offer("sllc-knn", Selection(beta, gamma, None, acc))
    if "identity-linear" in cfg.methods:
        K = SimilarityEvaluator.cosine()
        for lam, acc in _lambda_sweep(K, landmarks, train, validation, cfg.lambda_grid, cfg):
            offer("identity-linear", Selection(None, None, lam, acc))
    if "identity-knn" in cfg.methods:
        acc = accuracy(validation.y, knn_predict(SimilarityEvaluator.cosine(), train, validation.X, cfg.k_nn))
        offer("identity-knn", Selection(None, None, None, acc))
    return best


def cross_validate(train, validation, cfg, method="sllc-linear", seed=0):
    """Selected ``(beta, gamma, lambda)`` for one method (unused entries are None)."""
    if method not in METHODS:
        raise InvalidParameter(f"unknown method {method!r}")
    sub = ExperimentConfig(**{**cfg.__dict__, "methods": (method,)})
    sel = cross_validate_all(train, validation, sub, seed)[method]
    return sel.beta, sel.gamma, sel.lam


def _n_components(cfg, d):
    if cfg.kpca_components is not None:
        return cfg.kpca_components
    return default_n_components(d, cfg.kpca_multiplier)


def run_split(train, test, cfg, seed):
    """One run of the protocol on a fixed train/test pair.

    Scaling, the KPCA basis and every hyperparameter are fitted from
    ``train`` alone; ``test`` is only used for the final accuracies.
    """
    stage = Counter()
    t0 = time.perf_counter()
    rng = Rng(seed)
    inner_seed = rng.next_u64()
    inner_train, _, validation = split(train, SplitSpec(inner_seed, 0.7, 0.0))

    params = fit_scaling(train)
    train_s, test_s = apply_scaling(params, train), apply_scaling(params, test)
    inner_s, val_s = apply_scaling(params, inner_train), apply_scaling(params, validation)
    stage["scaling"] += time.perf_counter() - t0

    t0 = time.perf_counter()
    kpca = kpca_fit(train_s, _n_components(cfg, train.dim))

    def project(ds):
        return ds.with_features(kpca_project(kpca, ds.X))

    T, Tt, Ti, Tv = project(train_s), project(test_s), project(inner_s), project(val_s)
    stage["kpca"] += time.perf_counter() - t0

    t0 = time.perf_counter()
    selections = cross_validate_all(Ti, Tv, cfg, seed=inner_seed)
    stage["cross_validation"] += time.perf_counter() - t0

    results = {}
    models = {"kpca": kpca, "scaling": params, "selections": selections}
    goodness = bound = None
    landmarks = Landmarks.from_dataset(T)
    sllc_cache = {}

    def learned(sel):
        key = (sel.beta, sel.gamma)
        if key not in sllc_cache:
            t = time.perf_counter()
            R = ReasonableSet.from_dataset(T, cfg.tau_hat, seed=inner_seed)
            sllc_cache[key] = solve_sllc(T, R, _sllc_config(sel.beta, sel.gamma, inner_seed), cfg.sllc_solver)
            stage["sllc"] += time.perf_counter() - t
        return sllc_cache[key]

    for method in cfg.methods:
        sel = selections[method]
        if method.startswith("sllc"):
            model = learned(sel)
            K = SimilarityEvaluator.bilinear(model.A)
            models[f"{method}:similarity"] = model
        else:
            K = SimilarityEvaluator.cosine()
        t = time.perf_counter()
        if method.endswith("linear"):
            clf = train_l1_classifier(K, landmarks, T, sel.lam, method=cfg.l1_solver)
            acc = accuracy(Tt.y, predict(clf, Tt.X))
            sparsity = clf.sparsity
            models[f"{method}:classifier"] = clf
        else:
            acc = accuracy(Tt.y, knn_predict(K, T, Tt.X, cfg.k_nn))
            sparsity = len(T)
        elapsed = time.perf_counter() - t
        stage["classifier"] += elapsed
        results[method] = MethodResult(method, acc, float(sparsity), sel, elapsed)

    if "sllc-linear" in cfg.methods:
        sel = selections["sllc-linear"]
        model = learned(sel)
        goodness = empirical_goodness(model.A, T, model.reasonable, model.gamma)
        bound = stability_bound(min(1.0, goodness.epsilon_normalized), len(T), model.beta,
                                model.gamma, model.reasonable.tau_hat, cfg.delta)
    return RunResult(seed, results, dict(stage), goodness, bound, models)


def load_experiment_data(cfg):
    """Either ``(pool, None)`` to be split per run, or a fixed ``(train, test)`` pair."""
    if cfg.dataset == "rings":
        train, test = generate_rings(cfg.rings_train, cfg.rings_test, seed=cfg.seed)
        pool = Dataset(np.vstack([train.X, test.X]), np.concatenate([train.y, test.y]), "rings")
        return pool, None
    fmt = cfg.data_format
    data = load_dataset(cfg.dataset, fmt)
    if cfg.test_path is None:
        return data, None
    test = load_dataset(cfg.test_path, fmt)
    if test.dim != data.dim and (fmt or SPARSE) == SPARSE:
        # sparse files only reveal the largest index they use
        d = max(data.dim, test.dim)
        data, test = _pad(data, d), _pad(test, d)
    return data, test


def _pad(ds, d):
    if ds.dim == d:
        return ds
    return ds.with_features(np.hstack([ds.X, np.zeros((len(ds), d - ds.dim))]))


def _mode(values):
    counts = Counter(v for v in values if v is not None)
    if not counts:
        return None
    top = max(counts.values())
    return max(v for v, c in counts.items() if c == top)


def summarize(cfg, runs):
    summaries = []
    for method in cfg.methods:
        rs = [r.methods[method] for r in runs]
        accs = np.array([r.accuracy for r in rs])
        summaries.append(MethodSummary(
            method=method,
            accuracy=float(np.mean(accs)),
            accuracy_std=float(np.std(accs)),
            sparsity=float(np.mean([r.sparsity for r in rs])),
            beta=_mode(r.selection.beta for r in rs),
            gamma=_mode(r.selection.gamma for r in rs),
            lam=_mode(r.selection.lam for r in rs),
            time_s=float(np.mean([r.time_s for r in rs])),
        ))
    return summaries


def run_experiment(cfg):
    """Average test accuracy and sparsity over ``cfg.n_runs`` seeded runs."""
    data, fixed_test = load_experiment_data(cfg)
    master = Rng(cfg.seed)
    runs = []
    for run in range(cfg.n_runs):
        run_rng = master.spawn(run)
        split_seed, run_seed = run_rng.next_u64(), run_rng.next_u64()
        try:
            if fixed_test is None:
                train, _, test = split(data, SplitSpec(split_seed, 0.7, 0.0))
            else:
                train, test = data, fixed_test
            result = run_split(train, test, cfg, run_seed)
        except SimGoodError as exc:
            exc.args = (f"run {run} (seed {run_seed}): {exc}",)
            raise
        log.info("run %d: %s", run, ", ".join(
            f"{m}={r.accuracy:.2f}/{r.sparsity:g}" for m, r in result.methods.items()))
        runs.append(result)
    return RunReport(cfg, summarize(cfg, runs), runs)


def _num(v):
    return "-" if v is None else f"{v:g}"


def format_report(report, timing=None):
    """Tab-separated table, one row per requested method."""
    timing = report.config.report_timing if timing is None else timing
    lines = ["\t".join(("method", "accuracy", "sparsity", "beta", "gamma", "lambda", "time_s"))]
    for s in report.summaries:
        lines.append("\t".join((
            s.method,
            f"{s.accuracy:.2f}",
            f"{s.sparsity:.2f}",
            _num(s.beta),
            _num(s.gamma),
            _num(s.lam),
            f"{s.time_s:.3f}" if timing else "-",
        )))
    return "\n".join(lines) + "\n"
