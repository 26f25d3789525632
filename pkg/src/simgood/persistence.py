"""Text model files.

Layout::

    SIMGOOD 1 <kind>
    <dimensions>
    <rows of whitespace-separated decimals, 17 significant digits>

``kind`` is ``kpca``, ``similarity`` or ``classifier``. Lines starting with
``#`` (and anything after a ``#`` on a line) are ignored.
"""
import numpy as np

from .classifier import Landmarks, SimilarityEvaluator, SparseLinearClassifier
from .exceptions import FormatError, InvalidParameter, VersionError
from .goodness import ReasonableSet
from .kpca import KpcaModel
from .sllc import SimilarityModel

MAGIC = "SIMGOOD"
VERSION = 1


def _fmt(values):
    return " ".join(f"{float(v):.17g}" for v in np.ravel(values))


def _labeled_rows(X, y):
    return [f"{int(label)} {_fmt(x)}" for x, label in zip(X, y)]


def _dump_kpca(m):
    n, d = m.training_points.shape
    lines = [f"{n} {d} {m.n_components}",
             "# sigma grand_mean norm_scale",
             _fmt([m.sigma, m.kernel_grand_mean, m.norm_scale]),
             "# training points"]
    lines += [_fmt(x) for x in m.training_points]
    lines += ["# kernel row means", _fmt(m.kernel_row_means),
              "# eigenvalues", _fmt(m.eigenvalues),
              "# eigenvectors (one row per training point)"]
    lines += [_fmt(row) for row in m.eigenvectors]
    return lines


def _dump_similarity(m):
    rows, cols = m.A.shape
    R = m.reasonable
    lines = [f"{rows} {cols} {len(R)}",
             "# gamma beta tau_hat objective unconstrained_objective rescaled degenerate",
             _fmt([m.gamma, m.beta, R.tau_hat, m.objective_value, m.unconstrained_objective,
                   int(m.rescaled), int(m.degenerate)]),
             "# A"]
    lines += [_fmt(row) for row in m.A]
    lines += ["# reasonable points: label features"]
    lines += _labeled_rows(R.X, R.y)
    return lines


def _dump_classifier(c):
    L = c.landmarks
    d_u, d = L.X.shape
    bilinear = c.similarity.kind == "bilinear"
    labels = L.y if L.y is not None else np.zeros(d_u, dtype=np.int64)
    lines = [f"{d_u} {d} {int(bilinear)}",
             "# lambda objective",
             _fmt([c.lam, c.objective]),
             "# alpha",
             _fmt(c.alpha),
             "# landmarks: label features"]
    lines += _labeled_rows(L.X, labels)
    if bilinear:
        lines += ["# A"]
        lines += [_fmt(row) for row in c.similarity.A]
    return lines


def dumps_model(model):
    if isinstance(model, KpcaModel):
        kind, body = "kpca", _dump_kpca(model)
    elif isinstance(model, SimilarityModel):
        kind, body = "similarity", _dump_similarity(model)
    elif isinstance(model, SparseLinearClassifier):
        kind, body = "classifier", _dump_classifier(model)
    else:
        raise InvalidParameter(f"cannot save objects of type {type(model).__name__}")
    return "\n".join([f"{MAGIC} {VERSION} {kind}"] + body) + "\n"


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


class _Reader:
    def __init__(self, text):
        self.rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if line:
                self.rows.append((lineno, line.split()))
        self.pos = 0
        self.last_line = len(text.splitlines())

    def tokens(self, what):
        if self.pos >= len(self.rows):
            raise FormatError(f"unexpected end of file while reading {what}", self.last_line + 1)
        lineno, tokens = self.rows[self.pos]
        self.pos += 1
        return lineno, tokens

    def numbers(self, count, what):
        lineno, tokens = self.tokens(what)
        if len(tokens) != count:
            raise FormatError(f"{what}: expected {count} values, got {len(tokens)}", lineno)
        try:
            return np.array([float(t) for t in tokens])
        except ValueError:
            raise FormatError(f"{what}: non-numeric value", lineno) from None

    def ints(self, count, what):
        lineno, tokens = self.tokens(what)
        if len(tokens) != count:
            raise FormatError(f"{what}: expected {count} integers, got {len(tokens)}", lineno)
        try:
            values = [int(t) for t in tokens]
        except ValueError:
            raise FormatError(f"{what}: expected integers", lineno) from None
        if any(v < 0 for v in values):
            raise FormatError(f"{what}: negative size", lineno)
        return values

    def matrix(self, rows, cols, what):
        if rows == 0:
            return np.zeros((0, cols))
        return np.vstack([self.numbers(cols, what) for _ in range(rows)])

    def labeled(self, rows, cols, what):
        data = self.matrix(rows, cols + 1, what)
        return data[:, 1:], data[:, 0].astype(np.int64)

    def finish(self):
        if self.pos < len(self.rows):
            lineno, _ = self.rows[self.pos]
            raise FormatError("trailing data", lineno)


def _load_kpca(r):
    n, d, k = r.ints(3, "dimensions")
    sigma, grand, scale = r.numbers(3, "kernel parameters")
    X = r.matrix(n, d, "training point")
    row_means = r.numbers(n, "kernel row means")
    eigenvalues = r.numbers(k, "eigenvalues")
    V = r.matrix(n, k, "eigenvector row")
    return KpcaModel(X, float(sigma), row_means, float(grand), eigenvalues, V, k, float(scale))


def _load_similarity(r):
    rows, cols, n_r = r.ints(3, "dimensions")
    gamma, beta, tau_hat, obj, raw, rescaled, degenerate = r.numbers(7, "parameters")
    A = r.matrix(rows, cols, "matrix row")
    X, y = r.labeled(n_r, cols, "reasonable point")
    return SimilarityModel(
        A=A, gamma=float(gamma), beta=float(beta),
        reasonable=ReasonableSet(X, y, float(tau_hat)),
        objective_value=float(obj), frobenius_norm_A=float(np.sqrt(np.sum(A * A))),
        unconstrained_objective=float(raw), rescaled=bool(rescaled), degenerate=bool(degenerate),
        solver="loaded",
    )


def _load_classifier(r):
    d_u, d, bilinear = r.ints(3, "dimensions")
    lam, objective = r.numbers(2, "parameters")
    alpha = r.numbers(d_u, "alpha")
    X, y = r.labeled(d_u, d, "landmark")
    if bilinear:
        K = SimilarityEvaluator.bilinear(r.matrix(d, d, "matrix row"))
    else:
        K = SimilarityEvaluator.cosine()
    return SparseLinearClassifier(alpha, Landmarks(X, y), K, float(lam), float(objective), "loaded")


_LOADERS = {"kpca": _load_kpca, "similarity": _load_similarity, "classifier": _load_classifier}


def loads_model(text, expected_kind=None):
    r = _Reader(text)
    lineno, header = r.tokens("header")
    if len(header) != 3 or header[0] != MAGIC:
        raise FormatError(f"expected '{MAGIC} <version> <kind>' header", lineno)
    try:
        version = int(header[1])
    except ValueError:
        raise FormatError(f"bad version {header[1]!r}", lineno) from None
    if version != VERSION:
        raise VersionError(f"unsupported model file version {version} (expected {VERSION})")
    kind = header[2]
    if kind not in _LOADERS:
        raise FormatError(f"unknown model kind {kind!r}", lineno)
    if expected_kind is not None and kind != expected_kind:
        raise FormatError(f"expected a {expected_kind} model, found {kind}", lineno)
    model = _LOADERS[kind](r)
    r.finish()
    return model


def load_model(path, expected_kind=None):
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read(), expected_kind)
