"""Sparse linear classifiers over an empirical similarity map, and similarity k-NN."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .exceptions import DimensionMismatch, InvalidK, InvalidParameter, NoConvergence
from .sllc import SLLC

SPARSITY_THRESHOLD = 1e-10


@dataclass
class SimilarityEvaluator:
    """``bilinear`` computes ``x^T A x'``; ``cosine`` is the normalized dot product."""

    kind: str = "cosine"
    A: np.ndarray = None

    def __post_init__(self):
        if self.kind == "bilinear":
            if self.A is None:
                raise InvalidParameter("bilinear similarity needs a matrix A")
            self.A = np.asarray(self.A, dtype=np.float64)
        elif self.kind != "cosine":
            raise InvalidParameter(f"unknown similarity kind {self.kind!r}")

    @classmethod
    def bilinear(cls, A):
        return cls("bilinear", A)

    @classmethod
    def cosine(cls):
        return cls("cosine")

    def matrix(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if self.kind == "bilinear":
            if self.A.shape != (X.shape[1], Y.shape[1]):
                raise DimensionMismatch(
                    f"A has shape {self.A.shape}, inputs have {X.shape[1]} and {Y.shape[1]} features"
                )
            return X @ self.A @ Y.T
        if X.shape[1] != Y.shape[1]:
            raise DimensionMismatch(f"dimensions {X.shape[1]} and {Y.shape[1]} differ")
        return _unit_rows(X) @ _unit_rows(Y).T

    def __call__(self, x, x_prime):
        return float(self.matrix(x, x_prime)[0, 0])


def _unit_rows(X):
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


@dataclass
class Landmarks:
    X: np.ndarray
    y: np.ndarray = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        if self.X.shape[0] == 0:
            raise InvalidParameter("at least one landmark is required")

    def __len__(self):
        return self.X.shape[0]

    @classmethod
    def from_dataset(cls, ds):
        return cls(ds.X.copy(), ds.y.copy())


def similarity_map(K, L, x):
    """Similarities of ``x`` (a point or a matrix of points) to every landmark."""
    x = np.asarray(x, dtype=np.float64)
    phi = K.matrix(x, L.X)
    return phi[0] if x.ndim == 1 else phi


@dataclass
class SparseLinearClassifier:
    alpha: np.ndarray
    landmarks: Landmarks
    similarity: SimilarityEvaluator
    lam: float
    objective: float = math.nan
    method: str = ""
    iterations: int = 0

    @property
    def sparsity(self):
        return int(np.count_nonzero(np.abs(self.alpha) > SPARSITY_THRESHOLD))

    @property
    def support(self):
        return np.flatnonzero(np.abs(self.alpha) > SPARSITY_THRESHOLD)

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        idx = self.support
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if idx.size == 0:
            if self.similarity.kind == "bilinear" and X2.shape[1] != self.similarity.A.shape[0]:
                raise DimensionMismatch("query dimension does not match the similarity")
            scores = np.zeros(X2.shape[0])
        else:
            scores = self.similarity.matrix(X2, self.landmarks.X[idx]) @ self.alpha[idx]
        return scores[0] if single else scores


def l1_objective(alpha, M, lam):
    """``sum_i [1 - (M alpha)_i]_+ + lam ||alpha||_1`` with ``M_ij = l_i K(x_i, x'_j)``."""
    return float(np.sum(np.maximum(0.0, 1.0 - M @ alpha)) + lam * np.sum(np.abs(alpha)))


def _restricted_lp(M_S, lam):
    n, k = M_S.shape
    # variables: slacks xi (n), positive parts p (k), negative parts q (k)
    c = np.concatenate([np.ones(n), np.full(2 * k, lam)])
    A_ub = np.hstack([-np.eye(n), -M_S, M_S])
    res = linprog(c, A_ub=A_ub, b_ub=-np.ones(n), bounds=(0, None), method="highs")
    if res.status != 0:
        raise NoConvergence(f"LP solver failed: {res.message}")
    x = res.x
    return x[n:n + k] - x[n + k:], -res.ineqlin.marginals


def _solve_lp(M, lam, max_rounds, batch=10):
    """Column generation: grow the set of landmarks until no reduced cost is negative."""
    n, m = M.shape
    alpha = np.zeros(m)
    # at alpha = 0 every hinge is active, so the dual is all ones
    scores = np.abs(M.sum(axis=0))
    tol = 1e-9 * max(1.0, lam)
    if scores.max() <= lam + tol:
        return alpha, 0
    active = [int(j) for j in np.argsort(-scores, kind="stable")[:batch]]
    for rounds in range(1, max_rounds + 1):
        coef, u = _restricted_lp(M[:, active], lam)
        reduced = np.abs(M.T @ u) - lam
        reduced[active] = -np.inf
        entering = np.flatnonzero(reduced > tol)
        if entering.size == 0:
            alpha[active] = coef
            return alpha, rounds
        best = entering[np.argsort(-reduced[entering], kind="stable")[:batch]]
        active.extend(int(j) for j in best)
    raise NoConvergence(f"column generation did not settle in {max_rounds} rounds")


def _soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _solve_subgradient(M, lam, max_iters, step_c=1.0, window=200, min_improvement=1e-8):
    """Proximal subgradient: hinge subgradient step, then soft-thresholding."""
    n, m = M.shape
    scale = step_c / max(np.linalg.norm(M), 1e-300)
    alpha = np.zeros(m)
    best_alpha = alpha.copy()
    best = l1_objective(alpha, M, lam)
    history = [best]
    checkpoint = best
    for t in range(1, max_iters + 1):
        active = (1.0 - M @ alpha) > 0
        g = -M[active].sum(axis=0)
        eta = scale / math.sqrt(t)
        alpha = _soft_threshold(alpha - eta * g, lam * eta)
        value = l1_objective(alpha, M, lam)
        history.append(value)
        if value < best:
            best, best_alpha = value, alpha.copy()
        if t % window == 0:
            if checkpoint - best < min_improvement * max(1.0, best):
                return best_alpha, t, history
            checkpoint = best
    return best_alpha, max_iters, history


def signed_similarity_matrix(K, L, train):
    return train.y[:, None] * K.matrix(train.X, L.X)


def train_l1_classifier(K, L, train, lam, max_iters=50000, method="lp", M=None):
    """Fit ``alpha`` for the L1-regularized hinge problem over the similarity map.

    ``method="lp"`` solves the problem exactly as a linear program by column
    generation, which returns vertex solutions with exact zeros.
    ``method="subgradient"`` runs proximal subgradient steps ``step / sqrt(t)``.
    Entries below ``1e-10`` in magnitude are zeroed afterwards.

    ``M`` may pass a precomputed ``l_i K(x_i, x'_j)`` matrix.
    """
    if lam < 0:
        raise InvalidParameter("lambda must be non-negative")
    if M is None:
        M = signed_similarity_matrix(K, L, train)
    if method == "lp":
        alpha, iterations = _solve_lp(M, lam, max_rounds=max_iters)
    elif method == "subgradient":
        alpha, iterations, _ = _solve_subgradient(M, lam, max_iters)
    else:
        raise InvalidParameter(f"unknown method {method!r}")
    alpha = np.where(np.abs(alpha) > SPARSITY_THRESHOLD, alpha, 0.0)
    return SparseLinearClassifier(alpha, L, K, float(lam), l1_objective(alpha, M, lam), method, iterations)


def predict(c, x):
    """Sign of the weighted similarity to the landmarks; a zero score maps to +1."""
    scores = c.decision_function(x)
    return np.where(np.asarray(scores) >= 0, 1, -1) if np.ndim(scores) else (1 if scores >= 0 else -1)


def knn_predict(K, train, x, k=3):
    """Majority label of the ``k`` training points most similar to ``x``.

    Equal similarities are ordered by training index.
    """
    n = len(train)
    if k < 1 or k > n or k % 2 == 0:
        raise InvalidK(f"k must be odd and between 1 and {n}, got {k}")
    x = np.asarray(x, dtype=np.float64)
    sims = K.matrix(np.atleast_2d(x), train.X)
    order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
    votes = train.y[order].sum(axis=1)
    labels = np.where(votes > 0, 1, -1)
    return int(labels[0]) if x.ndim == 1 else labels


def accuracy(y_true, y_pred):
    return 100.0 * float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def _signs(y, classes):
    return np.where(y == classes[1], 1, -1)


class SimilarityLinearClassifier(ClassifierMixin, BaseEstimator):
    """L1-regularized hinge classifier on the similarity map to the training points.

    Parameters
    ----------
    A : array of shape (d, d) or None
        Bilinear similarity matrix; ``None`` uses cosine similarity.
    lam : float
        L1 penalty on the landmark weights.
    solver : {"lp", "subgradient"}
    max_iter : int
    """

    def __init__(self, A=None, lam=1.0, solver="lp", max_iter=50000):
        self.A = A
        self.lam = lam
        self.solver = solver
        self.max_iter = max_iter

    def _evaluator(self):
        return SimilarityEvaluator.cosine() if self.A is None else SimilarityEvaluator.bilinear(self.A)

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise InvalidParameter("binary classification only")
        ds = Dataset(X, _signs(y, self.classes_))
        self.model_ = train_l1_classifier(
            self._evaluator(), Landmarks.from_dataset(ds), ds, self.lam, self.max_iter, self.solver
        )
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def sparsity_(self):
        return self.model_.sparsity

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.decision_function(check_array(X))

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.where(scores >= 0, 1, 0)]


class SimilarityKNNClassifier(ClassifierMixin, BaseEstimator):
    """k-NN voting on the ``k`` most similar training points."""

    def __init__(self, A=None, k=3):
        self.A = A
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise InvalidParameter("binary classification only")
        self.train_ = Dataset(X, _signs(y, self.classes_))
        if self.k > len(self.train_) or self.k % 2 == 0 or self.k < 1:
            raise InvalidK(f"k must be odd and at most {len(self.train_)}")
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "train_")
        K = SimilarityEvaluator.cosine() if self.A is None else SimilarityEvaluator.bilinear(self.A)
        labels = knn_predict(K, self.train_, check_array(X), self.k)
        return self.classes_[np.where(labels > 0, 1, 0)]


class SLLCClassifier(ClassifierMixin, BaseEstimator):
    """Learn a bilinear similarity with SLLC, then fit the sparse linear classifier on it."""

    def __init__(self, beta=1e-3, gamma=1e-1, lam=1.0, tau_hat=1.0, sllc_solver="reduced",
                 solver="lp", random_state=0):
        self.beta = beta
        self.gamma = gamma
        self.lam = lam
        self.tau_hat = tau_hat
        self.sllc_solver = sllc_solver
        self.solver = solver
        self.random_state = random_state

    def fit(self, X, y):
        self.sllc_ = SLLC(beta=self.beta, gamma=self.gamma, tau_hat=self.tau_hat, solver=self.sllc_solver,
                          random_state=self.random_state).fit(X, y)
        self.linear_ = SimilarityLinearClassifier(self.sllc_.A_, self.lam, self.solver).fit(X, y)
        self.classes_ = self.linear_.classes_
        self.n_features_in_ = self.sllc_.n_features_in_
        return self

    @property
    def sparsity_(self):
        return self.linear_.sparsity_

    def decision_function(self, X):
        check_is_fitted(self, "linear_")
        return self.linear_.decision_function(X)

    def predict(self, X):
        check_is_fitted(self, "linear_")
        return self.linear_.predict(X)
