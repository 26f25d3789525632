"""Gaussian kernel PCA used to map data into a space where a bilinear similarity is learned."""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial.distance import cdist, pdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import Dataset
from .exceptions import DegenerateData, DimensionMismatch, InvalidParameter
from .numerics import sym_eig, sym_eig_lapack

ZERO_EIGENVALUE_RATIO = 1e-12
# Above this size the pure-Python Jacobi sweeps get slow; LAPACK takes over.
JACOBI_MAX_SIZE = 100


def _features(data):
    if isinstance(data, Dataset):
        return data.X
    return np.asarray(data, dtype=np.float64)


def gaussian_kernel(x, x_prime, sigma):
    """``exp(-||x - x'||^2 / (2 sigma^2))``."""
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    if x.shape != x_prime.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {x_prime.shape} differ")
    if sigma <= 0:
        raise InvalidParameter("sigma must be positive")
    diff = x - x_prime
    return math.exp(-float(diff @ diff) / (2.0 * sigma * sigma))


def gaussian_gram(X, Y, sigma):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"dimensions {X.shape[1]} and {Y.shape[1]} differ")
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma * sigma))


def sigma_heuristic(train):
    """Mean Euclidean distance over all unordered pairs of training points."""
    X = _features(train)
    if X.shape[0] < 2:
        raise DegenerateData("need at least two points to estimate sigma")
    sigma = float(np.mean(pdist(X)))
    if sigma < 1e-12:
        raise DegenerateData("all training points coincide")
    return sigma


def default_n_components(d, multiplier=None, low_dim_cutoff=5):
    """Retained KPCA dimension: ``4 d`` when ``d < low_dim_cutoff``, else ``3 d``.

    An explicit ``multiplier`` overrides the rule.
    """
    if multiplier is not None:
        return max(1, int(round(multiplier * d)))
    return 4 * d if d < low_dim_cutoff else 3 * d


def center_gram(K):
    row_means = K.mean(axis=0)
    grand = float(row_means.mean())
    Kc = K - row_means[None, :] - row_means[:, None] + grand
    return Kc, row_means, grand


@dataclass
class KpcaModel:
    training_points: np.ndarray
    sigma: float
    kernel_row_means: np.ndarray
    kernel_grand_mean: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_components: int
    norm_scale: float

    @property
    def input_dim(self):
        return self.training_points.shape[1]

    @cached_property
    def training_projection(self):
        return kpca_project(self, self.training_points)


def _eigensolve(Kc, eigensolver):
    if eigensolver == "auto":
        eigensolver = "jacobi" if Kc.shape[0] <= JACOBI_MAX_SIZE else "lapack"
    if eigensolver == "jacobi":
        return sym_eig(Kc)
    if eigensolver == "lapack":
        return sym_eig_lapack(Kc)
    raise InvalidParameter(f"unknown eigensolver {eigensolver!r}")


def kpca_fit(train, n_components, sigma=None, eigensolver="auto"):
    """Fit Gaussian KPCA on ``train`` keeping at most ``n_components`` directions.

    Eigenvalues below ``1e-12 * max eigenvalue`` are discarded, so the number
    of components is silently capped at the numerical rank of the centered
    kernel matrix.
    """
    if n_components < 1:
        raise InvalidParameter("n_components must be at least 1")
    X = np.array(_features(train), dtype=np.float64)
    if sigma is None:
        sigma = sigma_heuristic(X)
    elif sigma <= 0:
        raise InvalidParameter("sigma must be positive")
    Kc, row_means, grand = center_gram(gaussian_gram(X, X, sigma))
    eig = _eigensolve(Kc, eigensolver)
    lam = eig.eigenvalues
    if lam.size == 0 or lam[0] <= 0:
        raise DegenerateData("centered kernel matrix has no positive eigenvalue")
    keep = int(np.sum(lam > ZERO_EIGENVALUE_RATIO * lam[0]))
    r = min(int(n_components), keep)
    model = KpcaModel(
        training_points=X,
        sigma=float(sigma),
        kernel_row_means=row_means,
        kernel_grand_mean=grand,
        eigenvalues=lam[:r].copy(),
        eigenvectors=eig.eigenvectors[:, :r].copy(),
        n_components=r,
        norm_scale=1.0,
    )
    raw = kpca_project_raw(model, X)
    scale = float(np.max(np.linalg.norm(raw, axis=1)))
    if scale <= 0:
        raise DegenerateData("all training projections are zero")
    model.norm_scale = scale
    return model


def _centered_kernel(m, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != m.input_dim:
        raise DimensionMismatch(f"model expects {m.input_dim} features, got {X.shape[1]}")
    k = gaussian_gram(X, m.training_points, m.sigma)
    return k - k.mean(axis=1, keepdims=True) - m.kernel_row_means[None, :] + m.kernel_grand_mean


def kpca_project_raw(m, X):
    """Coordinates on the retained components before any norm rescaling."""
    return _centered_kernel(m, X) @ (m.eigenvectors / np.sqrt(m.eigenvalues))


def kpca_project(m, X):
    """Project ``X`` (one point or a matrix of points) and bring norms into [0, 1].

    Coordinates are divided by the largest training norm; out-of-sample
    points still longer than 1 are shrunk onto the unit sphere.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    Z = kpca_project_raw(m, X) / m.norm_scale
    norms = np.linalg.norm(Z, axis=1)
    too_long = norms > 1.0
    Z[too_long] /= norms[too_long, None]
    return Z[0] if single else Z


class GaussianKPCA(TransformerMixin, BaseEstimator):
    """Kernel PCA with a Gaussian kernel and unit-bounded outputs.

    Parameters
    ----------
    n_components : int or None
        Retained dimension. ``None`` applies :func:`default_n_components`
        with ``multiplier``.
    sigma : float or None
        Kernel width; ``None`` uses the mean pairwise training distance.
    multiplier : float or None
        Retain ``multiplier * n_features`` components when ``n_components``
        is not given.
    eigensolver : {"auto", "jacobi", "lapack"}
    """

    def __init__(self, n_components=None, sigma=None, multiplier=None, eigensolver="auto"):
        self.n_components = n_components
        self.sigma = sigma
        self.multiplier = multiplier
        self.eigensolver = eigensolver

    def fit(self, X, y=None):
        X = check_array(X)
        n_components = self.n_components
        if n_components is None:
            n_components = default_n_components(X.shape[1], self.multiplier)
        self.model_ = kpca_fit(X, n_components, self.sigma, self.eigensolver)
        self.n_features_in_ = X.shape[1]
        self.n_components_ = self.model_.n_components
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return kpca_project(self.model_, check_array(X))
