"""Goodness of a bilinear similarity in hinge loss, and the stability bound."""
import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledPoint
from .exceptions import DimensionMismatch, InvalidParameter
from .numerics import Rng, rng_shuffle


@dataclass
class ReasonableSet:
    """Reference points against which average similarities are taken."""

    X: np.ndarray
    y: np.ndarray
    tau_hat: float = 1.0

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if self.X.shape[0] == 0:
            raise InvalidParameter("reasonable set must not be empty")
        if self.y.shape[0] != self.X.shape[0]:
            raise DimensionMismatch("reasonable points and labels differ in length")
        if not 0.0 < self.tau_hat <= 1.0:
            raise InvalidParameter("tau_hat must lie in (0, 1]")

    def __len__(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def points(self):
        return [LabeledPoint(x, int(l)) for x, l in zip(self.X, self.y)]

    @classmethod
    def from_dataset(cls, train, tau_hat=1.0, seed=0):
        """Draw ``round(tau_hat * N_T)`` reasonable points from ``train``.

        ``tau_hat = 1`` uses the whole training set; otherwise the subset is
        a seeded random draw and ``tau_hat`` is recomputed from its size.
        """
        n = len(train)
        if not 0.0 < tau_hat <= 1.0:
            raise InvalidParameter("tau_hat must lie in (0, 1]")
        if tau_hat == 1.0:
            return cls(train.X.copy(), train.y.copy(), 1.0)
        size = max(1, int(round(tau_hat * n)))
        idx = np.sort(rng_shuffle(Rng(seed), n)[:size])
        return cls(train.X[idx], train.y[idx], size / n)


def signed_mean(R):
    """``(1 / N_R) * sum_k l_k x_k`` over the reasonable points."""
    return (R.y[:, None] * R.X).mean(axis=0)


def bilinear_similarity(A, X, Y):
    """Matrix of ``x^T A y`` for every row ``x`` of ``X`` and ``y`` of ``Y``."""
    A = np.asarray(A, dtype=np.float64)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if A.shape != (X.shape[1], Y.shape[1]):
        raise DimensionMismatch(f"A has shape {A.shape}, inputs have {X.shape[1]} and {Y.shape[1]} features")
    return X @ A @ Y.T


def margin_terms(A, X, y, R, gamma):
    """``l_i g(x_i) / gamma`` where ``g`` averages signed similarities to ``R``."""
    A = np.asarray(A, dtype=np.float64)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if A.shape != (X.shape[1], R.dim):
        raise DimensionMismatch(f"A has shape {A.shape}, points have {X.shape[1]} features, R has {R.dim}")
    return np.asarray(y) * (X @ (A @ signed_mean(R))) / gamma


def v_loss(A, z, R, gamma):
    """Hinge goodness loss of ``K_A`` at one labeled point ``z``."""
    if gamma <= 0:
        raise InvalidParameter("gamma must be positive")
    x, label = z
    x = np.asarray(x, dtype=np.float64)
    m = margin_terms(A, x[None, :], np.array([label]), R, gamma)[0]
    return max(0.0, 1.0 - float(m))


@dataclass
class GoodnessReport:
    epsilon_hat: float
    violation_rate: float
    gamma: float
    tau_hat: float

    @property
    def epsilon_normalized(self):
        """Loss rescaled into [0, 1] by the constant ``1 + 1/gamma``."""
        return self.epsilon_hat / (1.0 + 1.0 / self.gamma)


def empirical_goodness(A, T, R, gamma):
    if gamma <= 0:
        raise InvalidParameter("gamma must be positive")
    m = margin_terms(A, T.X, T.y, R, gamma)
    losses = np.maximum(0.0, 1.0 - m)
    return GoodnessReport(
        epsilon_hat=float(np.mean(losses)),
        violation_rate=float(np.mean(m < 0)),
        gamma=float(gamma),
        tau_hat=float(R.tau_hat),
    )


@dataclass
class BoundReport:
    kappa: float
    bound_value: float
    delta: float
    n_train: int
    epsilon_T_normalized: float
    beta: float
    gamma: float
    tau_hat: float


def stability_constant(beta, gamma, tau_hat):
    return (tau_hat + 2.0 * beta * gamma) / (tau_hat * beta * gamma * gamma)


def stability_bound(epsilon_T_normalized, n_train, beta, gamma, tau_hat, delta):
    """Generalization bound on the goodness loss from uniform stability.

    ``epsilon_T_normalized`` must be the empirical goodness divided by
    ``1 + 1/gamma`` so the loss is bounded by one.
    """
    for name, value in (("beta", beta), ("gamma", gamma), ("tau_hat", tau_hat)):
        if not value > 0:
            raise InvalidParameter(f"{name} must be positive, got {value}")
    if tau_hat > 1:
        raise InvalidParameter("tau_hat must not exceed 1")
    if not 0.0 < delta < 1.0:
        raise InvalidParameter("delta must lie in (0, 1)")
    if int(n_train) != n_train or n_train < 2:
        raise InvalidParameter("n_train must be an integer greater than 1")
    if not 0.0 <= epsilon_T_normalized <= 1.0:
        raise InvalidParameter("epsilon_T_normalized must lie in [0, 1]")
    kappa = stability_constant(beta, gamma, tau_hat)
    n = int(n_train)
    bound = (
        epsilon_T_normalized
        + kappa / n
        + (2.0 * kappa + 1.0) * math.sqrt(math.log(1.0 / delta) / (2.0 * n))
    )
    return BoundReport(kappa, bound, delta, n, epsilon_T_normalized, beta, gamma, tau_hat)
