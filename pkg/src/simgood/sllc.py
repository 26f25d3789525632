"""Learning a bilinear similarity by minimizing its empirical goodness loss.

The learning problem is::

    min_A  (1/N_T) sum_i [1 - l_i x_i^T A mu / gamma]_+  +  beta ||A||_F^2

with ``mu`` the label-weighted mean of the reasonable points. Two solvers are
provided. :func:`solve_sllc_full` works on the whole ``d x d`` matrix (dual
coordinate ascent, or plain subgradient descent). :func:`solve_sllc_reduced`
uses the fact that the loss sees ``A`` only through ``w = A mu``: the minimum
norm matrix with a given ``w`` is ``w mu^T / ||mu||^2``, which turns the
problem into a ``d``-dimensional hinge-loss problem solved by a smoothing
Newton method.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .exceptions import DegenerateReasonableSet, DimensionMismatch, InvalidParameter, NoConvergence
from .goodness import ReasonableSet, bilinear_similarity, empirical_goodness, signed_mean
from .numerics import Rng, frobenius_norm, rng_shuffle

MU_EPS = 1e-12


@dataclass
class SllcConfig:
    beta: float = 1e-3
    gamma: float = 1e-1
    max_iters: int = 50000
    step_c: float = 1.0
    smoothing_mu: float = 0.0
    seed: int = 0
    tol: float = 1e-10
    normalize: bool = True

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameter("beta must be positive")
        if not self.gamma > 0:
            raise InvalidParameter("gamma must be positive")
        if not self.step_c > 0:
            raise InvalidParameter("step_c must be positive")
        if self.smoothing_mu < 0:
            raise InvalidParameter("smoothing_mu must be non-negative")
        if self.max_iters < 1:
            raise InvalidParameter("max_iters must be at least 1")


@dataclass
class SimilarityModel:
    A: np.ndarray
    gamma: float
    beta: float
    reasonable: ReasonableSet
    objective_value: float
    frobenius_norm_A: float
    unconstrained_objective: float
    rescaled: bool = False
    degenerate: bool = False
    solver: str = ""
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def dim(self):
        return self.A.shape[0]

    @property
    def exceeds_unit_norm(self):
        return self.frobenius_norm_A > 1.0 + 1e-12

    def similarity(self, X, Y):
        return bilinear_similarity(self.A, X, Y)


def _hinge(t, mu):
    """Hinge ``max(0, t)``, or its quadratic smoothing on ``0 < t < mu``."""
    if mu <= 0:
        return np.maximum(t, 0.0)
    return np.where(t <= 0, 0.0, np.where(t < mu, t * t / (2.0 * mu), t - mu / 2.0))


def _hinge_slope(t, mu):
    if mu <= 0:
        return (t > 0).astype(np.float64)
    return np.clip(t / mu, 0.0, 1.0)


def sllc_objective(A, T, R, beta, gamma, smoothing_mu=0.0):
    """Empirical goodness plus ``beta ||A||_F^2``, optionally with a smoothed hinge."""
    A = np.asarray(A, dtype=np.float64)
    mu = signed_mean(R)
    if A.shape != (T.dim, R.dim):
        raise DimensionMismatch(f"A has shape {A.shape}, data has {T.dim} features")
    t = 1.0 - T.y * (T.X @ (A @ mu)) / gamma
    return float(np.mean(_hinge(t, smoothing_mu))) + beta * float(np.sum(A * A))


def sllc_gradient(A, T, R, beta, gamma, smoothing_mu=0.0):
    """Gradient of :func:`sllc_objective` (a subgradient when ``smoothing_mu`` is 0)."""
    A = np.asarray(A, dtype=np.float64)
    mu = signed_mean(R)
    t = 1.0 - T.y * (T.X @ (A @ mu)) / gamma
    slope = _hinge_slope(t, smoothing_mu)
    coef = -(slope * T.y) / (gamma * len(T))
    return np.outer(T.X.T @ coef, mu) + 2.0 * beta * A


def _check_instance(T, R):
    if T.dim != R.dim:
        raise DimensionMismatch(f"training points have {T.dim} features, reasonable points {R.dim}")
    mu = signed_mean(R)
    norm_mu = float(np.linalg.norm(mu))
    if norm_mu <= MU_EPS:
        warnings.warn(
            f"signed mean of the reasonable points has norm {norm_mu:.3g}; "
            "the loss does not depend on A and A = 0 is returned",
            DegenerateReasonableSet,
            stacklevel=3,
        )
    return mu, norm_mu


def _finish(A, T, R, cfg, solver, iterations, history, degenerate=False):
    raw = sllc_objective(A, T, R, cfg.beta, cfg.gamma)
    norm = frobenius_norm(A)
    rescaled = False
    if cfg.normalize and norm > 1.0:
        A = A / norm
        norm = frobenius_norm(A)
        rescaled = True
    objective = sllc_objective(A, T, R, cfg.beta, cfg.gamma)
    return SimilarityModel(
        A=A,
        gamma=float(cfg.gamma),
        beta=float(cfg.beta),
        reasonable=R,
        objective_value=objective,
        frobenius_norm_A=norm,
        unconstrained_objective=raw,
        rescaled=rescaled,
        degenerate=degenerate,
        solver=solver,
        iterations=iterations,
        history=history,
    )


def _zero_model(T, R, cfg, solver):
    return _finish(np.zeros((T.dim, R.dim)), T, R, cfg, solver, 0, [], degenerate=True)


def _dual_coordinate_ascent(F, beta, max_epochs, tol, seed):
    """Dual coordinate ascent for ``min_a mean_i [1 - f_i.a]_+ + beta ||a||^2``.

    Each dual variable lives in ``[0, 1/N]`` and ``a = sum_i alpha_i f_i / (2 beta)``.
    Stops on a relative duality gap below ``tol``.
    """
    n = F.shape[0]
    upper = 1.0 / n
    q = np.einsum("ij,ij->i", F, F) / (2.0 * beta)
    alpha = np.zeros(n)
    a = np.zeros(F.shape[1])
    rng = Rng(seed)
    history = []
    gap = math.inf
    for epoch in range(1, max_epochs + 1):
        for i in rng_shuffle(rng, n):
            g = 1.0 - F[i] @ a
            if q[i] > 0:
                new = min(max(alpha[i] + g / q[i], 0.0), upper)
            else:
                new = upper
            delta = new - alpha[i]
            if delta != 0.0:
                alpha[i] = new
                a += (delta / (2.0 * beta)) * F[i]
        reg = beta * float(a @ a)
        primal = float(np.mean(np.maximum(0.0, 1.0 - F @ a))) + reg
        dual = float(alpha.sum()) - reg
        history.append(primal)
        gap = primal - dual
        if gap <= tol * max(1.0, abs(primal)):
            return a, epoch, history, gap
    return a, max_epochs, history, gap


def _subgradient_descent(T, R, cfg, window=200, min_improvement=1e-8):
    """Full-batch subgradient steps ``step_c / sqrt(t)``, keeping the best iterate."""
    A = np.zeros((T.dim, R.dim))
    best_A = A.copy()
    best = sllc_objective(A, T, R, cfg.beta, cfg.gamma, cfg.smoothing_mu)
    history = [best]
    last_checkpoint = best
    for t in range(1, cfg.max_iters + 1):
        G = sllc_gradient(A, T, R, cfg.beta, cfg.gamma, cfg.smoothing_mu)
        A = A - (cfg.step_c / math.sqrt(t)) * G
        value = sllc_objective(A, T, R, cfg.beta, cfg.gamma, cfg.smoothing_mu)
        history.append(value)
        if value < best:
            best, best_A = value, A.copy()
        if t % window == 0:
            if last_checkpoint - best < min_improvement:
                return best_A, t, history
            last_checkpoint = best
    return best_A, cfg.max_iters, history


def solve_sllc_full(T, R, cfg, method="dual"):
    """Minimize the SLLC objective over the full ``d x d`` matrix.

    ``method="dual"`` runs dual coordinate ascent with the per-point
    feature matrices ``l_i x_i mu^T / gamma`` and stops on a certified
    duality gap. ``method="subgradient"`` runs full-batch subgradient
    descent with step ``step_c / sqrt(t)``.

    When the learned matrix has Frobenius norm above one and
    ``cfg.normalize`` is set, it is rescaled to unit norm; the objective of
    the unscaled solution stays available as ``unconstrained_objective``.
    """
    mu, norm_mu = _check_instance(T, R)
    if norm_mu <= MU_EPS:
        return _zero_model(T, R, cfg, f"full-{method}")
    if method == "dual":
        F = (T.y / cfg.gamma)[:, None] * np.einsum("ni,j->nij", T.X, mu).reshape(len(T), -1)
        a, epochs, history, gap = _dual_coordinate_ascent(F, cfg.beta, cfg.max_iters, cfg.tol, cfg.seed)
        if gap > 1e-6 * max(1.0, history[-1]):
            raise NoConvergence(f"duality gap {gap:.3g} after {epochs} epochs")
        A = a.reshape(T.dim, R.dim)
        return _finish(A, T, R, cfg, "full-dual", epochs, history)
    if method == "subgradient":
        A, iters, history = _subgradient_descent(T, R, cfg)
        return _finish(A, T, R, cfg, "full-subgradient", iters, history)
    raise InvalidParameter(f"unknown method {method!r}")


def _ray_minimum(U, v, step, h, rho):
    """Exact minimizer over ``s >= 0`` of the smoothed objective along ``v + s step``.

    Along a ray the objective is convex and piecewise quadratic, so its
    derivative is monotone and piecewise linear: bracket the root, bisect,
    then finish with one exact linear solve inside the final piece.
    """
    n = U.shape[0]
    t0 = 1.0 - U @ v
    a = U @ step
    vd, dd = float(v @ step), float(step @ step)

    def slope(s):
        return -float(a @ _hinge_slope(t0 - s * a, h)) / n + 2.0 * rho * (vd + s * dd)

    if slope(0.0) >= 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(1100):
        if slope(hi) >= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if slope(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    mid = 0.5 * (lo + hi)
    t = t0 - mid * a
    band = (t > 0) & (t < h)
    curvature = float(a[band] @ a[band]) / (n * h) + 2.0 * rho * dd
    s = mid - slope(mid) / curvature if curvature > 0 else mid
    return s if lo <= s <= hi else mid


def _smoothing_newton(U, rho, max_iters, h_min=1e-10, h_start=2.0, shrink=0.1):
    """Minimize ``mean_i [1 - u_i.v]_+ + rho ||v||^2``.

    The hinge is replaced by its quadratic smoothing of width ``h``; each
    smoothed problem is piecewise quadratic and solved by Newton directions
    with exact line search, then ``h`` shrinks geometrically. The objective
    of the final iterate is within ``h_min / 2`` of the exact minimum.
    """
    n, d = U.shape
    v = np.zeros(d)
    eye = np.eye(d)
    h = h_start
    total = 0
    history = []

    def value(v, h):
        return float(np.mean(_hinge(1.0 - U @ v, h))) + rho * float(v @ v)

    while True:
        f = value(v, h)
        while True:
            t = 1.0 - U @ v
            g = -(U.T @ _hinge_slope(t, h)) / n + 2.0 * rho * v
            band = (t > 0) & (t < h)
            Ub = U[band]
            H = (Ub.T @ Ub) / (n * h) + 2.0 * rho * eye
            try:
                step = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, -g, rcond=None)[0]
            if not -float(g @ step) > 0.0:
                step = -g
            s = _ray_minimum(U, v, step, h, rho)
            if s <= 0.0:
                break
            candidate = v + s * step
            f_new = value(candidate, h)
            if not f_new < f:
                break
            converged = f - f_new <= 1e-15 * abs(f)
            v, f = candidate, f_new
            total += 1
            if converged:
                break
            if total >= max_iters:
                raise NoConvergence(f"smoothing Newton hit {max_iters} iterations at width {h:.1e}")
        history.append(value(v, 0.0))
        if h <= h_min:
            return v, total, history
        h = max(h * shrink, h_min)


def solve_sllc_reduced(T, R, cfg):
    """Solve SLLC through its ``d``-dimensional rank-one reformulation.

    With ``v = A mu / gamma`` the objective becomes
    ``mean_i [1 - l_i x_i.v]_+ + (beta gamma^2 / ||mu||^2) ||v||^2`` and the
    optimal matrix is ``A = gamma v mu^T / ||mu||^2``.
    """
    mu, norm_mu = _check_instance(T, R)
    if norm_mu <= MU_EPS:
        return _zero_model(T, R, cfg, "reduced")
    U = T.y[:, None] * T.X
    rho = cfg.beta * cfg.gamma ** 2 / norm_mu ** 2
    v, iters, history = _smoothing_newton(U, rho, cfg.max_iters)
    A = np.outer(cfg.gamma * v, mu) / norm_mu ** 2
    return _finish(A, T, R, cfg, "reduced", iters, history)


def rank_one_projection(A, R):
    """``A mu mu^T / ||mu||^2``: the smallest-norm matrix with the same ``A mu``."""
    mu = signed_mean(R)
    return np.outer(A @ mu, mu) / float(mu @ mu)


def solve_sllc(T, R, cfg, solver="reduced"):
    if solver == "reduced":
        return solve_sllc_reduced(T, R, cfg)
    if solver in ("full", "dual"):
        return solve_sllc_full(T, R, cfg, "dual")
    if solver == "subgradient":
        return solve_sllc_full(T, R, cfg, "subgradient")
    raise InvalidParameter(f"unknown solver {solver!r}")


class SLLC(TransformerMixin, BaseEstimator):
    """Bilinear similarity learned for linear classification.

    After ``fit``, :meth:`transform` maps points to their similarities with
    the training points (the empirical similarity map), so any linear model
    can be stacked on top in a pipeline.

    Parameters
    ----------
    beta : float
        Frobenius regularization weight.
    gamma : float
        Margin of the goodness criterion.
    tau_hat : float
        Fraction of training points used as reasonable points.
    solver : {"reduced", "full", "subgradient"}
    normalize : bool
        Rescale the learned matrix to unit Frobenius norm when it is larger.
    max_iter : int
    random_state : int
        Seed for the reasonable-point draw and coordinate order.
    """

    def __init__(self, beta=1e-3, gamma=1e-1, tau_hat=1.0, solver="reduced", normalize=True,
                 max_iter=50000, random_state=0):
        self.beta = beta
        self.gamma = gamma
        self.tau_hat = tau_hat
        self.solver = solver
        self.normalize = normalize
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2:
            raise InvalidParameter(f"SLLC needs exactly two classes, got {len(self.classes_)}")
        signs = np.where(y == self.classes_[1], 1, -1)
        T = Dataset(X, signs)
        R = ReasonableSet.from_dataset(T, self.tau_hat, seed=self.random_state)
        cfg = SllcConfig(beta=self.beta, gamma=self.gamma, max_iters=self.max_iter,
                         seed=self.random_state, normalize=self.normalize)
        self.model_ = solve_sllc(T, R, cfg, self.solver)
        self.A_ = self.model_.A
        self.landmarks_ = X
        self.n_features_in_ = X.shape[1]
        return self

    def similarity(self, X, Y=None):
        check_is_fitted(self, "A_")
        X = check_array(X)
        Y = self.landmarks_ if Y is None else check_array(Y)
        return bilinear_similarity(self.A_, X, Y)

    def transform(self, X):
        return self.similarity(X)

    def goodness(self, X, y):
        check_is_fitted(self, "A_")
        X, y = check_X_y(X, y)
        signs = np.where(y == self.classes_[1], 1, -1)
        return empirical_goodness(self.A_, Dataset(X, signs), self.model_.reasonable, self.gamma)
