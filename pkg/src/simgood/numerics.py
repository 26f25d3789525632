"""Dense linear algebra helpers, a Jacobi eigensolver and a portable RNG.

Matrices and vectors are plain ``numpy.ndarray`` objects of dtype float64.
"""
import math

import numpy as np

from .exceptions import InvalidParameter, NonSymmetric, NoConvergence

_MASK64 = (1 << 64) - 1


def as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidParameter(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidParameter(f"{name} contains non-finite entries")
    return M


def as_vector(v, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidParameter(f"{name} must be 1-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidParameter(f"{name} contains non-finite entries")
    return v


def frobenius_norm(M):
    M = np.asarray(M, dtype=np.float64)
    return float(math.sqrt(np.sum(M * M)))


class EigenDecomposition:
    """Eigenvalues sorted descending, eigenvectors stored as columns."""

    __slots__ = ("eigenvalues", "eigenvectors", "sweeps")

    def __init__(self, eigenvalues, eigenvectors, sweeps=0):
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors
        self.sweeps = sweeps

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def _check_symmetric(S, sym_tol):
    S = as_matrix(S, "S")
    if S.shape[0] != S.shape[1]:
        raise NonSymmetric(f"matrix is not square: {S.shape}")
    asym = np.max(np.abs(S - S.T)) if S.size else 0.0
    if asym > sym_tol:
        raise NonSymmetric(f"asymmetry {asym:.3g} exceeds {sym_tol:.3g}")
    return 0.5 * (S + S.T)


def _sorted_decomposition(w, V, sweeps):
    order = np.argsort(-w, kind="stable")
    V = V[:, order]
    # Fix the sign of each eigenvector so the result is reproducible:
    # the entry of largest magnitude is made positive.
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return EigenDecomposition(w[order], V * signs, sweeps)


def sym_eig(S, tol=1e-10, max_sweeps=100, sym_tol=1e-9):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops to
    ``tol * max(1, ||S||_F)``.
    """
    if tol <= 0:
        raise InvalidParameter("tol must be positive")
    A = _check_symmetric(S, sym_tol).copy()
    n = A.shape[0]
    V = np.eye(n)
    target = tol * max(1.0, frobenius_norm(A))

    def off_norm():
        return frobenius_norm(A - np.diag(np.diag(A)))

    sweeps = 0
    while off_norm() > target:
        if sweeps >= max_sweeps:
            raise NoConvergence(
                f"Jacobi: off-diagonal norm {off_norm():.3g} > {target:.3g} "
                f"after {max_sweeps} sweeps"
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(diff) + 1e100 * abs(apq) == abs(diff):
                    t = apq / diff  # theta would overflow; small-angle limit
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q]
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :]
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                v_p = V[:, p].copy()
                v_q = V[:, q]
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    return _sorted_decomposition(np.diag(A).copy(), V, sweeps)


def sym_eig_lapack(S, sym_tol=1e-9):
    """Same contract as :func:`sym_eig`, backed by LAPACK ``syevd``."""
    A = _check_symmetric(S, sym_tol)
    w, V = np.linalg.eigh(A)
    return _sorted_decomposition(w, V, 0)


class Rng:
    """SplitMix64 generator.

    Pure-integer state updates keep streams identical on every platform.
    """

    def __init__(self, seed=0):
        self.state = int(seed) & _MASK64

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self):
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n):
        """Unbiased integer in [0, n)."""
        if n <= 0:
            raise InvalidParameter("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            z = self.next_u64()
            if z < limit:
                return z % n

    def normal(self):
        # Box-Muller; 1 - u keeps the log argument in (0, 1].
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, size):
        return np.array([self.normal() for _ in range(size)])

    def uniforms(self, size):
        return np.array([self.uniform() for _ in range(size)])

    def spawn(self, index):
        """Independent child generator keyed by ``index``."""
        child = Rng(self.state ^ ((int(index) * 0xD1B54A32D192ED03) & _MASK64))
        child.next_u64()
        return Rng(child.next_u64())


def rng_shuffle(rng, n):
    """Fisher-Yates permutation of ``range(n)``."""
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)
