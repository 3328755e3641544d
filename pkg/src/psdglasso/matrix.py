"""Dense symmetric matrices, Jacobi eigendecomposition and definiteness tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_REL_TOL = 1e-10
MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-14

POSITIVE_DEFINITE = "PositiveDefinite"
ONLY_PSD = "OnlyPositiveSemidefinite"
INDEFINITE = "Indefinite"


class ConvergenceError(RuntimeError):
    pass


class IndefiniteMatrixError(ValueError):
    pass


class SymMatrix:
    """Immutable symmetric matrix.

    Only the lower triangle of the input is read; the upper triangle is a
    mirror, so ``entry(i, j) == entry(j, i)`` holds bit for bit.  Pass
    ``check=False`` to skip the asymmetry check on the input.
    """

    __slots__ = ("_a",)

    def __init__(self, data, check: bool = True):
        a = np.array(data, dtype=float, copy=True)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if check:
            scale = max(1.0, float(np.max(np.abs(a))))
            if np.max(np.abs(a - a.T)) > 1e-10 * scale:
                raise ValueError("matrix is not symmetric")
        low = np.tril(a)
        a = low + np.tril(a, -1).T
        a.setflags(write=False)
        self._a = a

    @classmethod
    def symmetrized(cls, data) -> "SymMatrix":
        a = np.asarray(data, dtype=float)
        with np.errstate(over="ignore"):
            total = a + a.T
        # halve first only where the sum overflows, so finite inputs stay exact
        sym = np.where(np.isfinite(total), total / 2, a / 2 + a.T / 2)
        return cls(sym, check=False)

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._a

    def entry(self, i: int, j: int) -> float:
        return float(self._a[i, j])

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a
        return self._a.astype(dtype)

    def __repr__(self):
        return f"SymMatrix({self._a.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return np.array_equal(self._a, other._a)

    __hash__ = None


def as_array(a) -> np.ndarray:
    if isinstance(a, SymMatrix):
        return a.array
    a = np.asarray(a, dtype=float)
    # a bare scalar is a 1x1 matrix
    return a.reshape(1, 1) if a.ndim == 0 else a


def as_sym(a) -> SymMatrix:
    return a if isinstance(a, SymMatrix) else SymMatrix(a)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending; ``vectors[:, i]`` pairs with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class DefinitenessClass:
    tag: str
    zero_eigen_count: int

    @property
    def is_psd(self) -> bool:
        return self.tag != INDEFINITE


def _rotate(a, v, p, q):
    apq = a[p, q]
    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    cp = a[:, p].copy()
    cq = a[:, q]
    a[:, p] = c * cp - s * cq
    a[:, q] = s * cp + c * cq
    rp = a[p, :].copy()
    rq = a[q, :]
    a[p, :] = c * rp - s * rq
    a[q, :] = s * rp + c * rq
    a[p, q] = a[q, p] = 0.0

    vp = v[:, p].copy()
    vq = v[:, q]
    v[:, p] = c * vp - s * vq
    v[:, q] = s * vp + c * vq


def _fix_signs(vectors):
    for i in range(vectors.shape[1]):
        col = vectors[:, i]
        mags = np.abs(col)
        # first index within rounding of the max, so ties resolve by position
        k = int(np.argmax(mags >= mags.max() - 1e-12))
        if col[k] < 0:
            vectors[:, i] = -col
    return vectors


def eigendecompose(A, max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps run in row order over the strict upper triangle until the
    off-diagonal Frobenius norm drops to ``1e-14 * ||A||_F``.  Each
    eigenvector is signed so that its largest-magnitude component is
    positive (first such component on ties).

    Raises ConvergenceError after ``max_sweeps`` sweeps.
    """
    a = np.array(as_array(A), dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    thresh = OFFDIAG_TOL * np.linalg.norm(a)

    for _ in range(max_sweeps + 1):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _rotate(a, v, p, q)
    else:
        raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = _fix_signs(v[:, order])
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenDecomposition(values, vectors)


def zero_threshold(values, rel_tol: float = DEFAULT_REL_TOL) -> float:
    return rel_tol * max(1.0, float(np.max(values)))


def classify_definiteness(E: EigenDecomposition, rel_tol: float = DEFAULT_REL_TOL) -> DefinitenessClass:
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    values = np.asarray(E.values)
    thr = zero_threshold(values, rel_tol)
    n_zero = int(np.sum(np.abs(values) <= thr))
    if np.any(values < -thr):
        return DefinitenessClass(INDEFINITE, n_zero)
    if n_zero == 0:
        return DefinitenessClass(POSITIVE_DEFINITE, 0)
    return DefinitenessClass(ONLY_PSD, n_zero)


def null_space(E: EigenDecomposition, rel_tol: float = DEFAULT_REL_TOL) -> list[np.ndarray]:
    """Eigenvectors whose eigenvalues count as zero (empty for PD input)."""
    if classify_definiteness(E, rel_tol).tag == INDEFINITE:
        raise IndefiniteMatrixError("null space requested for an indefinite matrix")
    thr = zero_threshold(E.values, rel_tol)
    return [E.vectors[:, i].copy() for i in range(E.dim) if abs(E.values[i]) <= thr]


def null_indices(E: EigenDecomposition, rel_tol: float = DEFAULT_REL_TOL) -> list[int]:
    thr = zero_threshold(E.values, rel_tol)
    return [i for i in range(E.dim) if abs(E.values[i]) <= thr]


def cholesky_pd_check(A) -> bool:
    a = as_array(A)
    if not np.all(np.isfinite(a)):
        return False
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(L) > 0))
