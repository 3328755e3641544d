"""Gaussian log-likelihood and penalised objectives, in direct and eigen form."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import as_array
from .penalties import PenaltySpec


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveValue:
    loglik: float
    penalty: float
    total: float

    def to_dict(self) -> dict:
        return {"loglik": self.loglik, "penalty": self.penalty, "total": self.total}


def logdet_pd(theta) -> float:
    t = as_array(theta)
    try:
        L = np.linalg.cholesky(t)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("theta is not positive definite") from None
    d = np.diag(L)
    if not np.all(d > 0):
        raise NotPositiveDefiniteError("theta is not positive definite")
    return 2.0 * float(np.sum(np.log(d)))


def log_likelihood(theta, S) -> float:
    """log det(theta) - tr(S theta), with the log-determinant from Cholesky."""
    t = as_array(theta)
    s = as_array(S)
    if t.shape != s.shape:
        raise ValueError(f"dimension mismatch: theta {t.shape} vs S {s.shape}")
    return logdet_pd(t) - float(np.sum(s * t))


def log_likelihood_eigen(sigma, W, lam, V, orth_tol: float = 1e-8) -> float:
    """Log-likelihood written through eigenpairs of theta (sigma, W) and S (lam, V).

    Columns of ``W`` and ``V`` are the eigenvectors.  Evaluates
    sum_i log(sigma_i) - sigma_i * sum_j lam_j (w_i . v_j)^2.
    """
    sigma = np.asarray(sigma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    W = np.asarray(W, dtype=float)
    V = np.asarray(V, dtype=float)
    if np.any(sigma <= 0):
        raise NotPositiveDefiniteError("all sigma_i must be positive")
    eye = np.eye(len(sigma))
    for name, F in (("W", W), ("V", V)):
        if np.max(np.abs(F.T @ F - eye)) > orth_tol:
            raise ValueError(f"{name} is not orthonormal")
    overlap = (W.T @ V) ** 2
    return float(np.sum(np.log(sigma) - sigma * (overlap @ lam)))


def penalty_value(theta, spec: PenaltySpec) -> float:
    return spec.value(as_array(theta))


def objective(theta, S, spec: PenaltySpec) -> ObjectiveValue:
    ll = log_likelihood(theta, S)
    pen = penalty_value(theta, spec)
    return ObjectiveValue(ll, pen, ll - pen)
