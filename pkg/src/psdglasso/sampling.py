"""Gaussian samples, sample covariance matrices and Monte Carlo existence studies.

Sample covariances use divisor n.  Each replicate draws from its own
generator seeded by the study seed and the replicate index (and n, in
existence studies), so results do not depend on the number of worker threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .existence import EXISTS, decide_existence, zero_diagonal_indices
from .matrix import SymMatrix, classify_definiteness, eigendecompose
from .penalties import PenaltySpec


@dataclass(frozen=True)
class GaussianModel:
    p: int
    mu: np.ndarray
    theta_true: SymMatrix
    mean_known: bool = False

    def __post_init__(self):
        try:
            np.linalg.cholesky(self.theta_true.array)
        except np.linalg.LinAlgError:
            raise ValueError("theta_true must be positive definite") from None
        if self.theta_true.dim != self.p or len(self.mu) != self.p:
            raise ValueError("mu and theta_true must have dimension p")

    @classmethod
    def standard(cls, p: int, mean_known: bool = False) -> "GaussianModel":
        return cls(p, np.zeros(p), SymMatrix(np.eye(p)), mean_known)

    def theoretical_zero_count(self, n: int) -> int:
        rank = n if self.mean_known else n - 1
        return max(self.p - rank, 0)


@dataclass(frozen=True)
class CovarianceReport:
    S: SymMatrix
    n: int
    zero_eigen_count: int
    diag_nonzero: bool


def draw(model: GaussianModel, n: int, rng: np.random.Generator) -> np.ndarray:
    cov = np.linalg.inv(model.theta_true.array)
    L = np.linalg.cholesky((cov + cov.T) / 2)
    Z = rng.standard_normal((n, model.p))
    return np.asarray(model.mu) + Z @ L.T


def covariance_from_data(X, center) -> SymMatrix:
    Xc = np.asarray(X) - center
    return SymMatrix.symmetrized(Xc.T @ Xc / Xc.shape[0])


def sample_covariance(model: GaussianModel, n: int, seed) -> CovarianceReport:
    """Sample covariance of ``n`` draws, centred at mu (known) or the sample mean."""
    if n < 1:
        raise ValueError("n must be at least 1")
    X = draw(model, n, np.random.default_rng(seed))
    center = np.asarray(model.mu) if model.mean_known else X.mean(axis=0)
    S = covariance_from_data(X, center)
    cls = classify_definiteness(eigendecompose(S))
    return CovarianceReport(S, n, cls.zero_eigen_count, not zero_diagonal_indices(S))


def n_workers() -> int:
    env = os.environ.get("PSDGLASSO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def rank_census(model: GaussianModel, n: int, replicates: int, seed: int,
                workers: int | None = None) -> dict:
    """Fraction of replicates whose zero-eigenvalue count matches theory and
    whose diagonal is entirely non-zero."""
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    expected = model.theoretical_zero_count(n)
    reports = _map(lambda i: sample_covariance(model, n, [seed, i]), range(replicates),
                   workers or n_workers())
    hits = sum(r.zero_eigen_count == expected and r.diag_nonzero for r in reports)
    return {
        "fraction_matching_theory": hits / replicates,
        "expected_zero_eigen_count": expected,
        "zero_eigen_counts": [r.zero_eigen_count for r in reports],
    }


def existence_study(model: GaussianModel, n_grid, spec: PenaltySpec, replicates: int,
                    seed: int, workers: int | None = None) -> list[dict]:
    """Existence rate of the penalised estimate for each sample size in ``n_grid``."""
    workers = workers or n_workers()
    rows = []
    for n in n_grid:
        def one(i, n=n):
            rep = sample_covariance(model, n, [seed, n, i])
            return decide_existence(rep.S, spec).tag == EXISTS, rep.zero_eigen_count

        out = _map(one, range(replicates), workers)
        rows.append({
            "n": int(n),
            "replicates": replicates,
            "exists_rate": sum(e for e, _ in out) / replicates,
            "mean_zero_eigen_count": float(np.mean([z for _, z in out])),
        })
    return rows
