"""Proximal-gradient maximiser of the penalised Gaussian likelihood.

Each iteration takes a gradient step on log det(theta) - tr(S theta), applies
the entrywise proximal map of the penalty, and backtracks until the iterate
is positive definite and the objective does not fall.  Steps are accelerated
by extrapolation, with a restart whenever the extrapolated step fails.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .matrix import SymMatrix, as_array
from .objective import ObjectiveValue, objective
from .penalties import L1, PenaltySpec

ARMIJO = 1e-4


class UnsupportedPenaltyError(TypeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 10000
    rel_obj_tol: float = 1e-10
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    eigen_cap: float | None = None
    # max-norm of the prox-gradient map (theta_new - theta) / step at exit
    step_tol: float = 1e-9

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        for name in ("rel_obj_tol", "step_init", "step_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.eigen_cap is not None and not self.eigen_cap > 0:
            raise ValueError("eigen_cap must be positive")


@dataclass(frozen=True)
class Estimate:
    theta: SymMatrix
    objective: ObjectiveValue
    iterations: int
    converged: bool
    kkt_residual: float
    history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.array.tolist(),
            "objective": self.objective.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "kkt_residual": self.kkt_residual,
        }


def initial_theta(S, spec: PenaltySpec) -> np.ndarray:
    s = as_array(S)
    d = np.diag(s)
    if isinstance(spec.diagonal, L1):
        shift = spec.diagonal.rho
    else:
        shift = 1e-3 * float(d.max()) if d.max() > 0 else 1e-3
    return np.diag(1.0 / (d + shift))


def _clip_eigs(theta, cap):
    w, U = np.linalg.eigh(theta)
    if w[-1] <= cap:
        return theta
    out = (U * np.minimum(w, cap)) @ U.T
    return (out + out.T) / 2


def _evaluate(theta, s, spec):
    """Total objective and inverse of theta, or None when theta is not PD."""
    if not np.all(np.isfinite(theta)):
        return None
    try:
        L = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        return None
    d = np.diag(L)
    if not np.all(d > 0):
        return None
    total = 2.0 * np.sum(np.log(d)) - np.sum(s * theta) - spec.value(theta)
    if not np.isfinite(total):
        return None
    Linv = np.linalg.inv(L)
    return float(total), Linv.T @ Linv


def check_kkt(theta, S, spec: PenaltySpec) -> float:
    """Largest entrywise distance from (theta^-1 - S) to the penalty subdifferential.

    Zero exactly at the maximiser.  Only convex atoms (zero, l1, monomial with
    exponent >= 1) have a subdifferential here; anything else raises
    UnsupportedPenaltyError.
    """
    if not spec.convex:
        raise UnsupportedPenaltyError(f"KKT check needs convex atoms, got {spec.describe()}")
    t = as_array(theta)
    G = np.linalg.inv(t) - as_array(S)
    G = (G + G.T) / 2
    p = t.shape[0]
    off = ~np.eye(p, dtype=bool)
    lo = np.empty_like(t)
    hi = np.empty_like(t)
    idx = np.arange(p)
    lo[idx, idx], hi[idx, idx] = spec.diagonal.subgradient_interval(t[idx, idx])
    lo[off], hi[off] = spec.off_diagonal.subgradient_interval(t[off])
    viol = np.maximum(np.maximum(lo - G, G - hi), 0.0)
    return float(viol.max())


def _stationarity(theta, grad, spec, eta, D=None):
    """Max-norm of the prox-gradient map at theta (zero exactly at fixed points)."""
    if D is None:
        D = np.ones_like(theta)
    cand = _prox_step(theta, grad, eta, D, spec, None)
    return float(np.max(np.abs(D * (cand - theta)))) / eta


def _smooth(theta, s):
    """log det(theta) - tr(S theta) and theta^-1, or None when theta is not PD."""
    if not np.all(np.isfinite(theta)):
        return None
    try:
        L = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        return None
    d = np.diag(L)
    if not np.all(d > 0):
        return None
    Linv = np.linalg.inv(L)
    return 2.0 * float(np.sum(np.log(d))) - float(np.sum(s * theta)), Linv.T @ Linv


def _metric(W):
    """Diagonal of the Hessian of -log det at theta, W = theta^-1, per entry."""
    d = np.diag(W)
    D = np.outer(d, d) + W * W
    np.fill_diagonal(D, d * d)
    return D


def _prox_step(theta, grad, eta, D, spec, cap):
    with np.errstate(over="ignore", invalid="ignore"):
        steps = eta / D
        cand = spec.prox(theta + steps * grad, steps)
    return _clip_eigs(cand, cap) if cap is not None else cand


def _bb_step(dT, dG, D, default):
    # Barzilai-Borwein step in the metric D for ascent: the gradient of a
    # concave function decreases along the move, so -<dT, dG> > 0
    sy = -float(np.sum(dT * dG))
    ss = float(np.sum(D * dT * dT))
    step = ss / sy if sy > 0 and ss > 0 else default
    return min(max(step, 1e-12), 1e12)


def solve(S, spec: PenaltySpec, cfg: SolverConfig | None = None, init=None) -> Estimate:
    """Maximise log det(theta) - tr(S theta) - Pen(theta) over PD theta.

    Accelerated proximal gradient in a per-entry metric (the diagonal of the
    Hessian of -log det, which keeps the prox entrywise): each iteration
    extrapolates along the last move, takes a prox-gradient step from there, and keeps it only if the
    objective does not drop.  Otherwise momentum is reset and a plain
    prox-gradient step from the current iterate is taken with an Armijo
    backtrack, so accepted iterates are PD and the objective never decreases.

    Stops when the relative objective change falls below ``rel_obj_tol`` and
    the prox-gradient map is below ``step_tol``.  On instances where no
    maximiser exists the iterates run away until ``max_iter`` unless
    ``cfg.eigen_cap`` clips their eigenvalues.  Returns the last accepted
    iterate with ``converged=False`` if the loop does not settle.
    """
    cfg = cfg or SolverConfig()
    s = as_array(S)
    cap = cfg.eigen_cap
    bf = cfg.backtrack_factor
    theta = np.array(as_array(init), dtype=float) if init is not None else initial_theta(s, spec)
    if cap is not None:
        theta = _clip_eigs(theta, cap)
    ev = _evaluate(theta, s, spec)
    if ev is None:
        raise ValueError("initial theta is not positive definite")
    f, inv = ev
    grad = inv - s
    history = [f]
    step = cfg.step_init
    prev_theta, prev_grad = theta, grad
    t = 1.0
    converged = False
    it = 0

    for it in range(1, cfg.max_iter + 1):
        slack = 1e-14 * max(1.0, abs(f))
        accepted = None
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_next
        if beta > 0:
            y = theta + beta * (theta - prev_theta)
            sm = _smooth(y, s)
            if sm is not None:
                g_y, inv_y = sm
                grad_y = inv_y - s
                D = _metric(inv_y)
                eta = min(step / bf, 1e12)
                while eta > 1e-30:
                    cand = _prox_step(y, grad_y, eta, D, spec, cap)
                    ev = _evaluate(cand, s, spec)
                    if ev is not None:
                        d = cand - y
                        g_c = ev[0] + spec.value(cand)
                        bound = g_y + float(np.sum(grad_y * d)) - float(np.sum(D * d * d)) / (2 * eta)
                        if g_c >= bound - slack:
                            if ev[0] >= f:
                                accepted = (cand, ev, eta, float(np.max(np.abs(D * d))) / eta)
                            break
                    eta *= bf
        if accepted is None:
            # restart: plain prox-gradient step from theta with an Armijo test
            if beta > 0:
                t_next = 1.0
            D = _metric(inv)
            eta = _bb_step(theta - prev_theta, grad - prev_grad, D, cfg.step_init)
            while eta > 1e-30:
                cand = _prox_step(theta, grad, eta, D, spec, cap)
                ev = _evaluate(cand, s, spec)
                if ev is not None:
                    d = cand - theta
                    if ev[0] >= f + ARMIJO * float(np.sum(D * d * d)) / eta - slack:
                        move = float(np.max(np.abs(D * d))) / eta
                        accepted = (cand, ev, eta, move)
                        break
                eta *= bf
        if accepted is None:
            # no ascent direction survives rounding: theta is already stationary
            # to working precision
            converged = _stationarity(theta, grad, spec, step, _metric(inv)) <= 1e3 * cfg.step_tol
            break

        cand, (f_new, inv_new), step, move = accepted
        rel = abs(f_new - f) / max(1.0, abs(f))
        prev_theta, prev_grad = theta, grad
        theta, f, inv = cand, f_new, inv_new
        grad = inv - s
        # once the objective has flattened out, momentum only stirs rounding
        # noise; finish with plain steps
        t = t_next if rel >= cfg.rel_obj_tol else 1.0
        history.append(f)
        if rel < cfg.rel_obj_tol and move <= cfg.step_tol:
            converged = True
            break

    theta = (theta + theta.T) / 2
    if spec.convex and cap is None:
        kkt = check_kkt(theta, s, spec)
    else:
        kkt = _stationarity(theta, grad, spec, step, _metric(inv))
    return Estimate(
        theta=SymMatrix(theta, check=False),
        objective=objective(theta, s, spec),
        iterations=it,
        converged=converged,
        kkt_residual=kkt,
        history=tuple(history),
    )


def random_pd_start(p: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    A = rng.normal(size=(p, p))
    return scale * np.exp(rng.normal()) * (A @ A.T / p + 0.5 * np.eye(p))


def multi_start_uniqueness(S, spec: PenaltySpec, n_starts: int = 10, seed: int = 0,
                           cfg: SolverConfig | None = None) -> dict:
    """Solve from ``n_starts`` random PD initialisations and compare the results.

    Each start draws from its own stream seeded by (seed, start index).
    Nonconvex specs raise UnsupportedPenaltyError: only stationarity is
    claimed for them, so agreement across starts is not expected.
    """
    if not spec.convex:
        raise UnsupportedPenaltyError(f"uniqueness check needs convex atoms, got {spec.describe()}")
    s = as_array(S)
    p = s.shape[0]
    scale = 1.0 / max(float(np.mean(np.diag(s))), 1e-3)
    ests = []
    for k in range(n_starts):
        rng = np.random.default_rng([seed, k])
        ests.append(solve(s, spec, cfg, init=random_pd_start(p, rng, scale)))
    dist = 0.0
    for a, b in itertools.combinations(ests, 2):
        dist = max(dist, float(np.max(np.abs(a.theta.array - b.theta.array))))
    return {
        "max_pairwise_distance": dist,
        "all_converged": all(e.converged for e in ests),
        "estimates": ests,
    }


# brute-force oracle -------------------------------------------------------

def _unpack_chol(x, p):
    L = np.zeros((p, p))
    L[np.tril_indices(p)] = x
    idx = np.arange(p)
    logd = L[idx, idx].copy()
    L[idx, idx] = np.exp(logd)
    return L, logd


def _compass(f, x, step, min_step, max_evals):
    """Maximise f by coordinate pattern search with step expansion on success."""
    fx = f(x)
    n = len(x)
    evals = 1
    while step > min_step and evals < max_evals:
        improved = False
        for i in range(n):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[i] += sgn * step
                fy = f(y)
                evals += 1
                if fy > fx:
                    # keep going along the successful direction while it pays
                    while evals < max_evals:
                        z = y.copy()
                        z[i] += sgn * step
                        fz = f(z)
                        evals += 1
                        if fz > fy:
                            y, fy = z, fz
                        else:
                            break
                    x, fx = y, fy
                    improved = True
                    break
        if improved:
            step *= 2.0
        else:
            step *= 0.5
    return x, fx


def brute_force_solve(S, spec: PenaltySpec, n_starts: int = 20, seed: int = 0) -> Estimate:
    """Derivative-free maximiser for p <= 3, independent of ``solve``.

    Stage one runs pattern search over Cholesky factors theta = L L^T with
    log-parameterised diagonal from ``n_starts`` random points.  Stage two
    polishes the best point by pattern search over the entries of theta
    themselves, where the kinks of separable penalties lie along coordinate
    axes.
    """
    s = as_array(S)
    p = s.shape[0]
    if p > 3:
        raise ValueError("brute_force_solve is limited to p <= 3")
    rng = np.random.default_rng(seed)
    tril = np.tril_indices(p)
    diag_pos = [k for k, (i, j) in enumerate(zip(*tril)) if i == j]

    def f_chol(x):
        L, logd = _unpack_chol(x, p)
        if not np.all(np.isfinite(L)):
            return -np.inf
        theta = L @ L.T
        val = 2.0 * logd.sum() - np.sum(s * theta) - spec.value(theta)
        return val if np.isfinite(val) else -np.inf

    base = np.zeros(len(tril[0]))
    base[diag_pos] = -0.5 * np.log(np.diag(s) + 1e-2 + 0.5)
    best_x, best_f = None, -np.inf
    for _ in range(n_starts):
        x0 = base + rng.normal(scale=0.5, size=base.shape)
        x, fx = _compass(f_chol, x0, 0.5, 1e-4, 20000)
        if fx > best_f:
            best_x, best_f = x, fx

    L, _ = _unpack_chol(best_x, p)
    theta0 = L @ L.T
    iu = np.triu_indices(p)

    def to_theta(y):
        t = np.zeros((p, p))
        t[iu] = y
        return t + np.triu(t, 1).T

    def f_entry(y):
        t = to_theta(y)
        try:
            C = np.linalg.cholesky(t)
        except np.linalg.LinAlgError:
            return -np.inf
        d = np.diag(C)
        if not np.all(d > 0):
            return -np.inf
        val = 2.0 * np.sum(np.log(d)) - np.sum(s * t) - spec.value(t)
        return val if np.isfinite(val) else -np.inf

    y, fy = _compass(f_entry, theta0[iu].copy(), 1e-2, 1e-13, 200000)
    theta = to_theta(y)
    kkt = check_kkt(theta, s, spec) if spec.convex else float("nan")
    return Estimate(
        theta=SymMatrix(theta, check=False),
        objective=objective(theta, s, spec),
        iterations=0,
        converged=True,
        kkt_residual=kkt,
    )


def with_cap(cfg: SolverConfig | None, cap: float, max_iter: int | None = None) -> SolverConfig:
    cfg = cfg or SolverConfig()
    kw = {"eigen_cap": cap}
    if max_iter is not None:
        kw["max_iter"] = max_iter
    return replace(cfg, **kw)
