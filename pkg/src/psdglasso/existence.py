"""Existence oracle for penalised precision-matrix estimates.

For a sample covariance S and a diagonal/off-diagonal penalty pair the oracle
returns Exists, NotExists or Undetermined together with the rule it applied.
A NotExists verdict carries a divergence certificate: an orthonormal frame W,
a set D of diverging directions and the path

    theta(t) = sum_{i in D} scale * t * w_i w_i^T + sum_{i not in D} w_i w_i^T,

along which the objective is checked numerically to grow without bound.
Indices are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matrix import (
    DEFAULT_REL_TOL,
    INDEFINITE,
    POSITIVE_DEFINITE,
    EigenDecomposition,
    IndefiniteMatrixError,
    as_array,
    as_sym,
    classify_definiteness,
    eigendecompose,
    null_indices,
)
from .penalties import (
    LOGARITHMIC,
    SUPER_LOGARITHMIC,
    L1,
    GrowthProbeInconclusive,
    PenaltySpec,
    classify_growth,
)
from .solver import SolverConfig, solve, with_cap

EXISTS = "Exists"
NOT_EXISTS = "NotExists"
UNDETERMINED = "Undetermined"

# rule tags
P1 = "P1"
P2 = "P2"
C1 = "C1"
P3 = "P3"
P4_ZERO_DIAG = "P4-zero-diag"
P4_NONZERO_DIAG = "P4-nonzero-diag"
C2 = "C2"
D_BOUNDED = "D-bounded"
D_SUPERLOG = "D-superlog"
D_LOG = "D-log-undetermined"
D_UNBOUNDED_BELOW = "D-unbounded-below-undetermined"

RULES = (P1, P2, C1, P3, P4_ZERO_DIAG, P4_NONZERO_DIAG, C2, D_BOUNDED, D_SUPERLOG, D_LOG,
         D_UNBOUNDED_BELOW)
NOT_EXISTS_RULES = (P2, P4_ZERO_DIAG, D_BOUNDED)

DIAG_TOL = 1e-12
T_GRID = tuple(10.0 ** k for k in range(7))
NULL_TOL = 1e-8
MAX_SCALE_EXP = 9


@dataclass(frozen=True)
class DivergenceCertificate:
    frame: np.ndarray
    diverging_indices: tuple
    baseline: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if len(self.diverging_indices) == 0:
            raise ValueError("certificate needs at least one diverging direction")
        if np.any(np.asarray(self.baseline) <= 0):
            raise ValueError("baseline eigenvalues must be positive")

    def sigma(self, t: float) -> np.ndarray:
        sig = np.array(self.baseline, dtype=float)
        sig[list(self.diverging_indices)] = self.scale * t
        return sig

    def theta(self, t: float) -> np.ndarray:
        W = self.frame
        out = (W * self.sigma(t)) @ W.T
        return (out + out.T) / 2

    def to_dict(self) -> dict:
        return {
            "frame": np.asarray(self.frame).T.tolist(),
            "diverging_indices": list(self.diverging_indices),
            "baseline": np.asarray(self.baseline).tolist(),
            "scale": self.scale,
        }


@dataclass(frozen=True)
class VerificationReport:
    t_grid: tuple
    objective_values: tuple
    increments: tuple
    monotone: bool
    total_increment: float
    required_increment: float
    null_residual: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "t_grid": list(self.t_grid),
            "objective_values": list(self.objective_values),
            "increments": list(self.increments),
            "monotone": self.monotone,
            "total_increment": self.total_increment,
            "required_increment": self.required_increment,
            "null_residual": self.null_residual,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ExistenceVerdict:
    tag: str
    rule: str
    certificate: DivergenceCertificate | None = None
    verification: VerificationReport | None = None
    reason: str = ""
    definiteness: str = ""
    zero_eigen_count: int = 0
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def exists(self) -> bool:
        return self.tag == EXISTS

    def to_dict(self) -> dict:
        out = {"verdict": self.tag, "rule": self.rule, "reason": self.reason}
        out["certificate"] = self.certificate.to_dict() if self.certificate else None
        out["verification"] = self.verification.to_dict() if self.verification else None
        return out


def _path_objective(cert, S, spec, t):
    W = cert.frame
    sig = cert.sigma(t)
    # eigen form of the log-likelihood: exact log det along the path
    quad = np.einsum("ji,jk,ki->i", W, S, W)
    loglik = float(np.sum(np.log(sig) - sig * quad))
    return loglik - spec.value(cert.theta(t))


def verify_certificate(cert: DivergenceCertificate, S, spec: PenaltySpec) -> VerificationReport:
    """Evaluate the objective along the certificate path at t = 1, 10, ..., 1e6.

    Passes when the values are strictly increasing and grow by at least
    0.9 * |D| * log(1e6) in total.
    """
    s = as_array(S)
    W = np.asarray(cert.frame, dtype=float)
    p = s.shape[0]
    required = 0.9 * len(cert.diverging_indices) * math.log(T_GRID[-1])
    null_res = max(float(np.linalg.norm(s @ W[:, i])) for i in cert.diverging_indices)
    well_formed = W.shape == (p, p) and np.max(np.abs(W.T @ W - np.eye(p))) <= 1e-8
    if not well_formed:
        values = (float("nan"),) * len(T_GRID)
    else:
        values = tuple(_path_objective(cert, s, spec, t) for t in T_GRID)
    inc = tuple(float(b - a) for a, b in zip(values, values[1:]))
    finite = all(math.isfinite(v) for v in values)
    monotone = finite and all(d > 0 for d in inc)
    total = float(values[-1] - values[0]) if finite else float("nan")
    return VerificationReport(
        t_grid=T_GRID,
        objective_values=values,
        increments=inc,
        monotone=monotone,
        total_increment=total,
        required_increment=required,
        null_residual=null_res,
        passed=bool(monotone and total >= required),
    )


def zero_diagonal_indices(S, diag_tol: float = DIAG_TOL) -> list[int]:
    d = np.diag(as_array(S))
    thr = diag_tol * max(1.0, float(d.max()))
    return [int(j) for j in np.flatnonzero(np.abs(d) <= thr)]


def build_certificate(S, spec: PenaltySpec, rule: str, rel_tol: float = DEFAULT_REL_TOL,
                      E: EigenDecomposition | None = None,
                      diag_tol: float = DIAG_TOL) -> DivergenceCertificate:
    """Certificate for a NotExists rule.

    P2 and D-bounded use the eigenvectors of S and let every null-space
    eigenvalue grow; P4-zero-diag uses the standard basis with the first
    zero-diagonal coordinate first.  The path scale is raised by powers of
    ten until the penalty has flattened out along the path (bounded
    penalties only need this); the first passing scale is kept.
    """
    if rule not in NOT_EXISTS_RULES:
        raise ValueError(f"rule {rule!r} does not assert non-existence")
    s = as_array(S)
    p = s.shape[0]
    if rule == P4_ZERO_DIAG:
        zeros = zero_diagonal_indices(s, diag_tol)
        if not zeros:
            raise ValueError("S has no zero diagonal entry")
        j = zeros[0]
        order = [j] + [k for k in range(p) if k != j]
        frame = np.eye(p)[:, order]
        D = (0,)
    else:
        E = E or eigendecompose(s)
        D = tuple(null_indices(E, rel_tol))
        if not D:
            raise ValueError("S has no null space")
        frame = np.array(E.vectors)
    baseline = np.ones(p)
    first = None
    for k in range(MAX_SCALE_EXP + 1):
        cert = DivergenceCertificate(frame, D, baseline, 10.0 ** k)
        first = first or cert
        if verify_certificate(cert, s, spec).passed:
            return cert
    return first


def _undetermined(rule, reason, cls):
    return ExistenceVerdict(UNDETERMINED, rule, reason=reason, definiteness=cls.tag,
                            zero_eigen_count=cls.zero_eigen_count)


def decide_existence(S, spec: PenaltySpec, rel_tol: float = DEFAULT_REL_TOL,
                     diag_tol: float = DIAG_TOL) -> ExistenceVerdict:
    """Decide whether the penalised estimate exists for S.

    Rules, first match wins:

    * S positive definite, both atoms lower bounded: exists (P1 for the
      plain likelihood, C1 otherwise).
    * An atom unbounded below: undetermined.
    * Diagonal atom grows faster than log: exists (P3 for l1, D-superlog
      otherwise).
    * Off-diagonal atom grows faster than log, diagonal atom zero or
      bounded: exists iff no diagonal entry of S is zero (P4 rules).
    * Both atoms zero: does not exist (P2).
    * A logarithmic atom left to supply growth: undetermined.
    * Otherwise both atoms are zero or bounded: does not exist (D-bounded).

    Raises IndefiniteMatrixError for indefinite S.
    """
    s = as_sym(S).array
    E = eigendecompose(s)
    cls = classify_definiteness(E, rel_tol)
    if cls.tag == INDEFINITE:
        raise IndefiniteMatrixError("S is indefinite; existence is only decided for PSD S")
    d, o = spec.diagonal, spec.off_diagonal

    if cls.tag == POSITIVE_DEFINITE:
        if spec.lower_bounded:
            rule = P1 if d.is_zero and o.is_zero else C1
            return ExistenceVerdict(EXISTS, rule, definiteness=cls.tag)
        return _undetermined(D_UNBOUNDED_BELOW, "penalty is not bounded below", cls)

    def growth(atom):
        return "zero" if atom.is_zero else classify_growth(atom)

    def not_exists(rule):
        cert = build_certificate(s, spec, rule, rel_tol, E, diag_tol)
        return ExistenceVerdict(NOT_EXISTS, rule, cert, verify_certificate(cert, s, spec),
                                definiteness=cls.tag, zero_eigen_count=cls.zero_eigen_count)

    def exists(rule):
        return ExistenceVerdict(EXISTS, rule, definiteness=cls.tag,
                                zero_eigen_count=cls.zero_eigen_count)

    try:
        gd = growth(d)
        if not spec.lower_bounded:
            go = growth(o)
            rule = D_LOG if LOGARITHMIC in (gd, go) else D_UNBOUNDED_BELOW
            return _undetermined(rule, "penalty is not bounded below and S is singular", cls)
        if gd == SUPER_LOGARITHMIC:
            return exists(P3 if isinstance(d, L1) else D_SUPERLOG)
        go = growth(o)
    except GrowthProbeInconclusive as exc:
        return _undetermined(D_LOG, f"growth probe inconclusive: {exc}", cls)

    if go == SUPER_LOGARITHMIC:
        if not zero_diagonal_indices(s, diag_tol):
            return exists(P4_NONZERO_DIAG)
        if gd == LOGARITHMIC:
            return _undetermined(D_LOG, "logarithmic diagonal penalty with a zero diagonal entry", cls)
        return not_exists(P4_ZERO_DIAG)
    if gd == "zero" and go == "zero":
        return not_exists(P2)
    if LOGARITHMIC in (gd, go):
        return _undetermined(D_LOG, "a logarithmic-rate penalty must supply growth along the null space", cls)
    return not_exists(D_BOUNDED)


CAPS = tuple(10.0 ** k for k in range(1, 7))


def probe_divergence(S, spec: PenaltySpec, budget: int = 2000,
                     cfg: SolverConfig | None = None) -> dict:
    """Empirical divergence check by solving under growing eigenvalue caps.

    Caps run 1e1..1e6 with warm starts.  ``diverging`` is True when the
    largest eigenvalue of every capped solution sits at its cap and the
    objective gains more than 1e-3 per decade; False when the two largest
    caps are both slack and the objective has stopped moving.  Anything else
    sets ``inconclusive``.
    """
    s = as_array(S)
    theta = None
    eig_traj, obj_traj = [], []
    for cap in CAPS:
        est = solve(s, spec, with_cap(cfg, cap, budget), init=theta)
        theta = est.theta.array
        eig_traj.append(float(np.linalg.eigvalsh(theta)[-1]))
        obj_traj.append(est.objective.total)
    tracks = [lam >= 0.5 * cap for lam, cap in zip(eig_traj, CAPS)]
    gains = np.diff(obj_traj)
    diverging = all(tracks) and bool(np.all(gains > 1e-3))
    settled = not tracks[-1] and not tracks[-2] and abs(gains[-1]) <= 1e-3
    return {
        "diverging": diverging,
        "inconclusive": not diverging and not settled,
        "max_eigen_trajectory": eig_traj,
        "objective_trajectory": obj_traj,
        "caps": list(CAPS),
    }
