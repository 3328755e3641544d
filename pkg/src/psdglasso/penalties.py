"""Separable penalty atoms, their growth classes and scalar proximal maps.

A penalty on a precision matrix is described by two atoms, one applied to
every diagonal entry and one to every off-diagonal entry.  Off-diagonal
entries are summed over ordered pairs, so ``theta[j, k]`` and
``theta[k, j]`` are each charged once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

SUPER_LOGARITHMIC = "SuperLogarithmic"
LOGARITHMIC = "Logarithmic"
BOUNDED = "Bounded"

MCP_GAMMA = 3.0
SCAD_GAMMA = 3.7


class GrowthProbeInconclusive(ValueError):
    """The numerical growth probe could not place a custom penalty in a class."""


def _choose(cands, h):
    """Pick the candidate with smallest objective; ties go to the smaller |x|."""
    cands = np.stack(cands)
    h = np.stack(h)
    h = np.where(np.isnan(h), np.inf, h)
    best = h.min(axis=0)
    ok = h <= best + 1e-14 * (1.0 + np.abs(best))
    mags = np.where(ok, np.abs(cands), np.inf)
    idx = np.argmin(mags, axis=0)
    return np.take_along_axis(cands, idx[None], axis=0)[0]


class PenaltyAtom:
    """Scalar penalty ``pen(theta)``, non-decreasing in ``|theta|``.

    Subclasses provide ``value`` (vectorised) and ``prox_abs``, the proximal
    map restricted to non-negative inputs.
    """

    family = "abstract"
    growth_class = SUPER_LOGARITHMIC
    lower_bounded = True
    convex = False

    @property
    def value_at_zero(self) -> float:
        return float(self.value(np.zeros(1))[0])

    @property
    def name(self) -> str:
        return self.family

    @property
    def is_zero(self) -> bool:
        return False

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def prox_abs(self, z: np.ndarray, step: float) -> np.ndarray:
        raise NotImplementedError

    def prox(self, z, step) -> np.ndarray:
        """argmin_x 0.5 (x - z)^2 + step * pen(x), elementwise.

        ``step`` is a positive scalar or an array of per-entry steps
        broadcastable to ``z``.
        """
        z = np.asarray(z, dtype=float)
        step = np.asarray(step, dtype=float)
        if step.ndim:
            step = np.broadcast_to(step, z.shape)
        return np.sign(z) * self.prox_abs(np.abs(z), step)

    def subgradient_interval(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Lower/upper ends of the subdifferential (convex atoms only)."""
        raise TypeError(f"{self.name} is not convex; no subgradient available")

    def _h(self, x, z, step):
        return 0.5 * (x - z) ** 2 + step * self.value(x)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


@dataclass(frozen=True, repr=False)
class Zero(PenaltyAtom):
    family = "zero"
    growth_class = BOUNDED
    convex = True

    @property
    def is_zero(self):
        return True

    def value(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def prox_abs(self, z, step):
        return z

    def subgradient_interval(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x), np.zeros_like(x)


@dataclass(frozen=True, repr=False)
class L1(PenaltyAtom):
    rho: float
    family = "l1"
    growth_class = SUPER_LOGARITHMIC
    convex = True

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("l1 penalty needs rho > 0")

    @property
    def name(self):
        return f"l1:{self.rho!r}"

    def value(self, x):
        return self.rho * np.abs(np.asarray(x, dtype=float))

    def prox_abs(self, z, step):
        return np.maximum(z - step * self.rho, 0.0)

    def subgradient_interval(self, x):
        x = np.asarray(x, dtype=float)
        s = np.sign(x) * self.rho
        return np.where(x == 0, -self.rho, s), np.where(x == 0, self.rho, s)


@dataclass(frozen=True, repr=False)
class Monomial(PenaltyAtom):
    """``rho * |theta|**a`` with ``a > 0``; convex only for ``a >= 1``."""

    rho: float
    a: float
    family = "monomial"
    growth_class = SUPER_LOGARITHMIC

    def __post_init__(self):
        if not (self.rho > 0 and self.a > 0):
            raise ValueError("monomial penalty needs rho > 0 and a > 0")

    @property
    def name(self):
        return f"monomial:{self.rho!r}:{self.a!r}"

    @property
    def convex(self):
        return self.a >= 1

    def value(self, x):
        return self.rho * np.abs(np.asarray(x, dtype=float)) ** self.a

    def subgradient_interval(self, x):
        if self.a < 1:
            return super().subgradient_interval(x)
        x = np.asarray(x, dtype=float)
        if self.a == 1:
            return L1(self.rho).subgradient_interval(x)
        g = self.rho * self.a * np.sign(x) * np.abs(x) ** (self.a - 1)
        return g, g

    def _dh(self, x, z, c):
        return x - z + c * self.a * x ** (self.a - 1)

    def _root(self, z, c, lo, hi, active):
        # safeguarded Newton for x - z + c a x^(a-1) = 0 on [lo, hi], where the
        # left side is increasing; inactive entries are returned as hi
        a = self.a
        x = hi.copy()
        if not np.any(active):
            return x
        zs, lo, hi, x = z[active], lo[active], hi[active], x[active]
        if np.ndim(c):
            c = c[active]
        with np.errstate(divide="ignore", invalid="ignore"):
            for _ in range(50):
                f = self._dh(x, zs, c)
                pos = f > 0
                hi = np.where(pos, x, hi)
                lo = np.where(pos, lo, x)
                df = 1.0 + c * a * (a - 1) * np.where(x > 0, x, 1.0) ** (a - 2)
                xn = x - f / df
                bad = ~np.isfinite(xn) | (xn < lo) | (xn > hi)
                xn = np.where(bad, 0.5 * (lo + hi), xn)
                done = np.abs(xn - x) <= 1e-12 * np.maximum(1.0, np.abs(x))
                x = xn
                if np.all(done):
                    break
        out = z.copy()
        out[active] = x
        return out

    @staticmethod
    def _sqrt_root(z, c, active):
        # a = 1/2: with u = sqrt(x) the stationarity condition is the cubic
        # u^3 - z u + c/2 = 0, whose largest root is the local minimiser
        zs = np.where(active, z, 1.0)
        arg = np.clip(-0.75 * c / zs * np.sqrt(3.0 / zs), -1.0, 1.0)
        u = 2.0 * np.sqrt(zs / 3.0) * np.cos(np.arccos(arg) / 3.0)
        x = u * u
        # one Newton polish on x - z + c / (2 sqrt x) = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            f = x - zs + 0.5 * c / u
            df = 1.0 - 0.25 * c / (x * u)
            xn = x - f / df
        return np.where(np.isfinite(xn) & (xn > 0), xn, x)

    def prox_abs(self, z, step):
        c = step * self.rho
        a = self.a
        z = np.asarray(z, dtype=float)
        if a == 1:
            return np.maximum(z - c, 0.0)
        if a == 2:
            return z / (1.0 + 2.0 * c)
        if a > 1:
            return self._root(z, c, np.zeros_like(z), z.copy(), z > 0)
        # a < 1: h is concave below x_infl and convex above it, so a local
        # minimiser exists only if h' < 0 at x_infl
        x_infl = (c * a * (1 - a)) ** (1.0 / (2 - a))
        lo = np.broadcast_to(x_infl, z.shape).astype(float)
        with np.errstate(divide="ignore"):
            has_min = (z > x_infl) & (self._dh(lo, z, c) < 0)
        if a == 0.5:
            root = np.where(has_min, self._sqrt_root(z, c, has_min), 0.0)
        else:
            root = np.where(has_min, self._root(z, c, lo, z.copy(), has_min), 0.0)
        zero = np.zeros_like(z)
        return _choose([zero, root], [self._h(zero, z, step), self._h(root, z, step)])


@dataclass(frozen=True, repr=False)
class MCP(PenaltyAtom):
    """Minimax concave penalty: ``rho|x| - x^2/(2 gamma)`` up to ``gamma rho``, then flat."""

    rho: float
    gamma: float = MCP_GAMMA
    family = "mcp"
    growth_class = BOUNDED

    def __post_init__(self):
        if not (self.rho > 0 and self.gamma > 0):
            raise ValueError("mcp penalty needs rho > 0 and gamma > 0")

    @property
    def name(self):
        return f"mcp:{self.rho!r}:{self.gamma!r}"

    def value(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        r, g = self.rho, self.gamma
        return np.where(x <= g * r, r * x - x * x / (2 * g), 0.5 * g * r * r)

    def prox_abs(self, z, step):
        z = np.asarray(z, dtype=float)
        r, g = self.rho, self.gamma
        knot = g * r
        zero = np.zeros_like(z)
        cands = [zero, np.full_like(z, knot), np.maximum(z, knot)]
        # interior stationary point exists unless step == gamma
        den = 1.0 - step / g
        ok = den != 0
        inner = (z - step * r) / np.where(ok, den, 1.0)
        cands.append(np.where(ok, np.clip(inner, 0.0, knot), 0.0))
        return _choose(cands, [self._h(c, z, step) for c in cands])


@dataclass(frozen=True, repr=False)
class SCAD(PenaltyAtom):
    rho: float
    gamma: float = SCAD_GAMMA
    family = "scad"
    growth_class = BOUNDED

    def __post_init__(self):
        if not (self.rho > 0 and self.gamma > 2):
            raise ValueError("scad penalty needs rho > 0 and gamma > 2")

    @property
    def name(self):
        return f"scad:{self.rho!r}:{self.gamma!r}"

    def value(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        r, g = self.rho, self.gamma
        mid = (2 * g * r * x - x * x - r * r) / (2 * (g - 1))
        top = 0.5 * r * r * (g + 1)
        return np.where(x <= r, r * x, np.where(x <= g * r, mid, top))

    def prox_abs(self, z, step):
        z = np.asarray(z, dtype=float)
        r, g = self.rho, self.gamma
        cands = [
            np.zeros_like(z),
            np.clip(z - step * r, 0.0, r),
            np.full_like(z, r),
            np.full_like(z, g * r),
            np.maximum(z, g * r),
        ]
        den = g - 1 - step
        ok = den != 0
        mid = (z * (g - 1) - step * g * r) / np.where(ok, den, 1.0)
        cands.append(np.where(ok, np.clip(mid, r, g * r), 0.0))
        return _choose(cands, [self._h(c, z, step) for c in cands])


@dataclass(frozen=True, repr=False)
class LogShift(PenaltyAtom):
    """``rho * log(1 + |theta|)``."""

    rho: float
    family = "logshift"
    growth_class = LOGARITHMIC

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("logshift penalty needs rho > 0")

    @property
    def name(self):
        return f"logshift:{self.rho!r}"

    def value(self, x):
        return self.rho * np.log1p(np.abs(np.asarray(x, dtype=float)))

    def prox_abs(self, z, step):
        # stationary points solve x^2 + (1 - z) x + (c - z) = 0
        z = np.asarray(z, dtype=float)
        c = step * self.rho
        b = 1.0 - z
        disc = b * b - 4.0 * (c - z)
        sq = np.sqrt(np.maximum(disc, 0.0))
        roots = [np.clip((-b + sq) / 2.0, 0.0, z), np.clip((-b - sq) / 2.0, 0.0, z)]
        roots = [np.where(disc >= 0, x, 0.0) for x in roots]
        cands = [np.zeros_like(z)] + roots
        return _choose(cands, [self._h(x, z, step) for x in cands])


@dataclass(frozen=True, repr=False, eq=False)
class Custom(PenaltyAtom):
    """User-supplied penalty with declared metadata.

    ``fn`` must be vectorised over numpy arrays (or is wrapped with
    ``np.vectorize``).  When ``growth_class`` is omitted it is estimated by
    ``classify_growth``.
    """

    fn: Callable
    lower_bounded: bool = True
    declared_value_at_zero: float = 0.0
    declared_growth: str | None = None
    label: str = "custom"
    convex: bool = field(default=False)

    def __post_init__(self):
        grid = np.linspace(0.0, 50.0, 501)[1:]
        with np.errstate(all="ignore"):
            vals = np.asarray(self.value(grid), dtype=float)
        if np.any(np.diff(vals) < -1e-12 * (1.0 + np.abs(vals[1:]))):
            raise ValueError("custom penalty must be non-decreasing in |theta|")

    family = "custom"

    @property
    def name(self):
        return self.label

    @property
    def value_at_zero(self):
        return self.declared_value_at_zero

    @property
    def growth_class(self):
        return self.declared_growth if self.declared_growth is not None else _probe_growth(self)

    def value(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        out = self.fn(x)
        if np.ndim(out) == 0 and np.ndim(x) > 0:
            out = np.vectorize(self.fn)(x)
        return np.asarray(out, dtype=float)

    def prox_abs(self, z, step):
        # grid search followed by golden-section refinement in the best cell
        z = np.asarray(z, dtype=float)
        flat = z.ravel()
        step = np.broadcast_to(step, z.shape).ravel()
        t = np.linspace(0.0, 1.0, 257)
        xs = flat[:, None] * t[None, :]
        with np.errstate(all="ignore"):
            hs = self._h(xs, flat[:, None], step[:, None])
        hs = np.where(np.isnan(hs), np.inf, hs)
        k = np.argmin(hs, axis=1)
        lo = flat * t[np.maximum(k - 1, 0)]
        hi = flat * t[np.minimum(k + 1, 256)]
        g = (math.sqrt(5) - 1) / 2
        for _ in range(60):
            a = hi - g * (hi - lo)
            b = lo + g * (hi - lo)
            with np.errstate(all="ignore"):
                left = self._h(a, flat, step) <= self._h(b, flat, step)
            hi = np.where(left, b, hi)
            lo = np.where(left, lo, a)
        x = 0.5 * (lo + hi)
        cands = [np.zeros_like(flat), x]
        with np.errstate(all="ignore"):
            out = _choose(cands, [self._h(c, flat, step) for c in cands])
        return out.reshape(z.shape)


def _probe_growth(atom) -> str:
    k = np.arange(1, 9, dtype=float)
    x = 10.0 ** k
    with np.errstate(all="ignore"):
        v = np.asarray(atom.value(x), dtype=float)
    if not np.all(np.isfinite(v)):
        raise GrowthProbeInconclusive(f"{atom.name}: non-finite values during growth probe")
    tail = v[4:]
    if tail[-1] - tail[0] <= 1e-9 * max(1.0, abs(tail[0])):
        return BOUNDED
    ratio = v / (k * math.log(10.0))
    r = ratio[4:]
    if np.all(r > 0) and np.all(np.diff(r) > 0) and r[-1] / r[0] >= 2.0:
        return SUPER_LOGARITHMIC
    if np.all(r > 0) and r.max() / r.min() <= 1.5:
        return LOGARITHMIC
    raise GrowthProbeInconclusive(
        f"{atom.name}: pen(x)/log(x) ratios {np.round(ratio, 4).tolist()} fit no growth class"
    )


def classify_growth(atom: PenaltyAtom) -> str:
    """Growth class of ``atom`` as |theta| -> inf.

    Named families report their declared class.  Custom atoms without a
    declared class are probed at |theta| = 10, ..., 1e8 through the ratio
    pen(x) / log(x).  Raises GrowthProbeInconclusive when the probe fits
    none of the three classes.
    """
    return atom.growth_class


@lru_cache(maxsize=64)
def _layout(p: int):
    """Strict lower-triangle indices and off-diagonal mask for dimension p."""
    return np.tril_indices(p, -1), ~np.eye(p, dtype=bool)


@dataclass(frozen=True)
class PenaltySpec:
    diagonal: PenaltyAtom
    off_diagonal: PenaltyAtom

    @property
    def convex(self) -> bool:
        return self.diagonal.convex and self.off_diagonal.convex

    @property
    def lower_bounded(self) -> bool:
        return self.diagonal.lower_bounded and self.off_diagonal.lower_bounded

    def describe(self) -> dict:
        return {"diagonal": self.diagonal.name, "off_diagonal": self.off_diagonal.name}

    def value(self, theta) -> float:
        t = np.asarray(theta, dtype=float)
        off = _layout(t.shape[0])[1]
        return float(np.sum(self.diagonal.value(np.diag(t))) + np.sum(self.off_diagonal.value(t[off])))

    def prox(self, z, step) -> np.ndarray:
        """Entrywise proximal map of ``step * Pen`` on a symmetric matrix.

        ``step`` is a scalar or a symmetric matrix of per-entry steps.
        """
        z = np.asarray(z, dtype=float)
        p = z.shape[0]
        il = _layout(p)[0]
        step = np.asarray(step, dtype=float)
        per_entry = step.ndim > 0
        out = np.empty_like(z)
        low = self.off_diagonal.prox(z[il], step[il] if per_entry else step)
        out[il] = low
        out[il[1], il[0]] = low
        idx = np.arange(p)
        out[idx, idx] = self.diagonal.prox(np.diag(z), np.diag(step) if per_entry else step)
        return out


def glasso(rho: float) -> PenaltySpec:
    return PenaltySpec(L1(rho), L1(rho))


def odglasso(rho: float) -> PenaltySpec:
    return PenaltySpec(Zero(), L1(rho))


def mle() -> PenaltySpec:
    return PenaltySpec(Zero(), Zero())


_FAMILIES = {
    "zero": (Zero, 0, 0),
    "l1": (L1, 1, 1),
    "monomial": (Monomial, 2, 2),
    "mcp": (MCP, 1, 2),
    "scad": (SCAD, 1, 2),
    "logshift": (LogShift, 1, 1),
}


def parse_atom(text: str) -> PenaltyAtom:
    """Parse ``family[:param[:param]]``, e.g. ``l1:0.5`` or ``monomial:0.5:2``.

    Monomial takes rho then the exponent; mcp/scad take rho then an optional
    gamma (defaults 3.0 and 3.7).
    """
    parts = text.strip().lower().split(":")
    family, args = parts[0], parts[1:]
    if family not in _FAMILIES:
        raise ValueError(f"unknown penalty family {family!r}; choose from {sorted(_FAMILIES)}")
    cls, lo, hi = _FAMILIES[family]
    if not lo <= len(args) <= hi:
        raise ValueError(f"penalty {family!r} takes {lo}..{hi} parameters, got {len(args)}")
    try:
        values = [float(a) for a in args]
    except ValueError as exc:
        raise ValueError(f"bad numeric parameter in penalty {text!r}") from exc
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"penalty parameters must be finite: {text!r}")
    return cls(*values)


def parse_preset(text: str) -> PenaltySpec:
    """Parse ``mle``, ``glasso:RHO`` or ``odglasso:RHO``."""
    parts = text.strip().lower().split(":")
    if parts[0] == "mle" and len(parts) == 1:
        return mle()
    if parts[0] in ("glasso", "odglasso") and len(parts) == 2:
        rho = float(parts[1])
        return glasso(rho) if parts[0] == "glasso" else odglasso(rho)
    raise ValueError(f"unknown penalty preset {text!r}; use mle, glasso:RHO or odglasso:RHO")
