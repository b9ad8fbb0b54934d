"""Domain catalog with closed-form boundary distances.

Five concrete state spaces share one interface: exact distance to the
boundary from either side, fatness witness points, Monte Carlo
boundary-strip volumes, and the time-scale point selection used by the
bound evaluator. Keeping every distance closed-form means the singular
quadrature downstream always knows exactly where the boundary is.

Points are numpy arrays of shape ``(d,)``; plain floats are accepted
for one-dimensional domains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln

from .errors import DomainError, InputError, RangeError

CATALOG = ("half_line", "half_space", "ball", "exterior_ball", "box_2d")

_KAPPA = {
    "half_line": 0.5,
    "half_space": 0.5,
    "ball": 0.25,
    "exterior_ball": 0.25,
    "box_2d": 0.25,
}


@dataclass(frozen=True)
class DomainSpec:
    """One entry of the domain catalog.

    Parameters
    ----------
    kind : str
        One of ``half_line`` (d=1, the positive axis), ``half_space``
        (points with positive last coordinate), ``ball`` (centered,
        radius ``radius``), ``exterior_ball`` (complement of the closed
        centered ball), ``box_2d`` (open square of side ``side``).
    d : int
        Ambient dimension. Forced to 1 for ``half_line`` and 2 for
        ``box_2d``.
    radius, side : float
        Shape parameter for ball-like and box domains respectively.
    """

    kind: str
    d: int = 1
    radius: float | None = None
    side: float | None = None

    def __post_init__(self):
        if self.kind not in CATALOG:
            raise InputError(f"unknown domain kind {self.kind!r}")
        if self.kind == "half_line" and self.d != 1:
            raise InputError("half_line is one-dimensional")
        if self.kind == "box_2d" and self.d != 2:
            raise InputError("box_2d lives in dimension 2")
        if self.d < 1:
            raise InputError("dimension must be a positive integer")
        if self.kind in ("ball", "exterior_ball"):
            if self.radius is None or self.radius <= 0:
                raise InputError(f"{self.kind} needs a positive radius")
        if self.kind == "box_2d":
            if self.side is None or self.side <= 0:
                raise InputError("box_2d needs a positive side")

    @property
    def kappa(self) -> float:
        """Fatness constant fixed per catalog entry."""
        return _KAPPA[self.kind]

    @property
    def gamma(self) -> float:
        """Boundary codimension. Equal to 1 for the whole catalog."""
        return 1.0

    @property
    def R0(self) -> float:
        """Localization length below which fatness witnesses exist."""
        if self.kind == "ball":
            return 2.0 * self.radius
        if self.kind == "box_2d":
            return self.side
        return math.inf

    @property
    def A0(self) -> float:
        """Diameter of the complement."""
        if self.kind == "exterior_ball":
            return 2.0 * self.radius
        return math.inf

    @property
    def diam(self) -> float:
        if self.kind == "ball":
            return 2.0 * self.radius
        if self.kind == "box_2d":
            return self.side * math.sqrt(2.0)
        return math.inf


def domain_from_dict(data: dict) -> DomainSpec:
    """Build a :class:`DomainSpec` from a parsed TOML table."""
    if "kind" not in data:
        raise InputError("domain table needs a 'kind' key")
    kind = data["kind"]
    d = int(data.get("d", 1 if kind == "half_line" else 2))
    radius = data.get("R", data.get("radius"))
    side = data.get("L", data.get("side"))
    known = {"kind", "d", "R", "radius", "L", "side"}
    extra = set(data) - known
    if extra:
        raise InputError(f"unknown domain keys: {sorted(extra)}")
    return DomainSpec(kind=kind, d=d, radius=radius, side=side)


def domain_to_dict(dom: DomainSpec) -> dict:
    out = {"kind": dom.kind, "d": dom.d}
    if dom.radius is not None:
        out["R"] = dom.radius
    if dom.side is not None:
        out["L"] = dom.side
    return out


def as_point(dom: DomainSpec, x) -> np.ndarray:
    """Coerce ``x`` to a float vector of the domain's dimension."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.shape != (dom.d,):
        raise InputError(f"point of shape {p.shape} in dimension-{dom.d} domain")
    return p


def _signed_inner(dom: DomainSpec, pts: np.ndarray) -> np.ndarray:
    """Signed distance, positive inside D, negative outside."""
    if dom.kind == "half_line":
        return pts[:, 0]
    if dom.kind == "half_space":
        return pts[:, -1]
    r = np.linalg.norm(pts, axis=1)
    if dom.kind == "ball":
        return dom.radius - r
    if dom.kind == "exterior_ball":
        return r - dom.radius
    # box_2d: inside, the min coordinate margin; outside, minus the
    # euclidean distance to the clamped boundary point.
    L = dom.side
    margin = np.minimum(pts, L - pts).min(axis=1)
    inside = (pts > 0).all(axis=1) & (pts < L).all(axis=1)
    clamped = np.clip(pts, 0.0, L)
    dist_out = np.linalg.norm(pts - clamped, axis=1)
    return np.where(inside, margin, -dist_out)


def delta_many(dom: DomainSpec, pts: np.ndarray) -> np.ndarray:
    """Vectorized boundary distance, zero on the boundary and outside."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != dom.d:
        raise InputError("expected an (n, d) array of points")
    return np.maximum(_signed_inner(dom, pts), 0.0)


def delta_D(dom: DomainSpec, x) -> float:
    """Distance from ``x`` to the boundary, clamped to zero outside D."""
    p = as_point(dom, x)
    return float(np.maximum(_signed_inner(dom, p[None, :]), 0.0)[0])


def delta_complement(dom: DomainSpec, x) -> float:
    """Distance to the boundary seen from the complement side.

    Zero on the closure of D; for points in the interior of the
    complement this is the distance to the shared boundary.
    """
    p = as_point(dom, x)
    return float(np.maximum(-_signed_inner(dom, p[None, :]), 0.0)[0])


def contains(dom: DomainSpec, x, closed: bool = False) -> bool:
    s = _signed_inner(dom, as_point(dom, x)[None, :])[0]
    return bool(s >= 0.0) if closed else bool(s > 0.0)


def contains_many(dom: DomainSpec, pts: np.ndarray, closed: bool = False) -> np.ndarray:
    s = _signed_inner(dom, np.asarray(pts, dtype=float))
    return s >= 0.0 if closed else s > 0.0


def fat_witness(dom: DomainSpec, x, r: float) -> np.ndarray:
    """Point ``z`` with ``B(z, kappa*r)`` inside both D and ``B(x, r)``.

    ``x`` must lie in the closure of D and ``r`` in ``(0, R0)``.
    """
    p = as_point(dom, x)
    if r <= 0 or not math.isfinite(r):
        raise InputError("witness radius must be positive and finite")
    if delta_complement(dom, p) > 0:
        raise DomainError("witness base point must lie in the closure of D")
    if r >= dom.R0:
        raise RangeError(f"witness radius {r} >= R0 = {dom.R0}")
    if dom.kind in ("half_line", "half_space"):
        z = p.copy()
        z[-1] = max(p[-1], r / 2.0)
        return z
    if dom.kind == "ball":
        n = np.linalg.norm(p)
        if n <= r / 2.0:
            return np.zeros(dom.d)
        return p * (1.0 - r / (2.0 * n))
    if dom.kind == "exterior_ball":
        n = np.linalg.norm(p)
        return p * (1.0 + r / (2.0 * n))
    m = r / (2.0 * math.sqrt(2.0))
    return np.clip(p, m, dom.side - m)


@dataclass(frozen=True)
class ScaleContext:
    """Time scale plus the fatness data the point selection needs.

    ``kappa``, ``R0`` and ``T_horizon`` default to the domain values
    (with horizon ``R0**alpha``) when left unset.
    """

    alpha: float
    t: float
    kappa: float | None = None
    R0: float | None = None
    T_horizon: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise InputError("alpha must lie in (0, 2)")
        if self.t <= 0:
            raise InputError("time must be positive")
        for name in ("kappa", "R0", "T_horizon"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise InputError(f"{name} must be positive")
        if self.kappa is not None and self.kappa >= 1:
            raise InputError("kappa must lie in (0, 1)")

    def resolved(self, dom: DomainSpec) -> tuple[float, float, float]:
        kappa = self.kappa if self.kappa is not None else dom.kappa
        R0 = self.R0 if self.R0 is not None else dom.R0
        T = self.T_horizon if self.T_horizon is not None else (
            math.inf if math.isinf(R0) else R0 ** self.alpha)
        return kappa, R0, T


def point_at_scale(dom: DomainSpec, x, ctx: ScaleContext) -> np.ndarray:
    """Select a representative point at the scale ``t**(1/alpha)``.

    Returns ``x`` itself when its boundary distance already exceeds the
    fatness threshold, otherwise a witness point within the scaled
    radius. The output satisfies both selection inequalities: it moves
    less than ``theta = min(1, R0**alpha/T) * t**(1/alpha)`` and its
    boundary distance is at least ``max(delta(x), kappa*theta)``.
    """
    p = as_point(dom, x)
    kappa, R0, T = ctx.resolved(dom)
    upper = max(T, R0 ** ctx.alpha) if math.isfinite(R0) else math.inf
    if not 0.0 < ctx.t < upper:
        raise RangeError(f"t={ctx.t} outside (0, {upper})")
    factor = 1.0 if math.isinf(R0) else min(1.0, R0 ** ctx.alpha / T)
    theta = factor * ctx.t ** (1.0 / ctx.alpha)
    if math.isfinite(R0) and theta >= R0:
        raise RangeError("scaled radius reaches the localization length")
    if delta_D(dom, p) >= kappa * theta:
        return p
    return fat_witness(dom, p, theta)


def strip_volume_mc(dom: DomainSpec, x, r: float, s: float, n: int,
                    seed: int) -> tuple[float, float]:
    """Monte Carlo volume of the boundary strip inside ``B(x, r)``.

    Estimates the volume of points of D within distance ``r`` of ``x``
    whose boundary distance is below ``s``. Rejection sampling from the
    bounding box of the ball; returns the estimate and a 95% confidence
    half-width.
    """
    p = as_point(dom, x)
    if r <= 0 or s < 0:
        raise InputError("radii must be nonnegative, r positive")
    if n < 1000:
        raise InputError("need at least 1000 samples")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    box_vol = (2.0 * r) ** dom.d
    total = 0
    hits = 0
    batch = 100_000
    while total < n:
        m = min(batch, n - total)
        pts = p + rng.uniform(-r, r, size=(m, dom.d))
        inside = np.linalg.norm(pts - p, axis=1) < r
        delta = delta_many(dom, pts)
        ok = inside & (delta > 0.0) & (delta < s)
        hits += int(ok.sum())
        total += m
    frac = hits / total
    est = box_vol * frac
    ci = 1.96 * box_vol * math.sqrt(max(frac * (1.0 - frac), 0.0) / total)
    return est, ci


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.exp(gammaln(d / 2.0 + 1.0))


def cap_fraction(d: int, t: float) -> float:
    """Fraction of the unit d-ball with one coordinate at least ``t``."""
    t = min(1.0, max(-1.0, t))
    if t >= 0:
        return 0.5 * float(betainc((d + 1) / 2.0, 0.5, 1.0 - t * t))
    return 1.0 - 0.5 * float(betainc((d + 1) / 2.0, 0.5, 1.0 - t * t))


def _lens_volume(d: int, R: float, r: float, dist: float) -> float:
    """Volume of the intersection of B(0, R) and a ball of radius r at
    distance ``dist`` from the origin."""
    if dist >= R + r:
        return 0.0
    if dist + r <= R:
        return unit_ball_volume(d) * r ** d
    if dist + R <= r:
        return unit_ball_volume(d) * R ** d
    a = (dist * dist + R * R - r * r) / (2.0 * dist)
    vd = unit_ball_volume(d)
    return (vd * R ** d * cap_fraction(d, a / R)
            + vd * r ** d * cap_fraction(d, (dist - a) / r))


def ball_volume_in_domain(dom: DomainSpec, center, r: float) -> float:
    """Exact volume of ``B(center, r)`` intersected with the closure of D.

    Closed forms for the half-space family and ball-like domains; the
    box falls back to a fixed-seed Monte Carlo estimate accurate to a
    few tenths of a percent.
    """
    c = as_point(dom, center)
    if r <= 0:
        raise InputError("radius must be positive")
    if dom.kind == "half_line":
        lo = max(0.0, c[0] - r)
        hi = max(0.0, c[0] + r)
        return hi - lo
    if dom.kind == "half_space":
        h = c[-1]
        return unit_ball_volume(dom.d) * r ** dom.d * cap_fraction(dom.d, -h / r)
    if dom.kind == "ball":
        return _lens_volume(dom.d, dom.radius, r, float(np.linalg.norm(c)))
    if dom.kind == "exterior_ball":
        full = unit_ball_volume(dom.d) * r ** dom.d
        return full - _lens_volume(dom.d, dom.radius, r, float(np.linalg.norm(c)))
    rng = np.random.default_rng(np.random.SeedSequence(918273))
    pts = c + rng.uniform(-r, r, size=(200_000, 2))
    inside = (np.linalg.norm(pts - c, axis=1) < r) & contains_many(dom, pts, closed=True)
    return float((2.0 * r) ** 2 * inside.mean())
