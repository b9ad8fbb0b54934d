"""Jump-kernel evaluators and their tail functionals.

Five kernel families on the domain catalog, all of the shape
``|x-y|^{-d-alpha}`` times a boundary blow-up factor:

* ``comparison``: the reference form with an explicit weight and unit
  constant.
* ``plain_stable``: the isotropic stable kernel with its exact
  normalizing constant.
* ``neumann``: adds jumps reflected through the complement, weighted
  by the complement renormalizer.
* ``trace``: adds the boundary excursion term built from the exit law
  of the complement half-space.
* ``resurrected``: adds return jumps distributed by a generator
  ``psi`` acting on the chord/depth ratio.

The last three reduce, on half-space geometry, to one shared
two-center integral over the complement, evaluated by iterated
adaptive quadrature (d <= 2) or importance-sampled Monte Carlo
(d >= 3). Closed-form normalizing constants are used on the
production path; every one of them has an independent quadrature
route used by the test suite.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hyp2f1

from . import geometry, weights
from .errors import (AccuracyError, DomainError, InputError, RangeError,
                     UnsupportedError)
from .quadrature import (DEFAULT_QUAD, QuadConfig, _adaptive_core,
                         integrate_adaptive, integrate_adaptive_multi)

_HALF = ("half_line", "half_space")


# ---------------------------------------------------------------------------
# Constants


def stable_constant(d: int, alpha: float) -> float:
    """Normalizer of the isotropic stable kernel.

    Equals 2^alpha Gamma((d+alpha)/2) / (pi^{d/2} |Gamma(-alpha/2)|),
    written via |Gamma(-a/2)| = (2/a) Gamma(1-a/2) to stay on the
    positive real axis.
    """
    _check_alpha(alpha)
    if d < 1:
        raise InputError("dimension must be >= 1")
    return (2.0 ** (alpha - 1.0) * alpha * math.gamma((d + alpha) / 2.0)
            / (math.pi ** (d / 2.0) * math.gamma(1.0 - alpha / 2.0)))


def transverse_constant(d: int, alpha_prime: float) -> float:
    """Mass picked up by integrating out the d-1 boundary-parallel
    coordinates of ``(|u|^2+1)^{-(d+a')/2}``."""
    return (math.pi ** ((d - 1) / 2.0) * math.gamma((1.0 + alpha_prime) / 2.0)
            / math.gamma((d + alpha_prime) / 2.0))


def resurrection_norm_constant(d: int, alpha: float, p: float) -> float:
    """Total mass of the unnormalized return-jump density at unit depth.

    Scale invariance makes this independent of the depth, so it is the
    normalizer for every starting point in the complement half-space.
    Requires p < min(1, alpha).
    """
    _check_alpha(alpha)
    if not 0.0 <= p < min(1.0, alpha):
        raise RangeError("return-jump exponent must lie in [0, min(1, alpha))")
    beta = math.gamma(1.0 - p) * math.gamma(alpha - p) / math.gamma(1.0 + alpha - 2.0 * p)
    return transverse_constant(d, alpha - 2.0 * p) * beta


def poisson_constant(d: int, alpha: float) -> float:
    """Constant in the closed-form half-space exit density."""
    _check_alpha(alpha)
    return math.gamma(d / 2.0) * math.pi ** (-(d / 2.0 + 1.0)) * math.sin(math.pi * alpha / 2.0)


def green_constant(d: int, alpha: float) -> float:
    """Constant in the closed-form half-space occupation density."""
    _check_alpha(alpha)
    return math.gamma(d / 2.0) / (2.0 ** alpha * math.pi ** (d / 2.0)
                                  * math.gamma(alpha / 2.0) ** 2)


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 2.0:
        raise RangeError("stability index must lie in (0, 2)")


# ---------------------------------------------------------------------------
# Half-space Green function and exit density (classical plumbing)


_GREEN_USTAR = 1e8


def _green_profile(d: int, alpha: float, u: np.ndarray) -> np.ndarray:
    """The depth-product profile integral of the occupation density.

    The hypergeometric evaluation overflows for huge arguments, so
    beyond a crossover the remaining range uses the two-term expansion
    of the integrand, whose truncation error is below double
    precision there.
    """
    a2 = 0.5 * alpha
    e = 0.5 * (alpha - d)
    small = u <= _GREEN_USTAR
    us = np.where(small, u, 1.0)
    J = (us ** a2 / a2) * hyp2f1(0.5 * d, a2, a2 + 1.0, -us)
    if np.all(small):
        return J
    ub = np.where(small, _GREEN_USTAR, u)
    Js = (_GREEN_USTAR ** a2 / a2) * float(
        hyp2f1(0.5 * d, a2, a2 + 1.0, -_GREEN_USTAR))
    if e == 0.0:
        t0 = np.log(ub / _GREEN_USTAR)
    elif abs(e) < 1e-4:
        t0 = _GREEN_USTAR ** e * np.expm1(e * np.log(ub / _GREEN_USTAR)) / e
    else:
        t0 = (ub ** e - _GREEN_USTAR ** e) / e
    t1 = -(0.5 * d) * (ub ** (e - 1.0) - _GREEN_USTAR ** (e - 1.0)) / (e - 1.0)
    return np.where(small, J, Js + t0 + t1)


def _green_vec(d: int, alpha: float, z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Vectorized occupation density, z fixed, W an (m, d) array of
    points strictly below the boundary."""
    dist2 = np.maximum(np.sum((z[None, :] - W) ** 2, axis=1), 1e-300)
    u = np.minimum(4.0 * z[-1] * W[:, -1] / dist2, 1e306)
    J = _green_profile(d, alpha, u)
    return green_constant(d, alpha) * dist2 ** (0.5 * (alpha - d)) * J


def green_half_space(d: int, alpha: float, z, w) -> float:
    """Occupation density of the stable process killed on leaving the
    lower half-space, both arguments strictly below the boundary."""
    _check_alpha(alpha)
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if z[-1] >= 0 or w[-1] >= 0:
        raise DomainError("both points must lie below the boundary")
    if np.array_equal(z, w):
        raise DomainError("coincident points")
    return float(_green_vec(d, alpha, z, w[None, :])[0])


def poisson_half_space(d: int, alpha: float, z, y, method: str = "closed",
                       cfg: QuadConfig | None = None) -> float:
    """Exit density of the lower half-space: start z below the
    boundary, land at y above it.

    ``closed`` uses the classical formula; ``quad`` rebuilds it as the
    occupation density integrated against the stable kernel, which is
    the independent route the tests compare against.
    """
    _check_alpha(alpha)
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if z[-1] >= 0 or y[-1] <= 0:
        raise DomainError("need z below and y above the boundary")
    if method == "closed":
        dist = float(np.linalg.norm(z - y))
        return (poisson_constant(d, alpha)
                * (-z[-1] / y[-1]) ** (alpha / 2.0) * dist ** (-d))
    if method != "quad":
        raise InputError(f"unknown method {method!r}")
    cfg = cfg or DEFAULT_QUAD
    c = stable_constant(d, alpha)
    zd = -z[-1]
    if d == 1:
        def f(wd):
            W = -wd[:, None]
            return _green_vec(1, alpha, z, W) * c * (wd + y[0]) ** (-1.0 - alpha)
        # the occupation density is singular at the start depth
        v1, _ = integrate_adaptive(f, 0.0, zd, cfg, singular="both")
        v2, _ = integrate_adaptive(f, zd, 4 * zd + 4, cfg, singular="left")
        v3, _ = integrate_adaptive(f, 4 * zd + 4, np.inf, cfg)
        return v1 + v2 + v3
    if d != 2:
        raise UnsupportedError("quadrature route is implemented for d <= 2")

    def outer(h):
        out = np.empty_like(h)
        for i, depth in enumerate(h):
            def g(w1):
                W = np.stack([w1, np.full_like(w1, -depth)], axis=1)
                dy2 = (w1 - y[0]) ** 2 + (depth + y[1]) ** 2
                return _green_vec(2, alpha, z, W) * c * dy2 ** (-0.5 * (2.0 + alpha))
            # peak at the lateral coordinate of z, width |depth - zd|
            va, _ = integrate_adaptive(g, -np.inf, z[0], cfg)
            vb, _ = integrate_adaptive(g, z[0], np.inf, cfg)
            out[i] = va + vb
        return out

    v1, _ = integrate_adaptive(outer, 0.0, zd, cfg, singular="both")
    v2, _ = integrate_adaptive(outer, zd, 4 * zd + 4, cfg, singular="left")
    v3, _ = integrate_adaptive(outer, 4 * zd + 4, np.inf, cfg)
    return v1 + v2 + v3


# ---------------------------------------------------------------------------
# The shared two-center complement integral
#
# cross(d, w, ax, ay; x, y) integrates |z_d|^w |x-z|^{-(d+ax)}
# |y-z|^{-(d+ay)} over the lower half-space, for x, y in the upper
# half-space. It depends on (s, xd, yd) = (lateral separation, depths)
# and scales with exponent w - d - ax - ay, which pins the reduction
# used below.


def cross_integral(d: int, w: float, ax: float, ay: float, s: float,
                   xd: float, yd: float, cfg: QuadConfig | None = None,
                   n_mc: int = 400_000, seed: int = 0) -> tuple[float, float]:
    """Two-center complement integral; returns (value, error estimate).

    d=1 and d=2 run iterated adaptive quadrature; d>=3 falls back to
    importance sampling from a power-law proposal around x, with the
    95% CI reported as the error.
    """
    cfg = cfg or DEFAULT_QUAD
    if xd <= 0 or yd <= 0 or s < 0:
        raise DomainError("need positive depths and nonnegative separation")
    if w <= -1:
        raise InputError("depth exponent must be > -1")
    lam = xd + yd + s
    scale = lam ** (w - d - ax - ay)
    if d == 1:
        v, e = _cross_d1(w, ax, ay, xd / lam, yd / lam, cfg)
    elif d == 2:
        v, e = _cross_d2(w, ax, ay, s / lam, xd / lam, yd / lam, cfg)
    else:
        v, e = _cross_mc(d, w, ax, ay, s / lam, xd / lam, yd / lam, n_mc, seed)
    return scale * v, scale * e


def _cross_d1(w, ax, ay, xd, yd, cfg):
    def f(u):
        return u ** w * (xd + u) ** (-1.0 - ax) * (yd + u) ** (-1.0 - ay)
    v1, e1 = integrate_adaptive(f, 0.0, 1.0, cfg,
                                singular="left" if w < 1 else "none")
    v2, e2 = integrate_adaptive(f, 1.0, np.inf, cfg)
    return v1 + v2, e1 + e2


def _theta_breaks(s, a, b):
    pts = [0.0, -a, a, -4 * a, 4 * a, s, s - b, s + b, s - 4 * b, s + 4 * b,
           0.5 * s, -1.0, 1.0, s + 1.0, -8.0, s + 8.0]
    th = np.arctan(np.array(pts))
    th = np.unique(np.clip(th, -math.pi / 2, math.pi / 2))
    th = np.concatenate([[-math.pi / 2], th[(th > -math.pi / 2) & (th < math.pi / 2)],
                         [math.pi / 2]])
    keep = np.concatenate([[True], np.diff(th) > 1e-9])
    th = th[keep]
    return list(zip(th[:-1], th[1:]))


def _cross_d2(w, ax, ay, s, xd, yd, cfg):
    ex = 0.5 * (2.0 + ax)
    ey = 0.5 * (2.0 + ay)
    inner_cfg = QuadConfig(rel_tol=cfg.rel_tol / 5.0, abs_tol=cfg.abs_tol / 10.0,
                           max_depth=cfg.max_depth, max_intervals=cfg.max_intervals)

    def outer(t):
        # depth v mapped from (0,1); one shared inner pass per batch
        t = np.asarray(t)
        v = t / (1.0 - t)
        jac = (1.0 - t) ** -2.0
        a = xd + v
        b = yd + v

        def g(theta):
            z1 = np.tan(theta)
            sec2 = 1.0 + z1 * z1
            dx2 = z1[:, None] ** 2 + a[None, :] ** 2
            dy2 = (z1[:, None] - s) ** 2 + b[None, :] ** 2
            return sec2[:, None] * dx2 ** -ex * dy2 ** -ey
        segs = _theta_breaks(s, float(a.min()), float(b.min()))
        inner, _ = _adaptive_core(g, segs, inner_cfg)
        return v ** w * inner * jac

    seeds = sorted({min(u / (1.0 + u), 1.0 - 1e-9)
                    for u in (xd, yd, max(s, 1e-3), 1.0, 4.0)})
    segs = [(0.0, seeds[0])] + list(zip(seeds[:-1], seeds[1:])) + [(seeds[-1], 1.0)]
    vals, errs = _adaptive_core(outer, segs, cfg)
    return float(vals[0]), float(errs[0])


def _cross_mc(d, w, ax, ay, s, xd, yd, n, seed):
    if ax <= 0:
        raise InputError("MC route needs a positive x-side exponent")
    x = np.zeros(d)
    x[-1] = xd
    y = np.zeros(d)
    y[0] = s
    y[-1] = yd
    surf = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    ss = np.random.SeedSequence(seed)
    means = []
    for child in ss.spawn(16):
        rng = np.random.default_rng(child)
        m = max(n // 16, 1000)
        r = xd * rng.random(m) ** (-1.0 / ax)
        u = rng.standard_normal((m, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        z = x + r[:, None] * u
        ok = z[:, -1] < 0
        zr = z[ok]
        fy = np.sum((zr - y) ** 2, axis=1) ** (-0.5 * (d + ay))
        vals = np.zeros(m)
        # the proposal density cancels the |x-z| factor exactly
        vals[ok] = (-zr[:, -1]) ** w * fy * surf / (ax * xd ** ax)
        means.append(vals.mean())
    means = np.array(means)
    return float(means.mean()), float(1.96 * means.std(ddof=1) / 4.0)


# ---------------------------------------------------------------------------
# Kernel specs


@dataclass(frozen=True)
class KernelSpec:
    """One evaluable kernel: kind + domain + index + shape data."""

    kind: str
    dom: geometry.DomainSpec
    alpha: float
    weight: weights.WeightSpec | None = None
    psi: weights.PsiSpec | None = None
    quad: QuadConfig = field(default_factory=lambda: DEFAULT_QUAD)

    def __post_init__(self):
        _check_alpha(self.alpha)
        kinds = ("comparison", "plain_stable", "neumann", "trace", "resurrected")
        if self.kind not in kinds:
            raise InputError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "comparison" and self.weight is None:
            raise InputError("comparison kernel needs a weight")
        if self.kind == "resurrected":
            if self.psi is None:
                raise InputError("resurrected kernel needs a psi spec")
            if self.psi.gamma2 >= min(1.0, self.alpha):
                raise InputError(
                    "psi upper scaling exponent must be < min(1, alpha)")
        if self.kind in ("trace", "resurrected") and self.dom.kind not in _HALF:
            raise UnsupportedError(
                f"{self.kind} kernel is defined on half-space geometry only")
        if self.kind == "neumann" and self.dom.kind == "box_2d":
            raise UnsupportedError(
                "neumann kernel on the box is not implemented (no closed "
                "complement renormalizer; use half-space or ball geometry)")


@dataclass(frozen=True)
class KernelValue:
    value: float
    err: float


@dataclass(frozen=True)
class TailValue:
    value: float
    err: float

    def __post_init__(self):
        if self.value < 0:
            raise InputError("tail integrals are nonnegative")


def _pair_points(dom, x, y):
    xa = geometry.as_point(dom, x)
    ya = geometry.as_point(dom, y)
    if geometry.delta_D(dom, xa) <= 0 or geometry.delta_D(dom, ya) <= 0:
        raise DomainError("kernel arguments must lie strictly inside the domain")
    if np.array_equal(xa, ya):
        raise DomainError("kernel arguments must be distinct")
    return xa, ya


def _half_coords(dom, xa, ya):
    """(lateral separation, depth of x, depth of y) for half geometry."""
    if dom.kind == "half_line":
        return 0.0, float(xa[0]), float(ya[0])
    s = float(np.linalg.norm(xa[:-1] - ya[:-1]))
    return s, float(xa[-1]), float(ya[-1])


# ---------------------------------------------------------------------------
# Closed-form kernels


def plain_stable(spec: KernelSpec, x, y) -> KernelValue:
    xa, ya = _pair_points(spec.dom, x, y)
    d = spec.dom.d
    r = float(np.linalg.norm(xa - ya))
    return KernelValue(stable_constant(d, spec.alpha) * r ** (-d - spec.alpha), 0.0)


def comparison_kernel(spec: KernelSpec, x, y) -> KernelValue:
    """Reference kernel: |x-y|^{-d-alpha} times the blow-up weight of
    the truncated chord/depth ratio, unit constant."""
    xa, ya = _pair_points(spec.dom, x, y)
    d = spec.dom.d
    r = float(np.linalg.norm(xa - ya))
    a0 = spec.weight.a0
    dx = min(geometry.delta_D(spec.dom, xa), a0)
    dy = min(geometry.delta_D(spec.dom, ya), a0)
    arg = min(r, a0) ** 2 / (dx * dy)
    return KernelValue(r ** (-d - spec.alpha) * float(weights.eval_weight(spec.weight, arg)), 0.0)


# ---------------------------------------------------------------------------
# Complement renormalizer (the denominator of reflected jumps)


def neumann_norm(dom: geometry.DomainSpec, alpha: float, z,
                 cfg: QuadConfig | None = None, method: str = "auto"
                 ) -> tuple[float, float]:
    """Total stable jump rate from a complement point z into D.

    Half geometry has the closed form by scaling; every domain has a
    quadrature route (1-D radial with exact chord arcs for d=2).
    ``auto`` prefers the closed form where it exists.
    """
    cfg = cfg or DEFAULT_QUAD
    _check_alpha(alpha)
    za = np.asarray(z, dtype=float).reshape(-1)
    if za.size != dom.d:
        raise InputError("dimension mismatch")
    dc = geometry.delta_complement(dom, za)
    if dc <= 0:
        raise DomainError("renormalizer argument must lie inside the complement")
    c = stable_constant(dom.d, alpha)
    if method == "auto":
        method = "closed" if dom.kind in _HALF else "quad"
    if method == "closed":
        if dom.kind not in _HALF:
            raise InputError("closed renormalizer exists for half geometry only")
        return c * resurrection_norm_constant(dom.d, alpha, 0.0) * dc ** -alpha, 0.0
    if method != "quad":
        raise InputError(f"unknown method {method!r}")
    if dom.kind == "half_line":
        v, e = integrate_adaptive(lambda u: (u + dc) ** (-1.0 - alpha), 0.0, np.inf, cfg)
        return c * v, c * e
    if dom.d != 2:
        raise UnsupportedError("quadrature renormalizer is implemented for d <= 2")
    v, e = _radial_arc_integral(dom, za, alpha, cfg)
    return c * v, c * e


def _arc_inside(dom: geometry.DomainSpec, center: np.ndarray, svals: np.ndarray,
                shrink: float = 0.0) -> np.ndarray:
    """Angular measure of the circle of radius s around ``center``
    lying in D with boundary clearance > ``shrink`` (d=2 only)."""
    out = np.zeros_like(svals)
    if dom.kind == "half_space":
        h = center[-1] - shrink
        with np.errstate(invalid="ignore"):
            t = np.clip(h / svals, -1.0, 1.0)
        out = np.where(svals <= h, 2 * math.pi, math.pi + 2 * np.arcsin(t))
        return np.where(h <= -svals, 0.0, out)
    rho = float(np.linalg.norm(center))
    if dom.kind == "ball":
        R = dom.radius - shrink
        if R <= 0:
            return out
        # inside iff the chord angle condition holds
        full = svals <= R - rho
        num = R * R - rho * rho - svals ** 2
        den = 2.0 * rho * svals
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(den > 0, num / den, np.inf)
        part = 2.0 * np.arccos(np.clip(-m, -1.0, 1.0))
        out = np.where(full, 2 * math.pi, np.where(svals >= rho + R, 0.0, part))
        return out
    if dom.kind == "exterior_ball":
        R = dom.radius + shrink
        num = R * R - rho * rho - svals ** 2
        den = 2.0 * rho * svals
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(den > 0, num / den, -np.inf)
        inside_ball = 2.0 * np.arccos(np.clip(-m, -1.0, 1.0))
        inside_ball = np.where(svals >= rho + R, 0.0, inside_ball)
        inside_ball = np.where(svals <= R - rho, 2 * math.pi, inside_ball)
        return 2 * math.pi - inside_ball
    raise UnsupportedError(f"no closed arcs for domain kind {dom.kind!r}")


def _radial_arc_integral(dom, za, alpha, cfg):
    """integral over D of |z-w|^{-d-alpha} dw as a radial integral
    weighted by the in-domain arc length."""
    dc = geometry.delta_complement(dom, za)

    def f(svals):
        return _arc_inside(dom, za, svals) * svals ** (-1.0 - alpha)

    if dom.kind == "exterior_ball":
        far = float(np.linalg.norm(za)) + dom.radius
        # the band collapses when z sits at the center
        if far > dc * (1.0 + 1e-12):
            v1, e1 = integrate_adaptive(f, dc, far, cfg, singular="left")
        else:
            v1, e1 = 0.0, 0.0
        # beyond `far` the circle lies entirely in D
        v2 = 2 * math.pi * far ** -alpha / alpha
        return v1 + v2, e1
    hi = np.inf if dom.kind == "half_space" else float(np.linalg.norm(za)) + dom.radius
    v, e = integrate_adaptive(f, dc, hi, cfg, singular="left")
    return v, e


# ---------------------------------------------------------------------------
# Neumann kernel


def neumann_kernel(spec: KernelSpec, x, y, n_mc: int = 200_000,
                   seed: int = 0) -> KernelValue:
    """Stable kernel plus jumps reflected through the complement.

    Half geometry reduces the reflection term to the shared two-center
    integral with the closed renormalizer. Ball and exterior-ball
    domains estimate it by importance sampling around x with the
    radial-arc renormalizer tabulated once per evaluation batch.
    """
    xa, ya = _pair_points(spec.dom, x, y)
    d = spec.dom.d
    alpha = spec.alpha
    c = stable_constant(d, alpha)
    r = float(np.linalg.norm(xa - ya))
    direct = c * r ** (-d - alpha)
    if spec.dom.kind in _HALF:
        s, xd, yd = _half_coords(spec.dom, xa, ya)
        cross, err = cross_integral(d, alpha, alpha, alpha, s, xd, yd, spec.quad,
                                    seed=seed)
        c0 = resurrection_norm_constant(d, alpha, 0.0)
        return KernelValue(direct + (c / c0) * cross, (c / c0) * err)
    if spec.dom.d != 2:
        raise UnsupportedError("neumann kernel beyond d=2 needs half geometry")
    val, err = _neumann_reflect_mc(spec, xa, ya, n_mc, seed)
    return KernelValue(direct + val, err)


_NORM_INTERP_CACHE: dict = {}


def _norm_interp(dom, alpha, cfg):
    """log-log interpolant of the renormalizer over complement depth.

    Rotational symmetry makes the renormalizer radial, so one table
    per (domain, alpha) covers every complement point.
    """
    key = (dom.kind, dom.radius, alpha, cfg.rel_tol)
    hit = _NORM_INTERP_CACHE.get(key)
    if hit is not None:
        return hit
    if dom.kind == "ball":
        # complement points at |z| = R + delta, far range covers the
        # heavy tail of the MC proposal
        deltas = np.geomspace(1e-6, 1e8, 128) * dom.radius
        pts = [np.array([dom.radius + t, 0.0]) for t in deltas]
    else:
        deltas = np.geomspace(1e-6, 1.0, 64) * dom.radius
        pts = [np.array([dom.radius - t, 0.0]) for t in deltas]
    vals = np.array([neumann_norm(dom, alpha, p, cfg, method="quad")[0]
                     for p in pts])
    lx, ly = np.log(deltas), np.log(vals)

    def nu(dc):
        t = np.clip(np.log(dc), lx[0], lx[-1])
        return np.exp(np.interp(t, lx, ly))
    _NORM_INTERP_CACHE[key] = nu
    return nu


def _neumann_reflect_mc(spec, xa, ya, n, seed):
    dom, alpha = spec.dom, spec.alpha
    d = 2
    c = stable_constant(d, alpha)
    loose = QuadConfig(rel_tol=1e-8, abs_tol=1e-12)
    nu = _norm_interp(dom, alpha, loose)
    r0 = geometry.delta_D(dom, xa)
    surf = 2.0 * math.pi
    ss = np.random.SeedSequence(seed)
    means = []
    for child in ss.spawn(16):
        rng = np.random.default_rng(child)
        m = max(n // 16, 1000)
        rr = r0 * rng.random(m) ** (-1.0 / alpha)
        u = rng.standard_normal((m, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        z = xa + rr[:, None] * u
        depth_c = -geometry._signed_inner(dom, z)
        ok = depth_c > 0
        vals = np.zeros(m)
        if ok.any():
            zr = z[ok]
            jy = c * np.sum((zr - ya) ** 2, axis=1) ** (-0.5 * (d + alpha))
            vals[ok] = surf * c / (alpha * r0 ** alpha) * jy / nu(depth_c[ok])
        means.append(vals.mean())
    means = np.array(means)
    return float(means.mean()), float(1.96 * means.std(ddof=1) / 4.0)


# ---------------------------------------------------------------------------
# Trace kernel


def trace_kernel(spec: KernelSpec, x, y) -> KernelValue:
    """Stable kernel plus the boundary excursion term: jump into the
    complement, exit back through its closed-form exit density."""
    if spec.dom.kind not in _HALF:
        raise UnsupportedError("trace kernel needs half-space geometry")
    xa, ya = _pair_points(spec.dom, x, y)
    d = spec.dom.d
    alpha = spec.alpha
    c = stable_constant(d, alpha)
    r = float(np.linalg.norm(xa - ya))
    s, xd, yd = _half_coords(spec.dom, xa, ya)
    cross, err = cross_integral(d, alpha / 2.0, alpha, 0.0, s, xd, yd, spec.quad)
    cp = poisson_constant(d, alpha)
    n_term = c * cp * yd ** (-alpha / 2.0) * cross
    return KernelValue(c * r ** (-d - alpha) + n_term,
                       c * cp * yd ** (-alpha / 2.0) * err)


# ---------------------------------------------------------------------------
# Resurrected kernel


def _psi_exponent(psi: weights.PsiSpec) -> float:
    return 0.0 if psi.kind == "constant_one" else psi.p


def resurrection_norm(psi: weights.PsiSpec, alpha: float, d: int, z=None,
                      cfg: QuadConfig | None = None, method: str = "closed"
                      ) -> tuple[float, float]:
    """Normalizer of the return-jump density from complement point z.

    Scale invariance makes the closed value depth-free. The quadrature
    route integrates the unnormalized density over the domain (at the
    depth of z, or unit depth when z is omitted) and is the
    independent check.
    """
    _check_alpha(alpha)
    p = _psi_exponent(psi)
    if method == "closed":
        return resurrection_norm_constant(d, alpha, p), 0.0
    if method != "quad":
        raise InputError(f"unknown method {method!r}")
    cfg = cfg or DEFAULT_QUAD
    zd = 1.0 if z is None else -float(np.asarray(z, dtype=float).reshape(-1)[-1])
    if zd <= 0:
        raise DomainError("z must lie strictly below the boundary")
    far = 1e10  # decades integrated directly before the analytic power tail
    if d == 1:
        def f(yv):
            arg = yv / zd + 2.0 + zd / yv
            psi_v = np.asarray(weights.eval_psi(psi, arg))
            return zd ** alpha * psi_v * (yv + zd) ** (-1.0 - alpha)
    else:
        if d != 2:
            raise UnsupportedError("quadrature normalizer is implemented for d <= 2")
        inner_cfg = QuadConfig(rel_tol=cfg.rel_tol / 5.0, abs_tol=cfg.abs_tol / 10.0)

        def f(h):
            h = np.asarray(h)
            s = h + zd
            ratio = s * s / (h * zd)

            # lateral integral at each depth, scaled by s so every
            # component concentrates near theta = 0
            def g(theta):
                cth = np.cos(theta)
                arg = ratio[None, :] / (cth * cth)[:, None]
                psi_v = np.asarray(weights.eval_psi(psi, arg))
                return (zd ** alpha * s ** (-1.0 - alpha))[None, :] * psi_v \
                    * (cth ** alpha)[:, None]
            vals, _ = integrate_adaptive_multi(g, 0.0, 0.5 * np.pi, inner_cfg,
                                               singular="right")
            return 2.0 * vals

    v1, e1 = integrate_adaptive(f, 0.0, zd, cfg,
                                singular="left" if p > 0 else "none")
    v2, e2 = integrate_adaptive(lambda s: f(zd * np.exp(s)) * zd * np.exp(s),
                                0.0, math.log(far), cfg)
    hstar = zd * far
    tail = float(np.asarray(f(np.full(1, hstar)))[0]) * hstar / (alpha - p)
    return v1 + v2 + tail, e1 + e2 + abs(tail) / far


def resurrection_density(psi: weights.PsiSpec, alpha: float, z, y,
                         cfg: QuadConfig | None = None,
                         norm_method: str = "closed") -> float:
    """Return-jump density p(z, y): from complement point z to domain
    point y, normalized to unit mass over the upper half-space."""
    z = np.asarray(z, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if z.size != y.size:
        raise InputError("dimension mismatch")
    d = z.size
    if z[-1] >= 0 or y[-1] <= 0:
        raise DomainError("need z below and y above the boundary")
    dist2 = float(np.sum((z - y) ** 2))
    arg = dist2 / (y[-1] * -z[-1])
    raw = ((-z[-1]) ** alpha * float(weights.eval_psi(psi, arg))
           * dist2 ** (-0.5 * (d + alpha)))
    norm, _ = resurrection_norm(psi, alpha, d, z=z, cfg=cfg, method=norm_method)
    return raw / norm


def resurrected_kernel(spec: KernelSpec, x, y) -> KernelValue:
    """Stable-shaped kernel (unit constant) plus return jumps: jump
    into the lower half-space, come back via the return density."""
    xa, ya = _pair_points(spec.dom, x, y)
    d = spec.dom.d
    alpha = spec.alpha
    p = _psi_exponent(spec.psi)
    r = float(np.linalg.norm(xa - ya))
    s, xd, yd = _half_coords(spec.dom, xa, ya)
    cross, err = cross_integral(d, alpha - p, alpha, alpha - 2.0 * p, s, xd, yd,
                                spec.quad)
    c0 = resurrection_norm_constant(d, alpha, p)
    q = yd ** -p / c0 * cross
    return KernelValue(r ** (-d - alpha) + q, yd ** -p / c0 * err)


def evaluate(spec: KernelSpec, x, y, seed: int = 0) -> KernelValue:
    """Dispatch to the evaluator for spec.kind."""
    if spec.kind == "comparison":
        return comparison_kernel(spec, x, y)
    if spec.kind == "plain_stable":
        return plain_stable(spec, x, y)
    if spec.kind == "neumann":
        return neumann_kernel(spec, x, y, seed=seed)
    if spec.kind == "trace":
        return trace_kernel(spec, x, y)
    return resurrected_kernel(spec, x, y)


# ---------------------------------------------------------------------------
# Tail integrals


def tail_integral(spec: KernelSpec, x, r: float, r_outer: float = math.inf,
                  min_delta: float = 0.0) -> TailValue:
    """Jump rate from x past distance r (and within r_outer), i.e. the
    kernel integrated over the in-domain annulus, by dyadic radii.

    ``min_delta`` further restricts the target to boundary clearance
    above that value (the annulus used by the two-sided tail checks).
    Closed-form kernels only; an unbounded outer radius uses the
    measured geometric decay of the dyadic pieces to bound the
    remainder, which lands in ``err``.
    """
    if spec.kind not in ("comparison", "plain_stable"):
        raise UnsupportedError("tail integrals cover closed-form kernels only")
    if not r > 0:
        raise InputError("inner radius must be positive (the kernel is "
                         "non-integrable at 0)")
    if not r < r_outer:
        raise InputError("need r < r_outer")
    if not 0.0 <= min_delta < math.inf:
        raise InputError("min_delta must be finite and nonnegative")
    dom = spec.dom
    xa = geometry.as_point(dom, x)
    if geometry.delta_D(dom, xa) <= 0:
        raise DomainError("tail base point must lie inside the domain")
    if dom.kind == "box_2d":
        raise UnsupportedError("box tails are estimated by region MC in the "
                               "simulation layer, not here")
    const = stable_constant(dom.d, spec.alpha) if spec.kind == "plain_stable" else 1.0
    w = spec.weight if spec.kind == "comparison" else weights.WeightSpec("constant_one")
    if (math.isinf(r_outer) and math.isinf(w.a0) and math.isinf(dom.diam)
            and w.beta_bar >= spec.alpha):
        raise InputError("divergent tail: untruncated weight growing at least "
                         "as fast as the jump decay over an unbounded domain")
    if (min_delta == 0.0 and w.beta_bar >= 1.0
            and r_outer > geometry.delta_D(dom, xa)):
        raise InputError("divergent tail: weight index at or above the "
                         "boundary codimension with the region touching "
                         "the boundary")
    cfg = spec.quad

    def shell_value(lo, hi):
        if dom.d == 1:
            return _tail_piece_d1(dom, w, spec.alpha, float(xa[0]), lo, hi,
                                  min_delta, cfg)
        return _tail_piece_d2(dom, w, spec.alpha, xa, lo, hi, min_delta, cfg)

    # beyond this radius the annulus no longer meets the domain
    reach = math.inf
    if dom.kind == "ball":
        reach = float(np.linalg.norm(xa)) + dom.radius
    total = 0.0
    total_err = 0.0
    lo = r
    prev = None
    rem = 0.0
    shells = 0
    while lo < r_outer and lo < reach:
        hi = min(2.0 * lo, r_outer)
        v, e = shell_value(lo, hi)
        total += v
        total_err += e
        shells += 1
        if math.isinf(r_outer):
            if prev is not None and 0.0 < v < prev:
                q = v / prev
                rem = v * q / (1.0 - q)
                if rem <= max(cfg.abs_tol, cfg.rel_tol * abs(total)):
                    break
            prev = v
            if shells >= 200:
                raise AccuracyError("tail decays too slowly for the dyadic "
                                    "shell budget", value=const * total)
        lo = hi
    if lo >= reach:
        rem = 0.0  # the shells left the domain; nothing got truncated
    return TailValue(const * total, const * (total_err + rem))


def _weight_at(w, dist, dx, dy):
    a0 = w.a0
    arg = np.minimum(dist, a0) ** 2 / (np.minimum(dx, a0) * np.minimum(dy, a0))
    return np.asarray(weights.eval_weight(w, arg))


def _tail_piece_d1(dom, w, alpha, x0, lo, hi, min_delta, cfg):
    if dom.kind != "half_line":
        raise UnsupportedError("1-D tails cover the half line")
    dx = geometry.delta_D(dom, np.array([x0]))
    total, terr = 0.0, 0.0
    pieces = []
    left_lo = max(x0 - hi, min_delta)
    left_hi = x0 - lo
    if left_lo < left_hi:
        pieces.append((left_lo, left_hi))
    right_lo = max(x0 + lo, min_delta)
    right_hi = x0 + hi
    if right_lo < right_hi:
        pieces.append((right_lo, right_hi))

    def f(yv):
        return np.abs(yv - x0) ** (-1.0 - alpha) * _weight_at(w, np.abs(yv - x0), dx, yv)

    for a, b in pieces:
        # the weight blows up where the piece touches the boundary
        v, e = integrate_adaptive(f, a, b, cfg,
                                  singular="left" if a <= 0.0 else "none")
        total += v
        terr += e
    return total, terr


def _tail_piece_d2(dom, w, alpha, xa, lo, hi, min_delta, cfg):
    dx = geometry.delta_D(dom, xa)
    inner_cfg = QuadConfig(rel_tol=cfg.rel_tol / 5.0, abs_tol=cfg.abs_tol / 10.0)
    if math.isinf(hi):
        raise InputError("dyadic pieces are finite by construction")

    def radial(svals):
        svals = np.asarray(svals)
        arcs = _arc_inside(dom, xa, svals, shrink=min_delta)
        out = np.zeros_like(svals)
        run = arcs > 1e-12
        if not run.any():
            return out
        sr = svals[run]
        th_lo, th_hi = _arc_bounds(dom, xa, sr, min_delta)

        def g(tau, bar=None):
            dy = _clearance_on_arc(dom, xa, sr, th_lo, th_hi, tau, min_delta,
                                   bar=bar)
            dy = np.maximum(dy, 1e-300)
            return _weight_at(w, sr[None, :], dx, dy)

        if min_delta > 0:
            # clearance is bounded below, no endpoint blow-up
            vals, _ = _adaptive_core(g, [(0.0, 0.5), (0.5, 1.0)], inner_cfg)
        else:
            vals, _ = _adaptive_multi_sing(g, inner_cfg)
        out[run] = vals * (th_hi - th_lo) * sr ** (-1.0 - alpha)
        return out

    # the arc count changes at the tangency radii, kinking the radial
    # integrand; keep those radii on segment boundaries
    if dom.kind == "half_space":
        crit = [xa[1] - min_delta]
    else:
        rho = float(np.linalg.norm(xa))
        rp = dom.radius + (min_delta if dom.kind == "exterior_ball" else -min_delta)
        crit = [abs(rho - rp), rho + rp]
    cuts = sorted({lo, hi, *(s for s in crit if lo < s < hi)})
    v = 0.0
    e = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        sv, se = integrate_adaptive(radial, a, b, cfg)
        v += sv
        e += se
    return v, e


def _clearance_on_arc(dom, xa, sr, th_lo, th_hi, tau, shrink, bar=None):
    """Boundary clearance at angle ``th_lo + (th_hi-th_lo)*tau`` on the
    circle of radius sr around xa, shape (len(tau), len(sr)).

    Near the ends of a partial arc the clearance is a difference of
    nearly equal quantities, so it is rebuilt from the angular offset
    to the nearer arc endpoint, where the difference is exact. ``bar``
    is 1 - tau supplied unrounded when the caller has it.
    """
    if bar is None:
        bar = 1.0 - tau
    width = th_hi - th_lo
    th = th_lo[None, :] + width[None, :] * tau[:, None]
    px = xa[0] + sr[None, :] * np.cos(th)
    py = xa[1] + sr[None, :] * np.sin(th)
    direct = _delta_on_circle(dom, px, py)
    partial = width < 2.0 * math.pi - 1e-12
    if not partial.any():
        return direct
    b_l = width[None, :] * tau[:, None]
    b_r = width[None, :] * bar[:, None]
    B = np.minimum(b_l, b_r)
    half2 = 2.0 * np.sin(0.5 * B) ** 2
    sinB = np.sin(B)
    if dom.kind == "half_space":
        h = xa[1] - shrink
        slope = np.where(b_l <= b_r, np.cos(th_lo)[None, :] * np.ones_like(B),
                         -np.cos(th_hi)[None, :] * np.ones_like(B))
        clear = h * half2 + sr[None, :] * slope * sinB
        return np.where(partial[None, :], clear + shrink, direct)
    rho = float(np.linalg.norm(xa))
    q = np.sqrt(px * px + py * py)
    if dom.kind == "ball":
        Rp = dom.radius - shrink
        m = (Rp * Rp - rho * rho - sr ** 2) / (2.0 * rho * sr)
        sinH = np.sqrt(np.maximum(0.0, 1.0 - m * m))
        num = 2.0 * rho * sr[None, :] * (m[None, :] * half2 + sinH[None, :] * sinB)
        clear = num / (Rp + q)
        return np.where(partial[None, :], clear + shrink, direct)
    if dom.kind == "exterior_ball":
        Rp = dom.radius + shrink
        m = (Rp * Rp - rho * rho - sr ** 2) / (2.0 * rho * sr)
        sinP = np.sqrt(np.maximum(0.0, 1.0 - m * m))
        num = 2.0 * rho * sr[None, :] * (-m[None, :] * half2 + sinP[None, :] * sinB)
        clear = num / (q + Rp)
        return np.where(partial[None, :], clear + shrink, direct)
    return direct


def _adaptive_multi_sing(g, cfg):
    """Integrate components of g over (0,1) with blow-up at both ends,
    via the square-root substitution on each half.

    ``g(tau, bar)`` receives both the coordinate and its complement so
    the side being zoomed keeps its offset exact instead of losing it
    to 1 - u*u rounding."""
    def left(u):
        u2 = u * u
        return g(u2, 1.0 - u2) * 2.0 * u[:, None]

    def right(u):
        u2 = u * u
        return g(1.0 - u2, u2) * 2.0 * u[:, None]
    h = math.sqrt(0.5)
    v1, e1 = _adaptive_core(left, [(0.0, h)], cfg)
    v2, e2 = _adaptive_core(right, [(0.0, h)], cfg)
    return v1 + v2, e1 + e2


def _delta_on_circle(dom, px, py):
    if dom.kind == "half_space":
        return py
    rho = np.sqrt(px * px + py * py)
    if dom.kind == "ball":
        return dom.radius - rho
    return rho - dom.radius


def _arc_bounds(dom, center, svals, shrink):
    """Start/end angles of the in-domain arc (single arc per radius
    for half-space/ball/exterior-ball geometry)."""
    if dom.kind == "half_space":
        h = center[-1] - shrink
        t = np.clip(h / svals, -1.0, 1.0)
        lo = np.where(svals <= h, -math.pi, -np.arcsin(t))
        hi = np.where(svals <= h, math.pi, math.pi + np.arcsin(t))
        return lo, hi
    rho = float(np.linalg.norm(center))
    phi = math.atan2(center[1], center[0])
    if dom.kind == "ball":
        R = dom.radius - shrink
        num = R * R - rho * rho - svals ** 2
        den = 2.0 * rho * svals
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(den > 0, num / den, np.inf)
        half = np.arccos(np.clip(-m, -1.0, 1.0))
        # arc is centered on the direction back through the origin
        ctr = phi + math.pi
        full = svals <= R - rho
        return np.where(full, -math.pi, ctr - half), np.where(full, math.pi, ctr + half)
    R = dom.radius + shrink
    num = R * R - rho * rho - svals ** 2
    den = 2.0 * rho * svals
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(den > 0, num / den, -np.inf)
    half_in = np.arccos(np.clip(-m, -1.0, 1.0))
    half_in = np.where(svals >= rho + R, 0.0, half_in)
    half_in = np.where(svals <= R - rho, math.pi, half_in)
    # complement arc, centered away from the origin
    ctr = phi
    return ctr - (math.pi - half_in), ctr + (math.pi - half_in)


# ---------------------------------------------------------------------------
# Hypothesis check: bounded two-sided comparison against a weight


@dataclass(frozen=True)
class CondAResult:
    ratios: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    cap: float

    @property
    def min(self) -> float:
        return float(self.ratios.min())

    @property
    def max(self) -> float:
        return float(self.ratios.max())

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))

    @property
    def passed(self) -> bool:
        return self.max / self.min <= self.cap


def sample_pairs(dom: geometry.DomainSpec, n: int, seed: int,
                 delta_range=(1e-3, 1e2), sep_range=(1e-2, 1e2)) -> tuple:
    """Point pairs with boundary distances log-stratified across the
    requested decades (clipped to what the domain can host)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    d = dom.d
    hi_cap = dom.R0 / 4 if math.isfinite(dom.R0) else delta_range[1]
    dlo, dhi = delta_range[0], min(delta_range[1], hi_cap)
    xs = np.empty((n, d))
    ys = np.empty((n, d))
    for i in range(n):
        while True:
            ax = math.exp(rng.uniform(math.log(dlo), math.log(dhi)))
            ay = math.exp(rng.uniform(math.log(dlo), math.log(dhi)))
            if dom.kind == "half_line":
                x, y = np.array([ax]), np.array([ay])
            elif dom.kind == "half_space":
                h = math.exp(rng.uniform(math.log(sep_range[0]), math.log(sep_range[1])))
                off = np.zeros(d)
                off[: d - 1] = rng.standard_normal(d - 1)
                nrm = np.linalg.norm(off[: d - 1])
                if nrm > 0:
                    off[: d - 1] *= h / nrm
                x = np.zeros(d)
                x[-1] = ax
                y = off
                y[-1] = ay
            elif dom.kind in ("ball", "exterior_ball"):
                u1 = rng.standard_normal(d)
                u1 /= np.linalg.norm(u1)
                u2 = rng.standard_normal(d)
                u2 /= np.linalg.norm(u2)
                if dom.kind == "ball":
                    x = (dom.radius - ax) * u1
                    y = (dom.radius - ay) * u2
                else:
                    x = (dom.radius + ax) * u1
                    y = (dom.radius + ay) * u2
            else:
                m = dom.side / 2.0
                x = rng.uniform(0, dom.side, size=d)
                y = rng.uniform(0, dom.side, size=d)
                x[0] = min(ax, m)
                y[0] = min(ay, m)
            if np.linalg.norm(x - y) > 1e-9 * (1 + np.linalg.norm(x)):
                xs[i] = x
                ys[i] = y
                break
    return xs, ys


def check_condition_A(spec: KernelSpec, weight: weights.WeightSpec, A0: float,
                      n_pairs: int, seed: int, cap: float = 50.0,
                      delta_range=(1e-3, 1e2), sep_range=(1e-2, 1e2)
                      ) -> CondAResult:
    """Ratio of the kernel to the weighted reference form over a
    stratified pair sample. Bounded spread means the kernel satisfies
    the two-sided comparison with this weight."""
    if n_pairs < 10:
        raise InputError("need at least 10 pairs for a meaningful spread")
    xs, ys = sample_pairs(spec.dom, n_pairs, seed, delta_range, sep_range)
    d = spec.dom.d
    ratios = np.empty(n_pairs)
    for i in range(n_pairs):
        kv = evaluate(spec, xs[i], ys[i], seed=seed + 7919 * i)
        r = float(np.linalg.norm(xs[i] - ys[i]))
        dx = min(geometry.delta_D(spec.dom, xs[i]), A0)
        dy = min(geometry.delta_D(spec.dom, ys[i]), A0)
        ref = r ** (-d - spec.alpha) * float(
            weights.eval_weight(weight, min(r, A0) ** 2 / (dx * dy)))
        ratios[i] = kv.value / ref
    return CondAResult(ratios=ratios, xs=xs, ys=ys, cap=cap)


# ---------------------------------------------------------------------------
# CSV emission


def write_kernel_csv(path, d: int, rows) -> None:
    """Case table: kernel name, coordinates, measured value and error,
    reference bound value, and their ratio."""
    header = (["kernel"] + [f"x{i+1}" for i in range(d)]
              + [f"y{i+1}" for i in range(d)]
              + ["value", "err", "bound_value", "ratio"])
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for name, xv, yv, value, err, bound, ratio in rows:
            out.writerow([name] + [repr(float(c)) for c in np.atleast_1d(xv)]
                         + [repr(float(c)) for c in np.atleast_1d(yv)]
                         + [repr(float(value)), repr(float(err)),
                            repr(float(bound)), repr(float(ratio))])
