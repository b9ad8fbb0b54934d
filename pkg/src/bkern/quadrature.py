"""Singular-integral machinery shared by the kernel evaluators.

Three tools live here. A batched adaptive Gauss-Kronrod 7/15 rule
drives every deterministic 1-D integral, including a variant that
integrates many integrands over a shared interval queue, which is what
makes the nested 2-D kernel quadratures affordable. Dyadic-annulus
panel sums decompose radial tails scale by scale. A stratified Monte
Carlo integrator handles regions where deterministic rules are not
worth the trouble.

Integrands must be vectorized: they receive a float array and return
an array of matching leading shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import AccuracyError, InputError

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]. The embedded 7-point
# Gauss rule sits on the odd-index nodes.
_XGK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and budget for the adaptive rule.

    ``annulus_range`` caps how far dyadic tail decompositions reach
    when the outer radius is infinite.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    max_depth: int = 52
    max_intervals: int = 4096
    annulus_range: tuple[float, float] = (1e-12, 1e18)

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InputError("tolerances must be positive")
        if self.annulus_range[0] >= self.annulus_range[1]:
            raise InputError("annulus_range must be increasing")


DEFAULT_QUAD = QuadConfig()


def _gk15_multi(g, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Apply the 7/15 pair on each interval. Returns (n, k) arrays."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _XGK[None, :]
    fx = np.asarray(g(x.ravel()), dtype=float)
    if fx.ndim == 1:
        fx = fx[:, None]
    k = fx.shape[1]
    fx = fx.reshape(a.size, 15, k)
    if not np.all(np.isfinite(fx)):
        raise AccuracyError("integrand returned a non-finite value")
    ik = h[:, None] * np.einsum("j,njk->nk", _WGK, fx)
    ig = h[:, None] * np.einsum("j,njk->nk", _WG, fx[:, 1::2, :])
    return ik, np.abs(ik - ig)


def _adaptive_core(g, segments, cfg: QuadConfig) -> tuple[np.ndarray, np.ndarray]:
    """Refine a starting segment list until every component converges.

    ``g`` maps an (m,) array to (m,) or (m, k). Returns per-component
    values and error estimates, both of shape (k,).
    """
    a = np.array([s[0] for s in segments], dtype=float)
    b = np.array([s[1] for s in segments], dtype=float)
    depth = np.zeros(a.size, dtype=int)
    vals, errs = _gk15_multi(g, a, b)
    while True:
        tot = vals.sum(axis=0)
        tot_err = errs.sum(axis=0)
        tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(tot))
        if np.all(tot_err <= tol):
            return tot, tot_err
        score = (errs / tol[None, :]).max(axis=1)
        splittable = depth < cfg.max_depth
        if a.size >= cfg.max_intervals or not np.any(splittable & (score > 0)):
            raise AccuracyError(
                "tolerance not reached (divergent or too singular integrand)",
                value=tot, err=tot_err)
        cut = score.max() / 8.0
        pick = splittable & (score >= cut)
        if not pick.any():
            pick = splittable & (score >= score[splittable].max())
        mid = 0.5 * (a[pick] + b[pick])
        new_a = np.concatenate([a[~pick], a[pick], mid])
        new_b = np.concatenate([b[~pick], mid, b[pick]])
        new_depth = np.concatenate([depth[~pick], depth[pick] + 1, depth[pick] + 1])
        nv, ne = _gk15_multi(g, np.concatenate([a[pick], mid]),
                             np.concatenate([mid, b[pick]]))
        vals = np.concatenate([vals[~pick], nv])
        errs = np.concatenate([errs[~pick], ne])
        a, b, depth = new_a, new_b, new_depth


def _apply_jac(vals, jac):
    """Multiply mapped integrand values by a per-node jacobian,
    lifting it over the component axis when f returns (m, k)."""
    vals = np.asarray(vals)
    jac = np.asarray(jac)
    if vals.ndim == 2 and jac.ndim == 1:
        jac = jac[:, None]
    return vals * jac


def _build_map(f, a: float, b: float, singular: str):
    """Compose endpoint transforms, returning (g, lo, hi).

    Infinite endpoints are mapped to a finite interval first; tagged
    singular finite endpoints then get a square-root substitution that
    turns power singularities up to exponent -1 into integrable ones.
    """
    if singular not in ("none", "left", "right", "both"):
        raise InputError(f"bad singular tag {singular!r}")
    left_inf = math.isinf(a) and a < 0
    right_inf = math.isinf(b) and b > 0
    if (left_inf and singular in ("left", "both")) or (
            right_inf and singular in ("right", "both")):
        raise InputError("cannot tag an infinite endpoint as singular")

    if left_inf and right_inf:
        def g(t, f=f):
            d = 1.0 - t * t
            return _apply_jac(f(t / d), (1.0 + t * t) / (d * d))
        return g, -1.0, 1.0
    if right_inf:
        def base(t, f=f, a=a):
            d = 1.0 - t
            return _apply_jac(f(a + t / d), 1.0 / (d * d))
        lo, hi = 0.0, 1.0
        sing_left = singular in ("left", "both")
        sing_right = False
    elif left_inf:
        def base(t, f=f, b=b):
            d = 1.0 - t
            return _apply_jac(f(b - t / d), 1.0 / (d * d))
        lo, hi = 0.0, 1.0
        sing_left = singular in ("right", "both")
        sing_right = False
    else:
        base, lo, hi = f, a, b
        sing_left = singular in ("left", "both")
        sing_right = singular in ("right", "both")

    if sing_left and sing_right:
        return None, (base, lo, hi)  # caller splits
    if sing_left:
        w = hi - lo
        def g(u, base=base, lo=lo):
            return _apply_jac(base(lo + u * u), 2.0 * u)
        return g, 0.0, math.sqrt(w)
    if sing_right:
        w = hi - lo
        def g(u, base=base, hi=hi):
            return _apply_jac(base(hi - u * u), 2.0 * u)
        return g, 0.0, math.sqrt(w)
    return base, lo, hi


def integrate_adaptive_multi(f, a: float, b: float, cfg: QuadConfig | None = None,
                             singular: str = "none") -> tuple[np.ndarray, np.ndarray]:
    """Adaptive integral of a stacked integrand over a shared interval.

    ``f(x)`` maps (m,) to (m, k); all k components are integrated on
    one interval queue, refined until each meets the tolerance.
    """
    cfg = cfg or DEFAULT_QUAD
    if not a < b:
        raise InputError("need a < b")
    built = _build_map(f, a, b, singular)
    if built[0] is None:
        base, lo, hi = built[1]
        mid = 0.5 * (lo + hi)
        v1, e1 = _adaptive_core(*_split_args(base, lo, mid, "left"), cfg)
        v2, e2 = _adaptive_core(*_split_args(base, mid, hi, "right"), cfg)
        return v1 + v2, e1 + e2
    g, lo, hi = built
    return _adaptive_core(g, [(lo, hi)], cfg)


def _split_args(base, lo, hi, side):
    g, l2, h2 = _build_map(base, lo, hi, side)
    return g, [(l2, h2)]


def integrate_adaptive(f, a: float, b: float, cfg: QuadConfig | None = None,
                       singular: str = "none") -> tuple[float, float]:
    """Adaptive Gauss-Kronrod integral with an error estimate.

    Endpoints may be infinite. Tag integrable endpoint singularities
    via ``singular`` in {"left", "right", "both"}; non-integrable ones
    raise :class:`AccuracyError` once the subdivision budget runs out.
    """
    vals, errs = integrate_adaptive_multi(f, a, b, cfg=cfg, singular=singular)
    if vals.size != 1:
        raise InputError("scalar integrand returned multiple components")
    return float(vals[0]), float(errs[0])


def dyadic_annuli(r_in: float, r_out: float, cfg: QuadConfig | None = None,
                  max_annuli: int = 64) -> list[tuple[float, float]]:
    """Dyadic radius pairs covering (r_in, r_out), doubling each step.

    An infinite outer radius is truncated at the configured annulus
    range; the caller owns the remainder estimate.
    """
    cfg = cfg or DEFAULT_QUAD
    if r_in <= 0 or r_out <= r_in:
        raise InputError("need 0 < r_in < r_out")
    cap = r_out if math.isfinite(r_out) else r_in * (cfg.annulus_range[1] / cfg.annulus_range[0]) ** 0.5
    cap = min(cap, r_in * 2.0 ** max_annuli)
    out = []
    lo = r_in
    while lo < cap and len(out) < max_annuli:
        hi = min(2.0 * lo, cap)
        out.append((lo, hi))
        lo = hi
    return out


def annulus_panel_sums(g, annuli: list[tuple[float, float]], cfg: QuadConfig | None = None
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Integrate a 1-D radial integrand over each annulus.

    One vectorized Kronrod panel per annulus, bisected where the panel
    error estimate is out of tolerance. Returns per-annulus values and
    error estimates.
    """
    cfg = cfg or DEFAULT_QUAD
    vals = np.empty(len(annuli))
    errs = np.empty(len(annuli))
    a = np.array([p[0] for p in annuli])
    b = np.array([p[1] for p in annuli])
    ik, er = _gk15_multi(g, a, b)
    ik, er = ik[:, 0], er[:, 0]
    tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(ik))
    for i, (lo, hi) in enumerate(annuli):
        if er[i] <= tol[i]:
            vals[i], errs[i] = ik[i], er[i]
        else:
            v, e = _adaptive_core(g, [(lo, hi)], cfg)
            vals[i], errs[i] = v[0], e[0]
    return vals, errs


# ---------------------------------------------------------------------------
# Monte Carlo region integration


@dataclass(frozen=True)
class Region:
    """Sampling region for :func:`integrate_mc_region`.

    Kinds: ``slab`` is a box inside the complement of a half-space
    domain, spanning depths (r1, r2) below the boundary and lateral
    half-width ``half_width`` around ``center``; ``ball`` and
    ``annulus`` are the euclidean sets around ``center`` intersected
    with the domain ``dom`` (no intersection when ``dom`` is None).
    """

    kind: str
    center: tuple
    r1: float = 0.0
    r2: float = 0.0
    half_width: float = 0.0
    dom: geometry.DomainSpec | None = None

    def __post_init__(self):
        if self.kind not in ("slab", "ball", "annulus"):
            raise InputError(f"unknown region kind {self.kind!r}")
        if self.kind == "slab":
            if self.dom is None or self.dom.kind not in ("half_line", "half_space"):
                raise InputError("slab regions live under a half-space domain")
            if not (0 <= self.r1 < self.r2):
                raise InputError("slab needs 0 <= r1 < r2")
            if self.dom.d > 1 and self.half_width <= 0:
                raise InputError("slab needs a positive half_width")
        else:
            if self.r2 <= 0 or self.r1 < 0 or self.r1 >= self.r2 and self.kind == "annulus":
                raise InputError("bad region radii")

    @property
    def dim(self) -> int:
        return len(self.center) if self.dom is None else self.dom.d

    def ambient_volume(self) -> float:
        d = self.dim
        if self.kind == "slab":
            lateral = (2.0 * self.half_width) ** (d - 1)
            return lateral * (self.r2 - self.r1)
        vd = geometry.unit_ball_volume(d)
        if self.kind == "ball":
            return vd * self.r2 ** d
        return vd * (self.r2 ** d - self.r1 ** d)

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        d = self.dim
        c = np.asarray(self.center, dtype=float)
        if self.kind == "slab":
            pts = np.empty((m, d))
            if d > 1:
                pts[:, :-1] = c[:-1] + rng.uniform(-self.half_width, self.half_width,
                                                   size=(m, d - 1))
            pts[:, -1] = -rng.uniform(self.r1, self.r2, size=m)
            return pts
        u = rng.standard_normal(size=(m, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        lo = self.r1 if self.kind == "annulus" else 0.0
        radii = (lo ** d + rng.random(m) * (self.r2 ** d - lo ** d)) ** (1.0 / d)
        return c + u * radii[:, None]

    def indicator(self, pts: np.ndarray) -> np.ndarray:
        if self.kind == "slab" or self.dom is None:
            return np.ones(len(pts), dtype=bool)
        return geometry.contains_many(self.dom, pts)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    ci: float
    n: int


def _height_strata(region: Region, k_max: int = 12) -> list[tuple[float, float]] | None:
    """Dyadic boundary-distance bands with exact volumes, where possible."""
    if region.kind == "slab":
        lo, hi = region.r1, region.r2
    elif region.dom is not None and region.dom.kind in ("half_line", "half_space"):
        c = np.asarray(region.center, dtype=float)
        lo = max(0.0, c[-1] - region.r2)
        hi = c[-1] + region.r2
    else:
        return None
    floor = region.r1 if region.kind == "slab" else 0.0
    lo = max(lo, hi * 2.0 ** -float(k_max))
    bands = [(floor, lo)] if lo > floor else []
    x = lo
    while x < hi:
        bands.append((x, min(2.0 * x, hi)))
        x = min(2.0 * x, hi)
    return [b for b in bands if b[1] > b[0]]


def _band_volume(region: Region, band: tuple[float, float]) -> float:
    d = region.dim
    if region.kind == "slab":
        lateral = (2.0 * region.half_width) ** (d - 1)
        return lateral * (band[1] - band[0])
    c = np.asarray(region.center, dtype=float)
    vd = geometry.unit_ball_volume(d)

    # cap_fraction(d, t) is the fraction with coordinate >= t (unit ball).
    def frac_above(h, r):
        return geometry.cap_fraction(d, (h - c[-1]) / r)

    def band_vol(r):
        if r <= 0:
            return 0.0
        return vd * r ** d * (frac_above(band[0], r) - frac_above(band[1], r))

    v = band_vol(region.r2)
    if region.kind == "annulus":
        v -= band_vol(region.r1)
    return v


def _sample_band(region: Region, band: tuple[float, float], rng, m: int) -> np.ndarray:
    """Uniform points of the region with last coordinate in the band."""
    d = region.dim
    c = np.asarray(region.center, dtype=float)
    if region.kind == "slab":
        pts = np.empty((m, d))
        if d > 1:
            pts[:, :-1] = c[:-1] + rng.uniform(-region.half_width, region.half_width,
                                               size=(m, d - 1))
        pts[:, -1] = -rng.uniform(band[0], band[1], size=m)
        return pts
    # euclidean slice: reject from the slice's own bounding box, so the
    # acceptance rate stays geometry-bounded however thin the band is
    hlo, hhi = band[0] - c[-1], band[1] - c[-1]
    gap = 0.0 if hlo <= 0.0 <= hhi else min(abs(hlo), abs(hhi))
    half = math.sqrt(max(region.r2 ** 2 - gap * gap, 0.0))
    out = np.empty((m, d))
    got = 0
    need = (m * 4) + 16
    while got < m:
        pts = np.empty((need, d))
        if d > 1:
            pts[:, :-1] = c[:-1] + rng.uniform(-half, half, size=(need, d - 1))
        pts[:, -1] = rng.uniform(band[0], band[1], size=need)
        rr = np.sum((pts - c) ** 2, axis=1)
        ok = rr <= region.r2 ** 2
        if region.kind == "annulus":
            ok &= rr >= region.r1 ** 2
        take = min(int(ok.sum()), m - got)
        out[got:got + take] = pts[ok][:take]
        got += take
        need = min(2 * need, 2_000_000)
    return out


def integrate_mc_region(f, region: Region, n: int, seed: int,
                        stratify_near_boundary: bool = False) -> MCEstimate:
    """Unbiased Monte Carlo integral of ``f`` over the region.

    ``f`` receives an (m, d) array of points and returns (m,) values.
    Points falling outside the intersected domain contribute zero, so
    the estimate targets the integral over region-and-domain. With
    ``stratify_near_boundary`` the sampling splits into dyadic
    boundary-distance bands (exact band volumes, equal sample counts),
    which tames boundary-singular integrands; it silently falls back
    to plain sampling for region shapes without exact band volumes.
    """
    if n < 16:
        raise InputError("need at least 16 samples")
    if region.ambient_volume() <= 0:
        raise InputError("zero-measure region")
    ss = np.random.SeedSequence(seed)
    if stratify_near_boundary:
        bands = _height_strata(region)
        if bands:
            n_k = max(16, n // len(bands))
            total = 0.0
            var = 0.0
            count = 0
            for child, band in zip(ss.spawn(len(bands)), bands):
                rng = np.random.default_rng(child)
                vol = _band_volume(region, band)
                if vol <= 0:
                    continue
                pts = _sample_band(region, band, rng, n_k)
                vals = np.where(region.indicator(pts), f(pts), 0.0)
                total += vol * float(vals.mean())
                var += vol * vol * float(vals.var(ddof=1)) / n_k
                count += n_k
            return MCEstimate(total, 1.96 * math.sqrt(var), count)
    rng = np.random.default_rng(ss)
    vol = region.ambient_volume()
    mean = 0.0
    m2 = 0.0
    count = 0
    batch = 200_000
    done = 0
    while done < n:
        m = min(batch, n - done)
        pts = region.sample(rng, m)
        vals = np.where(region.indicator(pts), f(pts), 0.0)
        # streaming mean and second moment merge
        b_mean = float(vals.mean())
        b_m2 = float(((vals - b_mean) ** 2).sum())
        delta = b_mean - mean
        tot = count + m
        mean += delta * m / tot
        m2 += b_m2 + delta * delta * count * m / tot
        count = tot
        done += m
    var = m2 / (count - 1) if count > 1 else 0.0
    return MCEstimate(vol * mean, 1.96 * vol * math.sqrt(var / count), count)
