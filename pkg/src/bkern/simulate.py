"""Path simulation of the resurrected processes and estimators on top.

Two engines. The time-stepped engine moves paths by exact-in-law
stable increments on half-space geometry and, whenever a step lands
outside, immediately returns the path through the model's re-entry
density (sampled exactly, see the sampler notes below). The jump-chain
engine runs the epsilon-truncated continuous-time chain of a
closed-form kernel with tabulated jump laws.

Re-entry sampling. Every re-entry density in the catalog reduces to
the same two-factor form over (lateral offset, height): height via a
Beta variable pushed through h = b u/(1-u), lateral via a Student-t at
scale (h + b). The capped-profile variant is the only one needing
rejection, against the sum of its two power envelopes, which accepts
with probability at least 1/2.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry, weights
from .errors import (ConfigError, DomainError, InputError, RangeError,
                     SamplerError, UnsupportedError)
from .kernels import KernelSpec, resurrection_norm_constant, stable_constant

_MODELS = ("resurrected", "neumann", "trace", "generic_ctmc")
_HALF = ("half_line", "half_space")


# ---------------------------------------------------------------------------
# Elementary samplers


def positive_stable(a: float, rng: np.random.Generator, size) -> np.ndarray:
    """Positive strictly a-stable variables, Laplace transform
    exp(-lambda^a), by Kanter's representation."""
    if not 0.0 < a < 1.0:
        raise RangeError("positive-stable index must lie in (0, 1)")
    v = rng.uniform(0.0, 1.0, size=size)
    w = rng.standard_exponential(size=size)
    pv = math.pi * v
    A = (np.sin(a * pv) ** a * np.sin((1.0 - a) * pv) ** (1.0 - a)
         / np.sin(pv))
    return A ** (1.0 / a) * w ** (-(1.0 - a) / a)


def stable_increment(alpha: float, d: int, dt: float,
                     rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """(size, d) increments of the isotropic alpha-stable process over
    time dt, exact in law via Gaussian subordination."""
    if not 0.0 < alpha < 2.0:
        raise RangeError("alpha must lie in (0, 2)")
    if not dt > 0:
        raise InputError("dt must be positive")
    s = dt ** (2.0 / alpha) * positive_stable(alpha / 2.0, rng, size)
    z = rng.standard_normal((size, d))
    return np.sqrt(2.0 * s)[:, None] * z


def ball_exit_sample(alpha: float, d: int, x, center, radius: float,
                     rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Exact samples of the stable exit position from a ball.

    Centered starts are rejection-free: the squared overshoot
    (|z-c|/r)^2 - 1 is Beta-prime(1 - alpha/2, alpha/2) and the
    direction uniform. Off-center starts reject against the centered
    proposal; the density ratio is bounded by (r/(r-|x-c|))^d, so
    acceptance degrades near the sphere and the sampler refuses starts
    where it would fall under 1e-4.
    """
    if not 0.0 < alpha < 2.0:
        raise RangeError("alpha must lie in (0, 2)")
    if not radius > 0:
        raise InputError("radius must be positive")
    c = np.asarray(center, dtype=float).reshape(-1)
    xa = np.asarray(x, dtype=float).reshape(-1)
    if c.size != d or xa.size != d:
        raise InputError("dimension mismatch")
    ecc = float(np.linalg.norm(xa - c))
    if ecc >= radius:
        raise InputError("start point must lie inside the ball")

    def centered(m):
        g1 = rng.standard_gamma(1.0 - alpha / 2.0, size=m)
        g2 = rng.standard_gamma(alpha / 2.0, size=m)
        rho = radius * np.sqrt(1.0 + g1 / g2)
        u = rng.standard_normal((m, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return c + rho[:, None] * u

    if ecc == 0.0:
        return centered(size)
    accept_floor = ((radius - ecc) / radius) ** (d - alpha / 2.0) \
        * (radius / (radius + ecc)) ** (alpha / 2.0)
    if accept_floor < 1e-4:
        raise SamplerError(
            "exit sampler stalls for starts this close to the sphere",
            diagnostics={"eccentricity": ecc, "radius": radius,
                         "acceptance": accept_floor})
    out = np.empty((size, d))
    got = 0
    tries = 0
    while got < size:
        m = max(2 * (size - got), 32)
        z = centered(m)
        ratio = (np.linalg.norm(z - c, axis=1)
                 / np.linalg.norm(z - xa, axis=1)) ** d \
            * ((radius - ecc) / radius) ** d
        keep = rng.uniform(size=m) < ratio
        take = min(int(keep.sum()), size - got)
        out[got:got + take] = z[keep][:take]
        got += take
        tries += m
        if tries > 64 and got < max(1, tries * 1e-4):
            raise SamplerError("exit sampler acceptance collapsed",
                               diagnostics={"tries": tries, "got": got})
    return out


def _reentry_power(alpha: float, p: float, d: int, b: np.ndarray,
                   lat: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Return points for the pure-power profile v^p, depths b > 0.

    Height: u ~ Beta(1-p, alpha-p), h = b u/(1-u). Lateral: Student-t
    with 1 + alpha - 2p degrees of freedom at scale (h + b).
    """
    m = b.size
    u = rng.beta(1.0 - p, alpha - p, size=m)
    u = np.minimum(u, 1.0 - 1e-15)
    h = b * u / (1.0 - u)
    if d == 1:
        return h[:, None]
    tdf = 1.0 + alpha - 2.0 * p
    t = rng.standard_t(tdf, size=m)
    y1 = lat + (h + b) * t
    return np.stack([y1, h], axis=1)


def _reentry_trace(alpha: float, d: int, b: np.ndarray, lat: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """Exit of the complement half-space: height from the arcsine-type
    Beta(1-alpha/2, alpha/2), lateral Cauchy at scale (h + b)."""
    m = b.size
    u = rng.beta(1.0 - alpha / 2.0, alpha / 2.0, size=m)
    u = np.minimum(u, 1.0 - 1e-15)
    h = b * u / (1.0 - u)
    if d == 1:
        return h[:, None]
    t = rng.standard_t(1.0, size=m)
    y1 = lat + (h + b) * t
    return np.stack([y1, h], axis=1)


def _reentry_cap(psi: weights.PsiSpec, alpha: float, d: int, b: np.ndarray,
                 lat: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Capped profile max(1, v^p): rejection against the flat + power
    envelope. max(1, v^p) <= 1 + v^p <= 2 max(1, v^p), so each
    proposal is accepted with probability >= 1/2."""
    p = psi.p
    n0 = resurrection_norm_constant(d, alpha, 0.0)
    np_ = resurrection_norm_constant(d, alpha, p)
    w0 = n0 / (n0 + np_)
    m = b.size
    out = np.empty((m, d))
    todo = np.arange(m)
    while todo.size:
        k = todo.size
        pick0 = rng.uniform(size=k) < w0
        y = np.empty((k, d))
        if pick0.any():
            y[pick0] = _reentry_power(alpha, 0.0, d, b[todo][pick0],
                                      lat[todo][pick0], rng)
        if (~pick0).any():
            y[~pick0] = _reentry_power(alpha, p, d, b[todo][~pick0],
                                       lat[todo][~pick0], rng)
        h = y[:, -1]
        if d == 1:
            dist2 = (h + b[todo]) ** 2
        else:
            dist2 = (y[:, 0] - lat[todo]) ** 2 + (h + b[todo]) ** 2
        v = dist2 / (h * b[todo])
        ratio = np.maximum(1.0, v ** p) / (1.0 + v ** p)
        keep = rng.uniform(size=k) < ratio
        out[todo[keep]] = y[keep]
        todo = todo[~keep]
    return out


def _resurrect(model: str, psi, alpha: float, d: int, z: np.ndarray,
               rng: np.random.Generator) -> np.ndarray:
    """Map landing points z (last coordinate < 0) to return points."""
    b = -z[:, -1]
    lat = z[:, 0] if d == 2 else np.zeros(b.size)
    if model == "neumann":
        return _reentry_power(alpha, 0.0, d, b, lat, rng)
    if model == "trace":
        return _reentry_trace(alpha, d, b, lat, rng)
    if psi.kind == "power_cap":
        return _reentry_cap(psi, alpha, d, b, lat, rng)
    p = 0.0 if psi.kind == "constant_one" else psi.p
    return _reentry_power(alpha, p, d, b, lat, rng)


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    ``model`` picks the engine: the three named models are
    time-stepped on half geometry; ``generic_ctmc`` runs the truncated
    jump chain of ``kernel`` with cutoff ``eps``.
    """

    model: str
    dom: geometry.DomainSpec
    alpha: float
    t: float
    n_paths: int
    seed: int
    dt: float | None = None
    psi: weights.PsiSpec | None = None
    kernel: KernelSpec | None = None
    eps: float | None = None
    batch: int = 50_000

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if not 0.0 < self.alpha < 2.0:
            raise ConfigError("alpha must lie in (0, 2)")
        if not self.t > 0:
            raise ConfigError("horizon must be positive")
        if self.n_paths < 1:
            raise ConfigError("need at least one path")
        if self.batch < 1:
            raise ConfigError("batch size must be positive")
        if self.model == "generic_ctmc":
            if self.kernel is None or self.eps is None:
                raise ConfigError("jump-chain runs need kernel and eps")
            if self.kernel.kind not in ("comparison", "plain_stable"):
                raise ConfigError("jump chains run closed-form kernels only")
            if self.kernel.dom != self.dom or self.kernel.alpha != self.alpha:
                raise ConfigError("kernel spec disagrees with the run")
            if not 0.0 < self.eps <= self.t ** (1.0 / self.alpha) / 8.0:
                raise ConfigError(
                    "truncation must satisfy eps <= t^{1/alpha}/8")
            if self.dom.kind == "half_space" and self.kernel.kind == \
                    "comparison" and self.kernel.weight.kind != "constant_one":
                raise UnsupportedError(
                    "plane jump chains support the flat weight only")
            if self.dom.kind not in _HALF:
                raise UnsupportedError(
                    "jump chains run on half geometry only")
        else:
            if self.dom.kind not in _HALF:
                raise UnsupportedError(
                    "time-stepped models run on half geometry only")
            if self.dt is None:
                raise ConfigError("time-stepped runs need a step dt")
            if not 0.0 < self.dt <= self.t / 1000.0:
                raise ConfigError("step must satisfy dt <= t/1000")
            if self.model == "resurrected":
                if self.psi is None:
                    raise ConfigError("resurrected runs need a psi spec")
                if self.psi.gamma2 >= min(1.0, self.alpha):
                    raise ConfigError(
                        "psi upper exponent must be < min(1, alpha)")


@dataclass(frozen=True)
class PathEndpoints:
    """Terminal states of one run plus bookkeeping counters."""

    points: np.ndarray
    resurrections: np.ndarray
    n_steps: int
    cpu_seconds: float


# ---------------------------------------------------------------------------
# Time-stepped engine


def _run_stepped_batch(cfg: SimConfig, x0: np.ndarray, seed_child,
                       m: int) -> tuple[np.ndarray, np.ndarray, int]:
    rng = np.random.default_rng(seed_child)
    d = cfg.dom.d
    n_steps = max(int(round(cfg.t / cfg.dt)), 1)
    dt_eff = cfg.t / n_steps
    X = np.tile(x0, (m, 1))
    res = np.zeros(m, dtype=np.int64)
    for _ in range(n_steps):
        X += stable_increment(cfg.alpha, d, dt_eff, rng, size=m)
        out = X[:, -1] < 0.0
        if out.any():
            idx = np.nonzero(out)[0]
            back = _resurrect(cfg.model, cfg.psi, cfg.alpha, d, X[idx], rng)
            X[idx] = back
            res[idx] += 1
        # a step landing exactly on the boundary stays put vertically
        X[:, -1] = np.maximum(X[:, -1], 0.0)
    return X, res, n_steps * m


# ---------------------------------------------------------------------------
# Jump-chain engine


@dataclass
class CtmcTables:
    """Per-(kernel, eps) jump tables for the truncated chain.

    ``deltas`` are log-spaced boundary distances; for each, the total
    jump rate past eps and, on the half-line, per-cell masses on
    dyadic annuli split by direction. Rates and masses interpolate
    log-log in the boundary distance.
    """

    eps: float
    deltas: np.ndarray
    log_rates: np.ndarray
    edges: np.ndarray | None = None
    log_cell_mass: np.ndarray | None = None
    cell_wmax: np.ndarray | None = None

    def rate(self, delta: np.ndarray) -> np.ndarray:
        t = np.clip(np.log(delta), math.log(self.deltas[0]),
                    math.log(self.deltas[-1]))
        return np.exp(np.interp(t, np.log(self.deltas), self.log_rates))


_N_DELTA = 64
_N_ANN = 32
_TABLE_CACHE: dict = {}


def _kernel_weight(spec: KernelSpec) -> weights.WeightSpec:
    if spec.kind == "comparison":
        return spec.weight
    return weights.WeightSpec("constant_one")


def _ctmc_key(spec: KernelSpec, eps: float):
    w = _kernel_weight(spec)
    return (spec.dom.kind, spec.dom.d, spec.kind, spec.alpha, w.kind, w.beta,
            getattr(w.psi, "kind", None), getattr(w.psi, "p", None), w.a0,
            w.beta_bar, eps)


def _gk7_nodes(a: np.ndarray, b: np.ndarray):
    # 7-point Gauss nodes/weights on each (a, b)
    xg = np.array([-0.9491079123427585, -0.7415311855993945,
                   -0.4058451513773972, 0.0, 0.4058451513773972,
                   0.7415311855993945, 0.9491079123427585])
    wg = np.array([0.1294849661688697, 0.2797053914892767,
                   0.3818300505051189, 0.4179591836734694,
                   0.3818300505051189, 0.2797053914892767,
                   0.1294849661688697])
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    return c[:, None] + h[:, None] * xg[None, :], h[:, None] * wg[None, :]


def _build_tables(spec: KernelSpec, eps: float) -> CtmcTables:
    key = _ctmc_key(spec, eps)
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    dom, alpha = spec.dom, spec.alpha
    w = _kernel_weight(spec)
    deltas = np.geomspace(eps * 1e-4, eps * 1e6, _N_DELTA)
    rates = np.empty(_N_DELTA)
    edges = eps * 2.0 ** np.arange(_N_ANN + 1)
    if dom.kind == "half_line":
        # per-delta cell masses: 32 dyadic annuli x 2 directions
        masses = np.zeros((_N_DELTA, _N_ANN, 2))
        wmax = np.zeros((_N_DELTA, _N_ANN, 2))
        for i, dv in enumerate(deltas):
            for k in range(_N_ANN):
                lo, hi = edges[k], edges[k + 1]
                # toward the boundary, cut at the wall
                cut = min(hi, dv)
                for side, (s0, s1) in enumerate([(lo, cut), (lo, hi)]):
                    if s1 <= s0:
                        continue
                    xs, wq = _gk7_nodes(np.array([s0]), np.array([s1]))
                    y = dv - xs if side == 0 else dv + xs
                    arg = np.minimum(xs, w.a0) ** 2 / (
                        min(dv, w.a0) * np.minimum(np.abs(y), w.a0))
                    wv = np.asarray(weights.eval_weight(w, arg))
                    dens = xs ** (-1.0 - alpha) * wv
                    masses[i, k, side] = float((dens * wq).sum())
                    wmax[i, k, side] = float(wv.max())
            rates[i] = masses[i].sum()
        tab = CtmcTables(eps=eps, deltas=deltas, log_rates=np.log(rates),
                         edges=edges,
                         log_cell_mass=np.log(np.maximum(masses, 1e-300)),
                         cell_wmax=wmax)
    else:
        # flat-weight plane: the rate is the annulus integral times the
        # in-domain arc fraction, closed form in the depth
        for i, dv in enumerate(deltas):
            total = 0.0
            for k in range(_N_ANN):
                lo, hi = edges[k], edges[k + 1]
                xs, wq = _gk7_nodes(np.array([lo]), np.array([hi]))
                frac = np.where(xs <= dv, 1.0,
                                0.5 + np.arcsin(np.minimum(dv / xs, 1.0))
                                / math.pi)
                dens = 2.0 * math.pi * xs ** (-1.0 - alpha) * frac
                total += float((dens * wq).sum())
            # past the dyadic ladder the arc fraction sits at 1/2, so
            # the remainder is half the free power tail
            total += math.pi / alpha * edges[-1] ** -alpha
            rates[i] = total
        tab = CtmcTables(eps=eps, deltas=deltas, log_rates=np.log(rates),
                         edges=edges)
    const = (1.0 if spec.kind == "comparison"
             else stable_constant(dom.d, alpha))
    tab.log_rates = tab.log_rates + math.log(const)
    if tab.log_cell_mass is not None:
        tab.log_cell_mass = tab.log_cell_mass + math.log(const)
    _TABLE_CACHE[key] = tab
    return tab


def _sample_radius(alpha: float, s0: np.ndarray, s1: np.ndarray,
                   rng) -> np.ndarray:
    """Radii with density proportional to s^{-1-alpha} on (s0, s1)."""
    u = rng.uniform(size=s0.size)
    a0 = s0 ** -alpha
    a1 = s1 ** -alpha
    return (a0 + u * (a1 - a0)) ** (-1.0 / alpha)


def _ctmc_jump_half_line(tab: CtmcTables, alpha: float,
                         w: weights.WeightSpec, x: np.ndarray,
                         rng) -> np.ndarray:
    """One jump per path from positions x > 0, via the cell tables."""
    m = x.size
    lt = np.log(tab.deltas)
    ti = np.clip(np.log(x), lt[0], lt[-1])
    # linear interpolation of log cell masses in log delta
    j = np.clip(np.searchsorted(lt, ti) - 1, 0, lt.size - 2)
    frac = (ti - lt[j]) / (lt[j + 1] - lt[j])
    lm = (1.0 - frac)[:, None, None] * tab.log_cell_mass[j] \
        + frac[:, None, None] * tab.log_cell_mass[j + 1]
    mass = np.exp(lm)
    # cells toward the wall that the true position cannot reach get no mass
    edges = tab.edges
    blocked = edges[None, :-1] >= x[:, None]
    mass[:, :, 0][blocked] = 0.0
    flat = mass.transpose(0, 2, 1).reshape(m, 2 * _N_ANN)
    cdf = np.cumsum(flat, axis=1)
    pick = (rng.uniform(size=m) * cdf[:, -1])
    cell = (pick[:, None] > cdf).sum(axis=1)
    cell = np.minimum(cell, 2 * _N_ANN - 1)
    side = cell // _N_ANN
    ann = cell % _N_ANN
    wmax = np.maximum(tab.cell_wmax[j, ann, side],
                      tab.cell_wmax[j + 1, ann, side]) * 1.25
    out = np.empty(m)
    todo = np.arange(m)
    stall = 0
    while todo.size:
        k = todo.size
        s0 = edges[ann[todo]]
        s1 = edges[ann[todo] + 1]
        toward = side[todo] == 0
        s1 = np.where(toward, np.minimum(s1, x[todo]), s1)
        s0 = np.minimum(s0, s1 * (1.0 - 1e-12))
        s = _sample_radius(alpha, s0, s1, rng)
        y = np.where(toward, x[todo] - s, x[todo] + s)
        y = np.maximum(y, 1e-300)
        arg = np.minimum(s, w.a0) ** 2 / (np.minimum(x[todo], w.a0)
                                          * np.minimum(y, w.a0))
        wv = np.asarray(weights.eval_weight(w, arg))
        keep = rng.uniform(size=k) * wmax[todo] < wv
        out[todo[keep]] = y[keep]
        todo = todo[~keep]
        stall += 1
        if stall > 10_000:
            raise SamplerError("jump rejection stalled",
                               diagnostics={"remaining": int(todo.size)})
    return out


def _ctmc_jump_plane(tab: CtmcTables, alpha: float, X: np.ndarray,
                     rng) -> np.ndarray:
    """Flat-weight plane jump: power-law radius on the dyadic ladder
    (plus its analytic tail), direction uniform, reject below floor."""
    m = X.shape[0]
    out = np.empty_like(X)
    todo = np.arange(m)
    stall = 0
    while todo.size:
        k = todo.size
        s = _sample_radius(alpha, np.full(k, tab.eps), np.full(k, np.inf),
                           rng)
        th = rng.uniform(0.0, 2.0 * math.pi, size=k)
        cand = X[todo] + np.stack([s * np.cos(th), s * np.sin(th)], axis=1)
        keep = cand[:, -1] > 0.0
        out[todo[keep]] = cand[keep]
        todo = todo[~keep]
        stall += 1
        if stall > 10_000:
            raise SamplerError("plane jump rejection stalled",
                               diagnostics={"remaining": int(todo.size)})
    return out


def _run_ctmc_batch(cfg: SimConfig, x0: np.ndarray, seed_child,
                    m: int) -> tuple[np.ndarray, np.ndarray, int]:
    rng = np.random.default_rng(seed_child)
    tab = _build_tables(cfg.kernel, cfg.eps)
    w = _kernel_weight(cfg.kernel)
    d = cfg.dom.d
    X = np.tile(x0, (m, 1))
    clock = np.zeros(m)
    jumps = 0
    active = np.arange(m)
    while active.size:
        if d == 1:
            rate = tab.rate(X[active, 0])
        else:
            rate = tab.rate(X[active, -1])
        hold = rng.standard_exponential(active.size) / rate
        clock[active] += hold
        alive = clock[active] < cfg.t
        movers = active[alive]
        if movers.size:
            if d == 1:
                X[movers, 0] = _ctmc_jump_half_line(
                    tab, cfg.alpha, w, X[movers, 0], rng)
            else:
                X[movers] = _ctmc_jump_plane(tab, cfg.alpha, X[movers], rng)
            jumps += movers.size
        active = movers
    return X, np.zeros(m, dtype=np.int64), jumps


# ---------------------------------------------------------------------------
# Drivers


def simulate_paths(cfg: SimConfig, x0) -> PathEndpoints:
    """Independent terminal states at the horizon.

    Batches draw child seeds from one seed sequence, so a fixed
    (seed, batch) pair reproduces results bit for bit.
    """
    xa = np.asarray(x0, dtype=float).reshape(-1)
    if xa.size != cfg.dom.d:
        raise InputError("start point dimension mismatch")
    if not geometry.contains(cfg.dom, xa, closed=True):
        raise DomainError("start point must lie in the closed domain")
    start = time.process_time()
    n_batches = -(-cfg.n_paths // cfg.batch)
    children = np.random.SeedSequence(cfg.seed).spawn(n_batches)
    pts = np.empty((cfg.n_paths, cfg.dom.d))
    res = np.empty(cfg.n_paths, dtype=np.int64)
    steps = 0
    done = 0
    for child in children:
        m = min(cfg.batch, cfg.n_paths - done)
        if cfg.model == "generic_ctmc":
            P, R, s = _run_ctmc_batch(cfg, xa, child, m)
        else:
            P, R, s = _run_stepped_batch(cfg, xa, child, m)
        pts[done:done + m] = P
        res[done:done + m] = R
        steps += s
        done += m
    return PathEndpoints(points=pts, resurrections=res, n_steps=steps,
                         cpu_seconds=time.process_time() - start)


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    ci: float
    hits: int
    n: int


def estimate_heat_kernel(cfg: SimConfig, x0, y, h: float,
                         endpoints: PathEndpoints | None = None
                         ) -> DensityEstimate:
    """Kernel density at (t, x0, y) from terminal hits in a ball.

    Pass precomputed ``endpoints`` to reuse one run across many targets.
    Zero hits return value 0 with the one-sided rule-of-three bound as
    the CI.
    """
    if not 0.0 < h <= cfg.t ** (1.0 / cfg.alpha) / 4.0:
        raise InputError("bandwidth must satisfy 0 < h <= t^{1/alpha}/4")
    ya = np.asarray(y, dtype=float).reshape(-1)
    if not geometry.contains(cfg.dom, ya, closed=True):
        raise DomainError("target must lie in the closed domain")
    if endpoints is None:
        endpoints = simulate_paths(cfg, x0)
    vol = geometry.ball_volume_in_domain(cfg.dom, ya, h)
    if vol <= 0:
        raise InputError("degenerate target ball")
    n = endpoints.points.shape[0]
    hits = int((np.linalg.norm(endpoints.points - ya, axis=1) <= h).sum())
    if hits == 0:
        return DensityEstimate(0.0, 3.0 / (n * vol), 0, n)
    p = hits / n
    ci = 1.96 * math.sqrt(p * (1.0 - p) / n) / vol
    return DensityEstimate(p / vol, ci, hits, n)


def occupation_phi_average(cfg: SimConfig, x0, phi: weights.WeightSpec,
                           a0: float = math.inf) -> tuple[float, float]:
    """Time average of the boundary profile along paths.

    Right-endpoint sums of phi((t^{1/alpha} and a0) / (clearance and
    a0)) over the steps, averaged over paths; returns (mean, 95% CI).
    """
    if cfg.model == "generic_ctmc":
        raise UnsupportedError("occupation averages need the stepped engine")
    xa = np.asarray(x0, dtype=float).reshape(-1)
    if not geometry.contains(cfg.dom, xa, closed=True):
        raise DomainError("start point must lie in the closed domain")
    scale = min(cfg.t ** (1.0 / cfg.alpha), a0)
    n_steps = max(int(round(cfg.t / cfg.dt)), 1)
    n_batches = -(-cfg.n_paths // cfg.batch)
    children = np.random.SeedSequence(cfg.seed).spawn(n_batches)
    sums = np.empty(cfg.n_paths)
    done = 0
    d = cfg.dom.d
    for child in children:
        m = min(cfg.batch, cfg.n_paths - done)
        rng = np.random.default_rng(child)
        X = np.tile(xa, (m, 1))
        acc = np.zeros(m)
        for _ in range(n_steps):
            X += stable_increment(cfg.alpha, d, cfg.t / n_steps, rng, size=m)
            out = X[:, -1] < 0.0
            if out.any():
                idx = np.nonzero(out)[0]
                X[idx] = _resurrect(cfg.model, cfg.psi, cfg.alpha, d,
                                    X[idx], rng)
            X[:, -1] = np.maximum(X[:, -1], 0.0)
            clear = np.minimum(np.maximum(X[:, -1], 1e-300), a0)
            acc += np.asarray(weights.eval_weight(phi, scale / clear))
        sums[done:done + m] = acc / n_steps
        done += m
    mean = float(sums.mean())
    ci = 1.96 * float(sums.std(ddof=1)) / math.sqrt(cfg.n_paths)
    return mean, ci


def write_endpoints_csv(path, pe: PathEndpoints) -> None:
    """Terminal-state dump: path id, coordinates, resurrection count."""
    import csv

    d = pe.points.shape[1]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["path_id"] + [f"x{i+1}" for i in range(d)]
                     + ["resurrections"])
        for i in range(pe.points.shape[0]):
            out.writerow([i] + [repr(float(c)) for c in pe.points[i]]
                         + [int(pe.resurrections[i])])
