"""Named verification suites over the kernel, bound, and path layers.

Each suite turns one configuration into a Report: a case table of
(measured, bound, ratio) rows, a summary with the fitted two-sided
constant, and provenance. The pass decision is always recomputable
from the case table plus the configured caps, and a rerun with the
same seed and config reproduces the report byte for byte (wall time
aside).
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds, geometry, kernels, simulate, weights
from .errors import ConfigError

SUITES = ("condition_a", "tail_two_sided", "aikawa", "kernel_neumann",
          "kernel_trace", "kernel_resurrected", "hk_two_sided", "occupation",
          "truncated_decay", "cross_model")


@dataclass(frozen=True)
class Case:
    case_id: str
    inputs: dict
    measured: float
    bound: float
    ratio: float


@dataclass(frozen=True)
class Summary:
    min_ratio: float
    max_ratio: float
    median_ratio: float
    fitted_C: float
    passed: bool


@dataclass(frozen=True)
class Report:
    suite: str
    cases: tuple
    summary: Summary
    provenance: dict


def _workers() -> int:
    return max(int(os.environ.get("BKERN_WORKERS", os.cpu_count() or 1)), 1)


def _pmap(fn, items):
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(fn, items))


def _fit_midpoint(ratios) -> float:
    """Central comparability constant: midpoint of the log-ratio range."""
    pos = [r for r in ratios if r > 0 and math.isfinite(r)]
    if not pos:
        return math.nan
    return math.exp(0.5 * (math.log(min(pos)) + math.log(max(pos))))


def _summarize(cases, passed: bool) -> Summary:
    ratios = [c.ratio for c in cases]
    return Summary(min_ratio=float(min(ratios)), max_ratio=float(max(ratios)),
                   median_ratio=float(np.median(ratios)),
                   fitted_C=_fit_midpoint(ratios), passed=bool(passed))


def _sorted(cases) -> tuple:
    return tuple(sorted(cases, key=lambda c: c.case_id))


def _spread_ok(cases, cap: float) -> bool:
    ratios = [c.ratio for c in cases]
    lo, hi = min(ratios), max(ratios)
    return lo > 0 and hi / lo <= cap


def _band_ok(cases, cap: float) -> bool:
    """Two-sided comparability against the unit-constant reference:
    spread bounded and no ratio escaping [1/cap, cap]."""
    ratios = [c.ratio for c in cases]
    lo, hi = min(ratios), max(ratios)
    return lo >= 1.0 / cap and hi <= cap and _spread_ok(cases, cap)


# ---------------------------------------------------------------------------
# Config helpers


def _domain(cfg: dict, default_kind: str = "half_line") -> geometry.DomainSpec:
    data = cfg.get("domain")
    if data is None:
        return geometry.DomainSpec(default_kind,
                                   d=1 if default_kind == "half_line" else 2)
    if isinstance(data, geometry.DomainSpec):
        return data
    return geometry.domain_from_dict(dict(data))


def _weight(cfg: dict, key: str = "weight",
            default: weights.WeightSpec | None = None
            ) -> weights.WeightSpec | None:
    data = cfg.get(key)
    if data is None:
        return default
    if isinstance(data, weights.WeightSpec):
        return data
    return weights.weight_from_dict(dict(data))


def _psi(cfg: dict, key: str = "psi") -> weights.PsiSpec | None:
    data = cfg.get(key)
    if data is None:
        return None
    if isinstance(data, weights.PsiSpec):
        return data
    return weights.psi_from_dict(dict(data))


def _point_at_depth(dom: geometry.DomainSpec, delta: float) -> np.ndarray:
    """A point at the requested boundary distance."""
    if dom.kind == "half_line":
        return np.array([delta])
    if dom.kind == "half_space":
        p = np.zeros(dom.d)
        p[-1] = delta
        return p
    if dom.kind == "ball":
        p = np.zeros(dom.d)
        p[0] = dom.radius - delta
        return p
    if dom.kind == "exterior_ball":
        p = np.zeros(dom.d)
        p[0] = dom.radius + delta
        return p
    p = np.full(dom.d, dom.side / 2.0)
    p[-1] = delta
    return p


def _boundary_point(dom: geometry.DomainSpec) -> np.ndarray:
    return _point_at_depth(dom, 0.0)


# ---------------------------------------------------------------------------
# Kernel comparability suites


def _family_weight(family: str, alpha: float, psi, explicit):
    if explicit is not None:
        return explicit
    if family == "neumann":
        return weights.WeightSpec("log")
    if family == "trace":
        return weights.psi1(weights.PsiSpec("power_cap", p=alpha / 2.0))
    if family == "resurrected":
        return weights.psi1(psi)
    return weights.WeightSpec("constant_one")


def _ratio_suite(cfg: dict, family_default: str):
    dom = _domain(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    family = cfg.get("family", family_default)
    psi = _psi(cfg)
    if family == "resurrected" and psi is None:
        psi = weights.PsiSpec("constant_one")
    w = _family_weight(family, alpha, psi, _weight(cfg))
    if w is None:
        raise ConfigError("this family needs an explicit weight")
    seed = int(cfg.get("seed", 0))
    n_pairs = int(cfg.get("n_pairs", 200))
    cap = float(cfg.get("cap", 50.0))
    delta_range = tuple(cfg.get("delta_range", (1e-3, 1e2)))
    sep_range = tuple(cfg.get("sep_range", (1e-2, 1e2)))

    kind = "comparison" if family == "comparison" else family
    spec = kernels.KernelSpec(
        kind, dom, alpha,
        weight=w if kind in ("comparison",) else None,
        psi=psi if kind == "resurrected" else None)
    xs, ys = kernels.sample_pairs(dom, n_pairs, seed, delta_range, sep_range)
    a0 = w.a0

    def one(i: int) -> Case:
        kv = kernels.evaluate(spec, xs[i], ys[i], seed=seed + 7919 * i)
        r = float(np.linalg.norm(xs[i] - ys[i]))
        dx = min(geometry.delta_D(dom, xs[i]), a0)
        dy = min(geometry.delta_D(dom, ys[i]), a0)
        ref = r ** (-dom.d - alpha) * float(
            weights.eval_weight(w, min(r, a0) ** 2 / (dx * dy)))
        return Case(case_id=f"pair{i:04d}",
                    inputs={"x": [float(v) for v in xs[i]],
                            "y": [float(v) for v in ys[i]]},
                    measured=kv.value, bound=ref, ratio=kv.value / ref)

    cases = _sorted(_pmap(one, range(n_pairs)))
    passed = _band_ok(cases, cap)
    grid = {"domain": geometry.domain_to_dict(dom), "alpha": alpha,
            "family": family, "n_pairs": n_pairs,
            "weight": weights.weight_to_dict(w),
            "delta_range": list(delta_range), "sep_range": list(sep_range)}
    tol = {"cap": cap}
    return cases, passed, seed, grid, tol


def _suite_condition_a(cfg):
    return _ratio_suite(cfg, "comparison")


def _suite_kernel_neumann(cfg):
    return _ratio_suite(cfg, "neumann")


def _suite_kernel_trace(cfg):
    return _ratio_suite(cfg, "trace")


def _suite_kernel_resurrected(cfg):
    return _ratio_suite(cfg, "resurrected")


# ---------------------------------------------------------------------------
# Tail suite


def _suite_tail_two_sided(cfg):
    dom = _domain(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    w = _weight(cfg, default=weights.WeightSpec("log", a0=1.0))
    seed = int(cfg.get("seed", 0))
    cap = float(cfg.get("cap", 30.0))
    deltas = np.asarray(cfg.get("delta_grid", np.geomspace(1e-2, 10.0, 5)),
                        dtype=float)
    rs = np.asarray(cfg.get("r_grid", np.geomspace(0.1, 10.0, 4)),
                    dtype=float)
    lam = 4.0 + 5.0 / dom.kappa
    spec = kernels.KernelSpec("comparison", dom, alpha, weight=w)
    a0 = w.a0

    jobs = [(i, j, float(dv), float(rv)) for i, dv in enumerate(deltas)
            for j, rv in enumerate(rs)]

    def one(job) -> list:
        i, j, dv, rv = job
        x = _point_at_depth(dom, dv)
        phi = float(weights.eval_weight(w, min(rv, a0) / min(dv, a0)))
        out = []
        up = kernels.tail_integral(spec, x, rv)
        out.append(Case(
            case_id=f"d{i}r{j}/upper",
            inputs={"delta": dv, "r": rv, "side": "upper"},
            measured=rv ** alpha * up.value, bound=phi,
            ratio=rv ** alpha * up.value / phi))
        low = kernels.tail_integral(spec, x, rv, r_outer=lam * rv,
                                    min_delta=rv)
        out.append(Case(
            case_id=f"d{i}r{j}/lower",
            inputs={"delta": dv, "r": rv, "side": "lower",
                    "r_outer": lam * rv, "min_delta": rv},
            measured=rv ** alpha * low.value, bound=phi,
            ratio=rv ** alpha * low.value / phi))
        return out

    cases = _sorted(c for chunk in _pmap(one, jobs) for c in chunk)
    passed = _spread_ok(cases, cap)
    grid = {"domain": geometry.domain_to_dict(dom), "alpha": alpha,
            "weight": weights.weight_to_dict(w),
            "delta_grid": [float(v) for v in deltas],
            "r_grid": [float(v) for v in rs], "lambda": lam}
    return cases, passed, seed, grid, {"cap": cap}


# ---------------------------------------------------------------------------
# Boundary-strip suite


def _suite_aikawa(cfg):
    dom = _domain(cfg, "half_space")
    q = float(cfg.get("q", 0.5))
    seed = int(cfg.get("seed", 0))
    n_mc = int(cfg.get("n_mc", 200_000))
    refine = int(cfg.get("refine_factor", 4))
    stability = float(cfg.get("stability", 0.2))
    r_hi = 3.0
    if math.isfinite(dom.R0):
        r_hi = min(r_hi, 0.9 * dom.R0)
    rgrid = np.asarray(cfg.get("r_grid", np.geomspace(r_hi / 8.0, r_hi, 5)),
                       dtype=float)
    fracs = np.asarray(cfg.get("s_fracs", (0.02, 0.1, 0.4, 1.0)),
                       dtype=float)
    x0 = _boundary_point(dom)

    jobs = [(i, j, float(rv), float(rv * fv), tag)
            for i, rv in enumerate(rgrid) for j, fv in enumerate(fracs)
            for tag in ("", "/fine")]

    def one(job) -> Case:
        i, j, rv, sv, tag = job
        n = n_mc * refine if tag else n_mc
        vol, ci = geometry.strip_volume_mc(dom, x0, rv, sv, n,
                                           seed=seed + 31 * i + j)
        ref = sv ** q * max(sv, rv) ** (dom.d - q)
        return Case(case_id=f"r{i}s{j}{tag}",
                    inputs={"r": rv, "s": sv, "n_mc": n, "ci": ci},
                    measured=vol, bound=ref, ratio=vol / ref)

    cases = _sorted(_pmap(one, jobs))
    coarse = [c for c in cases if not c.case_id.endswith("/fine")]
    fine = [c for c in cases if c.case_id.endswith("/fine")]
    c0 = _fit_midpoint([c.ratio for c in coarse])
    c1 = _fit_midpoint([c.ratio for c in fine])
    passed = (math.isfinite(c0) and math.isfinite(c1)
              and max(c0 / c1, c1 / c0) <= 1.0 + stability)
    grid = {"domain": geometry.domain_to_dict(dom), "q": q,
            "r_grid": [float(v) for v in rgrid],
            "s_fracs": [float(v) for v in fracs], "n_mc": n_mc,
            "refine_factor": refine}
    return cases, passed, seed, grid, {"stability": stability}


# ---------------------------------------------------------------------------
# Heat-kernel two-sided suite


def _hk_groups(cfg, dom, alpha, model):
    groups = cfg.get("groups")
    if groups is not None:
        return [(float(g["t"]), list(map(float, g["x0"])),
                 [list(map(float, y)) for y in g["targets"]])
                for g in groups]
    t = float(cfg.get("t", 1.0))
    th = t ** (1.0 / alpha)
    # the jump chain is compared off-diagonal only, so its default grid
    # skips the coincident target
    mults = (1.0, 2.0, 3.5) if model == "generic_ctmc" \
        else (0.0, 0.5, 1.5, 3.0)
    out = []
    for depth in (th / 20.0, th / 2.0, 2.0 * th):
        x0 = _point_at_depth(dom, depth)
        targets = []
        for mult in mults:
            y = x0.copy()
            y[0] = y[0] + mult * th
            targets.append([float(v) for v in y])
        out.append((t, [float(v) for v in x0], targets))
    return out


def _suite_hk_two_sided(cfg):
    dom = _domain(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    model = cfg.get("model", "resurrected")
    seed = int(cfg.get("seed", 0))
    n_paths = int(cfg.get("n_paths", 100_000))
    cap = float(cfg.get("cap", 400.0))
    groups = _hk_groups(cfg, dom, alpha, cfg.get("model", "resurrected"))

    psi = _psi(cfg)
    eps = cfg.get("eps")
    if model == "resurrected":
        if psi is None:
            psi = weights.PsiSpec("constant_one")
        comp = weights.psi1(psi)
    elif model == "neumann":
        comp = weights.WeightSpec("log")
    elif model == "trace":
        comp = weights.psi1(weights.PsiSpec("power_cap", p=alpha / 2.0))
    elif model == "generic_ctmc":
        comp = _weight(cfg, default=weights.WeightSpec("log", a0=1.0))
        if eps is None:
            tmin = min(g[0] for g in groups)
            eps = tmin ** (1.0 / alpha) / 16.0
        eps = float(eps)
        for t, x0, targets in groups:
            for y in targets:
                sep = float(np.linalg.norm(np.asarray(y) - np.asarray(x0)))
                if sep < 8.0 * eps:
                    raise ConfigError(
                        "targets must sit at least 8 eps from the start")
    else:
        raise ConfigError(f"unknown model {model!r}")

    cases = []
    halving = []
    for gi, (t, x0, targets) in enumerate(groups):
        h = t ** (1.0 / alpha) / 4.0
        if model == "generic_ctmc":
            kspec = kernels.KernelSpec("comparison", dom, alpha, weight=comp)
            sim_cfg = simulate.SimConfig(
                model="generic_ctmc", dom=dom, alpha=alpha, t=t,
                n_paths=n_paths, seed=seed + 1000 * gi, kernel=kspec,
                eps=eps)
        else:
            sim_cfg = simulate.SimConfig(
                model=model, dom=dom, alpha=alpha, t=t, n_paths=n_paths,
                seed=seed + 1000 * gi, dt=t / 2000.0, psi=psi)
        pe = simulate.simulate_paths(sim_cfg, x0)
        ests = [simulate.estimate_heat_kernel(sim_cfg, x0, y, h, endpoints=pe)
                for y in targets]
        for yi, (y, est) in enumerate(zip(targets, ests)):
            pt = bounds.hk_bound(dom, comp, alpha, comp.a0, t, x0, y).p_tilde
            cases.append(Case(
                case_id=f"g{gi}y{yi}",
                inputs={"t": t, "x0": x0, "y": y, "h": h,
                        "p_hat": est.value, "ci": est.ci,
                        "hits": est.hits},
                measured=est.value, bound=pt,
                ratio=est.value / pt))
        if gi == 0 and model != "generic_ctmc":
            half_cfg = simulate.SimConfig(
                model=model, dom=dom, alpha=alpha, t=t, n_paths=n_paths,
                seed=seed + 1000 * gi, dt=t / 4000.0, psi=psi)
            pe2 = simulate.simulate_paths(half_cfg, x0)
            for yi, (y, est) in enumerate(zip(targets, ests)):
                est2 = simulate.estimate_heat_kernel(half_cfg, x0, y, h,
                                                     endpoints=pe2)
                shift = abs(est2.value - est.value)
                band = 3.0 / 1.96 * math.hypot(est.ci, est2.ci)
                halving.append(Case(
                    case_id=f"halving/g{gi}y{yi}",
                    inputs={"t": t, "x0": x0, "y": y,
                            "p_hat_half": est2.value},
                    measured=shift, bound=band,
                    ratio=shift / band if band > 0 else 0.0))

    main = _sorted(cases)
    all_cases = _sorted(list(main) + halving)
    ratios = [c.ratio for c in main]
    fitted = max(max(ratios), 1.0 / min(ratios)) if min(ratios) > 0 \
        else math.inf
    passed = fitted <= cap and all(c.measured <= c.bound for c in halving)
    grid = {"domain": geometry.domain_to_dict(dom), "alpha": alpha,
            "model": model, "n_paths": n_paths,
            "groups": [{"t": t, "x0": x0, "targets": tg}
                       for t, x0, tg in groups]}
    if model == "generic_ctmc":
        grid["eps"] = eps
        grid["weight"] = weights.weight_to_dict(comp)
    elif model == "resurrected":
        grid["psi"] = weights.psi_to_dict(psi)
    return all_cases, passed, seed, grid, {"cap": cap}


# ---------------------------------------------------------------------------
# Occupation suite


def _suite_occupation(cfg):
    dom = _domain(cfg)
    alpha = float(cfg.get("alpha", 1.2))
    model = cfg.get("model", "neumann")
    psi = _psi(cfg)
    phi = _weight(cfg, key="phi", default=weights.WeightSpec("log"))
    a0 = float(cfg.get("a0", 1.0))
    seed = int(cfg.get("seed", 0))
    t = float(cfg.get("t", 1.0))
    n_paths = int(cfg.get("n_paths", 2000))
    cap = float(cfg.get("cap", 10.0))
    starts = cfg.get("starts")
    if starts is None:
        depths = (0.0, 1e-3, 1e-2, 0.1, 0.3, 1.0, 2.0, 5.0, 10.0, 100.0)
        starts = [[float(v) for v in _point_at_depth(dom, dv)]
                  for dv in depths]

    def run(phi_spec, x0, tag):
        sim_cfg = simulate.SimConfig(model=model, dom=dom, alpha=alpha, t=t,
                                     n_paths=n_paths, seed=seed, dt=t / 1000.0,
                                     psi=psi)
        mean, ci = simulate.occupation_phi_average(sim_cfg, x0, phi_spec,
                                                   a0=a0)
        return Case(case_id=tag, inputs={"x0": list(x0), "ci": ci},
                    measured=mean, bound=1.0, ratio=mean)

    cases = [run(phi, x0, f"start{i:02d}") for i, x0 in enumerate(starts)]
    control = run(weights.WeightSpec("constant_one"), starts[0], "control")
    cases.append(control)
    cases = _sorted(cases)
    main = [c for c in cases if c.case_id != "control"]
    passed = (control.measured == 1.0
              and all(math.isfinite(c.measured) for c in main)
              and max(c.measured for c in main) <= cap)
    grid = {"domain": geometry.domain_to_dict(dom), "alpha": alpha,
            "model": model, "t": t, "n_paths": n_paths,
            "phi": weights.weight_to_dict(phi), "a0": a0,
            "starts": [list(s) for s in starts]}
    return cases, passed, seed, grid, {"cap": cap}


# ---------------------------------------------------------------------------
# Truncated-chain decay suite


def _decay_fit(cases):
    """Log-linear fit of exceedance vs crossing count; (slope, R^2)."""
    xs = np.array([c.inputs["r_over_eps"] for c in cases
                   if c.measured > 0.0])
    ys = np.log([c.measured for c in cases if c.measured > 0.0])
    if xs.size < 4:
        return math.nan, 0.0
    A = np.stack([xs, np.ones_like(xs)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(A, ys, rcond=None)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    ss_res = float(res[0]) if res.size else float(
        ((ys - A @ coef) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), r2


def _suite_truncated_decay(cfg):
    dom = _domain(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    seed = int(cfg.get("seed", 0))
    eps0 = float(cfg.get("eps", 0.05))
    n_paths = int(cfg.get("n_paths", 30_000))
    w = _weight(cfg, default=weights.WeightSpec("log", a0=1.0))
    mults = np.asarray(cfg.get("r_mults", (1, 2, 3, 4, 5, 6, 8, 10)),
                       dtype=float)
    r2_floor = float(cfg.get("r2_floor", 0.9))

    cases = []
    for tag, eps in (("", eps0), ("/fine", eps0 / 2.0)):
        t = eps ** alpha
        x0 = _point_at_depth(dom, max(50.0 * eps, 1.0))
        kspec = kernels.KernelSpec("comparison", dom, alpha, weight=w)
        sim_cfg = simulate.SimConfig(model="generic_ctmc", dom=dom,
                                     alpha=alpha, t=t, n_paths=n_paths,
                                     seed=seed, kernel=kspec, eps=eps / 8.0)
        pe = simulate.simulate_paths(sim_cfg, x0)
        spread = np.linalg.norm(pe.points - np.asarray(x0), axis=1)
        for mi, mv in enumerate(mults):
            p = float((spread > mv * eps).mean())
            cases.append(Case(
                case_id=f"m{mi:02d}{tag}",
                inputs={"eps": eps, "t": t, "r_over_eps": float(mv)},
                measured=p, bound=1.0, ratio=p))
    cases = _sorted(cases)
    ok = True
    for tag in ("", "/fine"):
        sub = [c for c in cases if c.case_id.endswith("/fine") == bool(tag)]
        slope, r2 = _decay_fit(sub)
        ok = ok and math.isfinite(slope) and slope < 0.0 and r2 >= r2_floor
    grid = {"domain": geometry.domain_to_dict(dom), "alpha": alpha,
            "eps": eps0, "n_paths": n_paths,
            "weight": weights.weight_to_dict(w),
            "r_mults": [float(v) for v in mults]}
    return cases, ok, seed, grid, {"r2_floor": r2_floor}


# ---------------------------------------------------------------------------
# Cross-model suite


def _suite_cross_model(cfg):
    dom = _domain(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    seed = int(cfg.get("seed", 0))
    n_pairs = int(cfg.get("n_pairs", 50))
    tol = float(cfg.get("identity_tol", 1e-6))
    band = float(cfg.get("ratio_band", 0.1))
    xs, ys = kernels.sample_pairs(dom, n_pairs, seed,
                                  delta_range=(1e-2, 10.0),
                                  sep_range=(1e-1, 10.0))
    c_da = kernels.stable_constant(dom.d, alpha)
    flat = kernels.KernelSpec("resurrected", dom, alpha,
                              psi=weights.PsiSpec("constant_one"))
    neu = kernels.KernelSpec("neumann", dom, alpha)
    capped = kernels.KernelSpec("resurrected", dom, alpha,
                                psi=weights.PsiSpec("power_cap",
                                                    p=alpha / 2.0))
    trc = kernels.KernelSpec("trace", dom, alpha)

    def one(i: int) -> list:
        out = []
        rv = kernels.evaluate(flat, xs[i], ys[i]).value * c_da
        nv = kernels.evaluate(neu, xs[i], ys[i]).value
        out.append(Case(case_id=f"identity/pair{i:03d}",
                        inputs={"x": [float(v) for v in xs[i]],
                                "y": [float(v) for v in ys[i]]},
                        measured=rv, bound=nv, ratio=rv / nv))
        tv = kernels.evaluate(trc, xs[i], ys[i]).value
        cv = kernels.evaluate(capped, xs[i], ys[i]).value
        out.append(Case(case_id=f"ratio/pair{i:03d}",
                        inputs={"x": [float(v) for v in xs[i]],
                                "y": [float(v) for v in ys[i]]},
                        measured=tv, bound=cv, ratio=tv / cv))
        return out

    cases = _sorted(c for chunk in _pmap(one, range(n_pairs)) for c in chunk)
    ident = [c.ratio for c in cases if c.case_id.startswith("identity/")]
    rel = [c.ratio for c in cases if c.case_id.startswith("ratio/")]
    mid = float(np.median(rel))
    passed = (max(abs(r - 1.0) for r in ident) <= tol
              and min(rel) >= (1.0 - band) * mid
              and max(rel) <= (1.0 + band) * mid)
    grid = {"domain": geometry.domain_to_dict(dom), "alpha": alpha,
            "n_pairs": n_pairs}
    return cases, passed, seed, grid, {"identity_tol": tol,
                                       "ratio_band": band}


# ---------------------------------------------------------------------------
# Entry point and serialization


_SUITE_FNS = {
    "condition_a": _suite_condition_a,
    "tail_two_sided": _suite_tail_two_sided,
    "aikawa": _suite_aikawa,
    "kernel_neumann": _suite_kernel_neumann,
    "kernel_trace": _suite_kernel_trace,
    "kernel_resurrected": _suite_kernel_resurrected,
    "hk_two_sided": _suite_hk_two_sided,
    "occupation": _suite_occupation,
    "truncated_decay": _suite_truncated_decay,
    "cross_model": _suite_cross_model,
}


def run_suite(name: str, cfg: dict | None = None) -> Report:
    if name not in _SUITE_FNS:
        raise ConfigError(f"unknown suite {name!r}")
    cfg = dict(cfg or {})
    start = time.perf_counter()
    cases, passed, seed, grid, tol = _SUITE_FNS[name](cfg)
    duration = time.perf_counter() - start
    return Report(
        suite=name, cases=tuple(cases),
        summary=_summarize(cases, passed),
        provenance={"seed": seed, "grid": grid, "tolerances": tol,
                    "duration_s": duration})


def report_to_obj(report: Report, with_duration: bool = True) -> dict:
    prov = dict(report.provenance)
    if not with_duration:
        prov.pop("duration_s", None)
    return {
        "suite": report.suite,
        "cases": [{"case_id": c.case_id, "inputs": c.inputs,
                   "measured": c.measured, "bound": c.bound,
                   "ratio": c.ratio} for c in report.cases],
        "summary": {"min_ratio": report.summary.min_ratio,
                    "max_ratio": report.summary.max_ratio,
                    "median_ratio": report.summary.median_ratio,
                    "fitted_C": report.summary.fitted_C,
                    "pass": report.summary.passed},
        "provenance": prov,
    }


def report_json_bytes(report: Report, with_duration: bool = True) -> bytes:
    obj = report_to_obj(report, with_duration)
    return (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
            ).encode()


def _atomic_write(path, data: bytes) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_report(report: Report, outdir) -> None:
    """report.json plus the CSV mirror of the case table, atomically."""
    import csv
    import io

    os.makedirs(outdir, exist_ok=True)
    _atomic_write(os.path.join(outdir, "report.json"),
                  report_json_bytes(report))
    buf = io.StringIO()
    out = csv.writer(buf)
    out.writerow(["case_id", "measured", "bound", "ratio", "inputs"])
    for c in report.cases:
        out.writerow([c.case_id, repr(c.measured), repr(c.bound),
                      repr(c.ratio),
                      json.dumps(c.inputs, sort_keys=True)])
    _atomic_write(os.path.join(outdir, "cases.csv"),
                  buf.getvalue().encode())
