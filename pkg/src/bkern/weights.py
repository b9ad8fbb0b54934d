"""Blow-up weight functions and their scaling indices.

A weight amplifies a jump kernel near the boundary. The catalog:
constant one, ``log(e+r)``, the capped power ``max(1, r^beta)``, and
weights obtained by integrating a generator ``psi`` against ``dv/v``
(the route by which resurrection kernels acquire their blow-up).
All weights are continuous, non-decreasing, and equal 1 at 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ModelError, RangeError

_PSI_KINDS = ("constant_one", "power", "power_cap")
_WEIGHT_KINDS = ("constant_one", "log", "power", "psi1_of")


@dataclass(frozen=True)
class PsiSpec:
    """Generator for the resurrection-weight family.

    ``power`` is v^p, ``power_cap`` is max(1, v^p). gamma1/gamma2 are
    the declared weak lower/upper scaling exponents; both are derived
    from the kind here and must stay below min(1, alpha) wherever an
    alpha enters (checked at the point of use).
    """

    kind: str
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in _PSI_KINDS:
            raise InputError(f"unknown psi kind {self.kind!r}")
        if self.kind == "constant_one":
            object.__setattr__(self, "p", 0.0)
        elif not 0.0 < self.p < 1.0:
            raise RangeError("psi exponent must lie in (0, 1)")

    @property
    def gamma1(self) -> float:
        return self.p if self.kind == "power" else 0.0

    @property
    def gamma2(self) -> float:
        return self.p


def eval_psi(psi: PsiSpec, v) -> np.ndarray | float:
    """Evaluate the generator pointwise. ``v`` must be >= 0."""
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0):
        raise InputError("psi argument must be nonnegative")
    if psi.kind == "constant_one":
        out = np.ones_like(arr)
    elif psi.kind == "power":
        out = arr ** psi.p
    else:
        out = np.maximum(1.0, arr ** psi.p)
    return float(out) if np.isscalar(v) or arr.ndim == 0 else out


@dataclass(frozen=True)
class WeightSpec:
    """A blow-up weight with declared scaling metadata.

    ``beta_bar`` is the declared upper scaling index (authoritative;
    the empirical estimator below is a cross-check). ``a0`` truncates
    the weight argument in kernel formulas; +inf means no truncation.
    """

    kind: str
    beta: float = 0.0
    psi: PsiSpec | None = None
    a0: float = math.inf
    beta_bar: float | None = None

    def __post_init__(self):
        if self.kind not in _WEIGHT_KINDS:
            raise InputError(f"unknown weight kind {self.kind!r}")
        if self.kind == "power" and self.beta < 0:
            raise RangeError("power weight needs beta >= 0")
        if self.kind == "psi1_of" and self.psi is None:
            raise InputError("psi1_of weight needs a psi spec")
        if not self.a0 > 0:
            raise RangeError("a0 must be positive")
        if self.beta_bar is None:
            object.__setattr__(self, "beta_bar", self._default_beta_bar())
        if self.beta_bar < 0:
            raise RangeError("beta_bar must be >= 0")

    def _default_beta_bar(self) -> float:
        if self.kind == "power":
            return self.beta
        if self.kind == "psi1_of":
            return self.psi.gamma2
        return 0.0


def eval_weight(w: WeightSpec, r) -> np.ndarray | float:
    """Closed-form weight value at ratio ``r`` >= 0 (``inf`` allowed)."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise InputError("weight argument must be nonnegative")
    if w.kind == "constant_one":
        out = np.ones_like(arr)
    elif w.kind == "log":
        out = np.log(math.e + arr)
    elif w.kind == "power":
        with np.errstate(over="ignore"):
            out = np.maximum(1.0, arr ** w.beta)
    else:
        out = _psi1_value(w.psi, arr)
    return float(out) if np.isscalar(r) or arr.ndim == 0 else out


def _psi1_value(psi: PsiSpec, u: np.ndarray) -> np.ndarray:
    """max(1, integral_1^u psi(v) dv/v), closed form per kind.

    Arguments below 1 are lifted to 1 (the integral is empty there),
    so the result is a genuine weight with value 1 at 0.
    """
    u = np.maximum(u, 1.0)
    if psi.kind == "constant_one":
        raw = np.log(u)
    else:
        # v^p and max(1, v^p) agree on v >= 1, so one antiderivative
        with np.errstate(over="ignore"):
            raw = (u ** psi.p - 1.0) / psi.p
        raw = np.where(np.isinf(u), np.inf, raw)
    return np.maximum(1.0, raw)


def psi1(psi: PsiSpec) -> WeightSpec:
    """Weight generated by ``psi``: u -> max(1, int_1^u psi(v)/v dv)."""
    return WeightSpec(kind="psi1_of", psi=psi)


def upper_index_estimate(w: WeightSpec, grid) -> float:
    """Empirical upper scaling exponent over a log-spaced grid.

    Takes the max two-point log-log slope over all grid pairs. The
    grid needs at least 10 points spanning at least 4 decades. This
    estimates the declared index from below; WeightSpec.beta_bar stays
    authoritative.
    """
    g = np.sort(np.asarray(grid, dtype=float))
    if g.size < 10:
        raise InputError("grid needs at least 10 points")
    if np.any(g <= 0):
        raise InputError("grid ratios must be positive")
    if g[-1] / g[0] < 1e4:
        raise InputError("grid must span at least 4 decades")
    vals = np.log(eval_weight(w, g))
    lg = np.log(g)
    dv = vals[None, :] - vals[:, None]
    dl = lg[None, :] - lg[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = np.where(dl > 0, dv / dl, -np.inf)
    return max(0.0, float(slopes.max()))


def beta1(beta_bar: float, gamma: float, alpha: float) -> float:
    """Midpoint exponent between the weight index and min(gamma, alpha).

    The model requires beta_bar strictly below min(gamma, alpha); at or
    past that threshold the kernel hypotheses fail.
    """
    cap = min(gamma, alpha)
    if not beta_bar < cap:
        raise ModelError(
            f"weight index {beta_bar} must be < min(gamma, alpha) = {cap}")
    return 0.5 * (cap + beta_bar)


# ---------------------------------------------------------------------------
# TOML plumbing


def psi_from_dict(cfg: dict) -> PsiSpec:
    if isinstance(cfg, str):
        cfg = {"kind": cfg}
    known = {"kind", "p"}
    extra = set(cfg) - known
    if extra:
        raise InputError(f"unknown psi keys {sorted(extra)}")
    if "kind" not in cfg:
        raise InputError("psi table needs a kind")
    return PsiSpec(kind=cfg["kind"], p=float(cfg.get("p", 0.0)))


def psi_to_dict(psi: PsiSpec) -> dict:
    out = {"kind": psi.kind}
    if psi.kind != "constant_one":
        out["p"] = psi.p
    return out


def weight_from_dict(cfg: dict) -> WeightSpec:
    """Parse a ``[weight]`` table.

    ``kind="psi1"`` takes the generator inline: ``psi="power_cap"
    p=0.5``, or a nested ``psi`` table.
    """
    known = {"kind", "beta", "psi", "p", "a0", "beta_bar"}
    extra = set(cfg) - known
    if extra:
        raise InputError(f"unknown weight keys {sorted(extra)}")
    if "kind" not in cfg:
        raise InputError("weight table needs a kind")
    kind = cfg["kind"]
    if kind == "psi1":
        kind = "psi1_of"
    kw = {"kind": kind}
    if "beta" in cfg:
        kw["beta"] = float(cfg["beta"])
    if kind == "psi1_of":
        psi_cfg = cfg.get("psi")
        if isinstance(psi_cfg, str):
            kw["psi"] = psi_from_dict({"kind": psi_cfg, **(
                {"p": cfg["p"]} if "p" in cfg else {})})
        elif isinstance(psi_cfg, dict):
            kw["psi"] = psi_from_dict(psi_cfg)
        else:
            raise InputError("psi1 weight needs an inline psi")
    elif "p" in cfg:
        raise InputError("p is only valid for psi1 weights")
    if "a0" in cfg:
        kw["a0"] = float(cfg["a0"])
    if "beta_bar" in cfg:
        kw["beta_bar"] = float(cfg["beta_bar"])
    return WeightSpec(**kw)


def weight_to_dict(w: WeightSpec) -> dict:
    if w.kind == "psi1_of":
        out = {"kind": "psi1", "psi": w.psi.kind}
        if w.psi.kind != "constant_one":
            out["p"] = w.psi.p
    elif w.kind == "power":
        out = {"kind": "power", "beta": w.beta}
    else:
        out = {"kind": w.kind}
    if math.isfinite(w.a0):
        out["a0"] = w.a0
    return out
