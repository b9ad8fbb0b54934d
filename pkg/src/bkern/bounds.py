"""Sharp two-sided heat-kernel bound form and its regime logic.

The bound caps the on-diagonal density at ``t^{-d/alpha}`` and switches
to a jump-type profile off the diagonal, with boundary distances
softened at spatial scale ``t^{1/alpha}`` so points on (or near) the
boundary stay finite.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import geometry, weights
from .errors import DomainError, InputError, RangeError

_REGIMES = ("on_diagonal", "off_diagonal")


@dataclass(frozen=True)
class HKBoundValue:
    """Evaluated bound at one (t, x, y).

    ``delta_xt`` and ``delta_yt`` are the softened boundary distances
    actually used in the profile argument.
    """

    p_tilde: float
    regime: str
    delta_xt: float
    delta_yt: float

    def __post_init__(self):
        if self.regime not in _REGIMES:
            raise InputError(f"unknown regime {self.regime!r}")
        if not self.p_tilde > 0:
            raise InputError("bound values are strictly positive")


def _check_t(dom: geometry.DomainSpec, t: float, alpha: float) -> None:
    if not 0.0 < t < math.inf:
        raise RangeError("time must be positive and finite")
    horizon = dom.R0 ** alpha
    if t >= horizon:
        raise RangeError(
            f"time {t} at or past the horizon {horizon}; large times on "
            "bounded domains flatten to a constant and are out of scope")


def _closure_point(dom: geometry.DomainSpec, x) -> np.ndarray:
    xa = geometry.as_point(dom, x)
    if not geometry.contains(dom, xa, closed=True):
        raise DomainError("point must lie in the closed domain")
    return xa


def delta_t(dom: geometry.DomainSpec, x, t: float, alpha: float) -> float:
    """Boundary distance softened from below by the spatial scale of t."""
    if not 0.0 < alpha < 2.0:
        raise RangeError("alpha must lie in (0, 2)")
    if not 0.0 < t < math.inf:
        raise RangeError("time must be positive and finite")
    xa = _closure_point(dom, x)
    return max(geometry.delta_D(dom, xa), t ** (1.0 / alpha))


def hk_bound(dom: geometry.DomainSpec, weight: weights.WeightSpec,
             alpha: float, A0: float, t: float, x, y) -> HKBoundValue:
    """Two-sided heat-kernel bound form at (t, x, y).

    ``min(t^{-d/alpha}, t |x-y|^{-d-alpha} W)`` with ``W`` the blow-up
    weight of the truncated chord/softened-depth ratio. Coincident
    points are allowed and land in the on-diagonal regime.
    """
    if not 0.0 < alpha < 2.0:
        raise RangeError("alpha must lie in (0, 2)")
    if not A0 > 0:
        raise RangeError("A0 must be positive")
    _check_t(dom, t, alpha)
    xa = _closure_point(dom, x)
    ya = _closure_point(dom, y)
    d = dom.d
    th = t ** (1.0 / alpha)
    dxt = max(geometry.delta_D(dom, xa), th)
    dyt = max(geometry.delta_D(dom, ya), th)
    r = float(np.linalg.norm(xa - ya))
    diag = t ** (-d / alpha)
    regime = "on_diagonal" if r <= th else "off_diagonal"
    if r == 0.0:
        return HKBoundValue(diag, regime, dxt, dyt)
    arg = min(r, A0) ** 2 / (min(dxt, A0) * min(dyt, A0))
    off = t * r ** (-d - alpha) * float(weights.eval_weight(weight, arg))
    return HKBoundValue(min(diag, off), regime, dxt, dyt)


def write_bound_csv(path, d: int, rows) -> None:
    """Case table: time, coordinates, bound value, regime."""
    header = (["t"] + [f"x{i+1}" for i in range(d)]
              + [f"y{i+1}" for i in range(d)] + ["p_tilde", "regime"])
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for t, xv, yv, hkv in rows:
            out.writerow([repr(float(t))]
                         + [repr(float(c)) for c in np.atleast_1d(xv)]
                         + [repr(float(c)) for c in np.atleast_1d(yv)]
                         + [repr(float(hkv.p_tilde)), hkv.regime])
