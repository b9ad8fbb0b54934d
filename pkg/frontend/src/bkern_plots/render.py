"""Static review pages for suite reports.

Walks a bundle directory for ``report.json`` files, draws one
log-ratio scatter per usable axis (separation scale and boundary
scale) with horizontal lines at the fitted constant and its
reciprocal, and writes an ``index.html`` linking everything. Rendering
is read-only over the bundle and deterministic: filenames derive from
the suite name plus a hash of the report's provenance (wall time
excluded), so a rerun reproduces the same names and bytes.

Malformed or unrecognized files are skipped with a logged warning
rather than failing the whole render.
"""
from __future__ import annotations

import hashlib
import html
import json
import logging
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

log = logging.getLogger("bkern_plots")

_REQUIRED_SUMMARY = {"min_ratio", "max_ratio", "fitted_C", "pass"}
# absent means the original layout; bump when the reader changes
_KNOWN_SCHEMAS = (None, 1, "1")

_PASS_COLOR = "#2e7d32"
_FAIL_COLOR = "#c62828"


def _load_report(path: str) -> dict | None:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        log.warning("skipping %s: %s", path, exc)
        return None
    if not isinstance(obj, dict):
        log.warning("skipping %s: not a report object", path)
        return None
    if obj.get("schema") not in _KNOWN_SCHEMAS:
        log.warning("skipping %s: unknown schema %r", path,
                    obj.get("schema"))
        return None
    if not (isinstance(obj.get("suite"), str)
            and isinstance(obj.get("cases"), list)
            and isinstance(obj.get("summary"), dict)
            and _REQUIRED_SUMMARY <= set(obj["summary"])):
        log.warning("skipping %s: missing report fields", path)
        return None
    return obj


def _prov_hash(obj: dict) -> str:
    prov = dict(obj.get("provenance", {}))
    prov.pop("duration_s", None)
    blob = json.dumps(prov, sort_keys=True, separators=(",", ":"),
                      default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _delta(domain: dict, p) -> float | None:
    """Boundary distance inside the domain named by the report grid."""
    if not isinstance(domain, dict) or not p:
        return None
    kind = domain.get("kind")
    q = [float(v) for v in p]
    if kind in ("half_line", "half_space"):
        return q[-1]
    if kind == "ball":
        return float(domain.get("radius", 1.0)) - math.hypot(*q)
    if kind == "exterior_ball":
        return math.hypot(*q) - float(domain.get("radius", 1.0))
    if kind == "box_2d":
        side = float(domain.get("side", 1.0))
        return min(min(c, side - c) for c in q)
    return None


def _axis_values(case: dict, grid: dict):
    """(separation scale, boundary scale) for one case, None when the
    inputs do not carry that information."""
    inp = case.get("inputs", {})
    dom = grid.get("domain", {})
    if "x" in inp and "y" in inp:
        x = np.asarray(inp["x"], dtype=float)
        y = np.asarray(inp["y"], dtype=float)
        sep = float(np.linalg.norm(x - y))
        dx = _delta(dom, inp["x"])
        dy = _delta(dom, inp["y"])
        dep = min(dx, dy) if dx is not None and dy is not None else None
        return sep, dep
    if "x0" in inp and "y" in inp and "t" in inp:
        alpha = float(grid.get("alpha", 1.0))
        th = float(inp["t"]) ** (1.0 / alpha)
        x = np.asarray(inp["x0"], dtype=float)
        y = np.asarray(inp["y"], dtype=float)
        dep = _delta(dom, inp["x0"])
        return float(np.linalg.norm(x - y)) / th, \
            dep / th if dep is not None else None
    if "delta" in inp and "r" in inp:
        return float(inp["r"]), float(inp["delta"])
    if "r" in inp and "s" in inp:
        return float(inp["r"]), float(inp["s"])
    if "r_over_eps" in inp:
        return float(inp["r_over_eps"]), None
    if "x0" in inp:
        return None, _delta(dom, inp["x0"])
    return None, None


_AXIS_LABELS = {"sep": "separation scale", "depth": "boundary scale"}


def _scatter(path: str, suite: str, passed: bool, fitted: float,
             xs, ratios, axis_kind: str) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xs = np.asarray(xs, dtype=float)
    ys = np.log10(np.asarray(ratios, dtype=float))
    if xs.size and np.all(xs > 0) and xs.max() / xs.min() > 30.0:
        ax.set_xscale("log")
    ax.scatter(xs, ys, s=14, alpha=0.75, color="#1565c0", edgecolors="none")
    if fitted and fitted > 0 and math.isfinite(fitted):
        c = abs(math.log10(fitted))
        ax.axhline(c, color="#6a1b9a", lw=1.0, ls="--", label="fitted C")
        ax.axhline(-c, color="#6a1b9a", lw=1.0, ls=":", label="1/C")
        ax.legend(loc="best", fontsize=8)
    ax.axhline(0.0, color="#9e9e9e", lw=0.8)
    ax.set_xlabel(_AXIS_LABELS[axis_kind])
    ax.set_ylabel("log10 ratio")
    badge = "PASS" if passed else "FAIL"
    ax.set_title(f"{suite} — {badge}",
                 color=_PASS_COLOR if passed else _FAIL_COLOR)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _render_one(obj: dict, out_dir: str) -> list[str]:
    suite = obj["suite"]
    tag = _prov_hash(obj)
    grid = obj.get("provenance", {}).get("grid", {})
    passed = bool(obj["summary"]["pass"])
    fitted = obj["summary"].get("fitted_C")
    fitted = float(fitted) if isinstance(fitted, (int, float)) else None

    cases = [c for c in obj["cases"]
             if isinstance(c.get("ratio"), (int, float)) and c["ratio"] > 0]
    axes = {"sep": [], "depth": []}
    for c in cases:
        sep, dep = _axis_values(c, grid)
        if sep is not None:
            axes["sep"].append((sep, c["ratio"]))
        if dep is not None:
            axes["depth"].append((dep, c["ratio"]))
    if not axes["sep"] and not axes["depth"] and cases:
        # nothing derivable from the inputs: fall back to the case index
        axes["sep"] = [(i + 1.0, c["ratio"]) for i, c in enumerate(cases)]

    written = []
    for kind in ("sep", "depth"):
        pts = axes[kind]
        if not pts:
            continue
        name = f"{suite}-{tag}-{kind}.png"
        _scatter(os.path.join(out_dir, name), suite, passed, fitted,
                 [p[0] for p in pts], [p[1] for p in pts], kind)
        written.append(name)
    return written


def _index_html(sections: list[dict]) -> str:
    rows = ["<!doctype html>", "<html><head><meta charset='utf-8'>",
            "<title>suite reports</title>",
            "<style>body{font-family:sans-serif;margin:2em}"
            ".pass{color:#2e7d32;font-weight:bold}"
            ".fail{color:#c62828;font-weight:bold}"
            "img{max-width:46%;margin:4px;border:1px solid #ddd}"
            "</style></head><body>", "<h1>suite reports</h1>"]
    if not sections:
        rows.append("<p>no reports</p>")
    for sec in sections:
        badge = ("<span class='pass'>PASS</span>" if sec["pass"]
                 else "<span class='fail'>FAIL</span>")
        rows.append(f"<h2>{html.escape(sec['suite'])} {badge}</h2>")
        s = sec["summary"]
        rows.append(
            "<p>ratio range [{:.4g}, {:.4g}], fitted C {:.4g}, "
            "{} cases</p>".format(s["min_ratio"], s["max_ratio"],
                                  s["fitted_C"], sec["n_cases"]))
        for img in sec["images"]:
            rows.append(f"<a href='{img}'><img src='{img}' "
                        f"alt='{html.escape(sec['suite'])}'></a>")
    rows.append("</body></html>")
    return "\n".join(rows) + "\n"


def render_report(bundle_dir, out_dir) -> list[str]:
    """Render every report under ``bundle_dir`` into ``out_dir``.

    Returns the paths of all files written (images plus the index).
    An empty or reportless bundle still produces an index page saying
    "no reports".
    """
    bundle_dir = os.fspath(bundle_dir)
    out_dir = os.fspath(out_dir)
    if not os.path.isdir(bundle_dir):
        raise FileNotFoundError(f"bundle directory not found: {bundle_dir}")
    os.makedirs(out_dir, exist_ok=True)

    found = []
    for root, _dirs, files in os.walk(bundle_dir):
        for name in files:
            if name.endswith("report.json"):
                found.append(os.path.join(root, name))
    reports = []
    for path in sorted(found):
        obj = _load_report(path)
        if obj is not None:
            reports.append(obj)
    reports.sort(key=lambda o: (o["suite"], _prov_hash(o)))

    written = []
    sections = []
    for obj in reports:
        images = _render_one(obj, out_dir)
        written += [os.path.join(out_dir, n) for n in images]
        sections.append({"suite": obj["suite"],
                         "pass": bool(obj["summary"]["pass"]),
                         "summary": obj["summary"],
                         "n_cases": len(obj["cases"]),
                         "images": images})

    index = os.path.join(out_dir, "index.html")
    with open(index, "w", encoding="utf-8") as fh:
        fh.write(_index_html(sections))
    written.append(index)
    return written
