"""Command-line front end.

One binary, subcommand style. A TOML config file is the primary input;
command-line flags override individual fields so a run stays
reproducible from one artifact. Exit codes: 0 on success, 1 when a
suite ran and failed its caps, 2 on usage or configuration errors.

Environment: ``BKERN_WORKERS`` caps the worker pool used inside the
library (default: logical cores), ``BKERN_SEED`` supplies the seed when
neither the config file nor a flag sets one.

TOML schema (all tables optional unless a subcommand needs them; see
``configs/`` for a committed example per suite)::

    suite = "aikawa"          # used by `suite` when no name is given
    outdir = "runs/aikawa"
    seed = 7
    n_pairs = 100             # any scalar suite option goes at top level

    [domain]
    kind = "half_space"       # half_line | half_space | ball |
    d = 2                     # exterior_ball | box_2d

    [weight]
    kind = "log"              # constant_one | log | power | power_cap |
    a0 = 1.0                  # psi1_of (via [weight.psi])

    [psi]
    kind = "power_cap"        # resurrection kernel: constant_one |
    p = 0.5                   # power | power_cap

    [caps]
    condition_a = 50.0        # per-suite ratio caps, config not code

    [sim]                     # `simulate` only
    model = "neumann"
    alpha = 1.2
    t = 1.0
    n_paths = 2000
    dt = 0.001
    x0 = [1.0]
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from . import geometry, kernels, simulate, verify, weights
from .errors import BkernError, ConfigError

_SUITE_KEY_BLOCKLIST = ("suite", "suites", "outdir", "caps")


def _load_toml(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}")


def _default_seed(data: dict, args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    if "seed" in data:
        return int(data["seed"])
    return int(os.environ.get("BKERN_SEED", "0"))


def _suite_cfg(name: str, data: dict, args) -> dict:
    cfg = {k: v for k, v in data.items() if k not in _SUITE_KEY_BLOCKLIST}
    cfg["seed"] = _default_seed(data, args)
    caps = data.get("caps", {})
    if name in caps:
        cfg["cap"] = float(caps[name])
    if getattr(args, "alpha", None) is not None:
        cfg["alpha"] = args.alpha
    if getattr(args, "n_paths", None) is not None:
        cfg["n_paths"] = args.n_paths
    return cfg


def _outdir(name: str, data: dict, args) -> str:
    if getattr(args, "outdir", None):
        return args.outdir
    return data.get("outdir", os.path.join("runs", name))


def _run_named_suite(name: str, data: dict, args) -> int:
    report = verify.run_suite(name, _suite_cfg(name, data, args))
    out = _outdir(name, data, args)
    verify.write_report(report, out)
    s = report.summary
    status = "pass" if s.passed else "FAIL"
    print(f"suite {name}: {status} min={s.min_ratio:.4g} "
          f"max={s.max_ratio:.4g} C={s.fitted_C:.4g} -> {out}")
    return 0 if s.passed else 1


def _replace_into(path: str, writer) -> None:
    # keep every file output atomic: write sideways, then rename
    tmp = path + ".tmp"
    writer(tmp)
    os.replace(tmp, path)


def _cmd_kernel(args) -> int:
    data = _load_toml(args.config)
    cfg = _suite_cfg("kernel", data, args)
    dom = verify._domain(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    family = cfg.get("family")
    if family is None:
        # suite configs name the family through the suite key
        suite = str(data.get("suite", ""))
        family = suite[len("kernel_"):] if suite.startswith("kernel_") \
            else "comparison"
    seed = int(cfg["seed"])
    n = int(cfg.get("n_pairs", 50))
    w = verify._family_weight(family, alpha, verify._psi(cfg),
                              verify._weight(cfg))
    spec = kernels.KernelSpec(
        family, dom, alpha,
        weight=w if family in ("comparison", "plain_stable") else None,
        psi=verify._psi(cfg) if family == "resurrected" else None)
    xs, ys = kernels.sample_pairs(dom, n, seed)
    a0 = w.a0
    rows = []
    for i in range(n):
        kv = kernels.evaluate(spec, xs[i], ys[i], seed=seed + 7919 * i)
        r = float(np.linalg.norm(xs[i] - ys[i]))
        dx = min(float(geometry.delta_D(dom, xs[i])), a0)
        dy = min(float(geometry.delta_D(dom, ys[i])), a0)
        ref = r ** (-dom.d - alpha) * float(
            weights.eval_weight(w, min(r, a0) ** 2 / (dx * dy)))
        rows.append((family, xs[i], ys[i], kv.value, kv.err, ref,
                     kv.value / ref))
    out = args.out or "kernel.csv"
    _replace_into(out, lambda p: kernels.write_kernel_csv(p, dom.d, rows))
    print(f"kernel {family}: {n} pairs -> {out}")
    return 0


def _cmd_tail(args) -> int:
    data = _load_toml(args.config)
    cfg = _suite_cfg("tail", data, args)
    dom = verify._domain(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    w = verify._weight(cfg, default=weights.WeightSpec("log", a0=1.0))
    spec = kernels.KernelSpec("comparison", dom, alpha, weight=w)
    deltas = [float(v) for v in cfg.get("delta_grid", (0.01, 0.1, 1.0))]
    rs = [float(v) for v in cfg.get("r_grid", (0.1, 1.0, 10.0))]
    out = args.out or "tail.csv"

    def write(path):
        import csv

        with open(path, "w", newline="") as fh:
            o = csv.writer(fh)
            o.writerow(["delta", "r", "value", "err", "scaled"])
            for dv in deltas:
                x = verify._point_at_depth(dom, dv)
                for rv in rs:
                    tv = kernels.tail_integral(spec, x, rv)
                    o.writerow([repr(dv), repr(rv), repr(tv.value),
                                repr(tv.err), repr(rv ** alpha * tv.value)])

    _replace_into(out, write)
    print(f"tail: {len(deltas) * len(rs)} rows -> {out}")
    return 0


def _cmd_simulate(args) -> int:
    data = _load_toml(args.config)
    sim = dict(data.get("sim", {}))
    if not sim:
        raise ConfigError("simulate needs a [sim] table in the config")
    x0 = sim.pop("x0", None)
    if x0 is None:
        raise ConfigError("[sim] must set x0")
    dom = verify._domain(data)
    psi = verify._psi(sim) or verify._psi(data)
    sim.pop("psi", None)
    kern = None
    if sim.get("model") == "generic_ctmc":
        w = verify._weight(data, default=weights.WeightSpec("log", a0=1.0))
        kern = kernels.KernelSpec("comparison", dom,
                                  float(sim.get("alpha", 1.0)), weight=w)
    if "seed" not in sim:
        sim["seed"] = _default_seed(data, args)
    if getattr(args, "n_paths", None) is not None:
        sim["n_paths"] = args.n_paths
    try:
        cfg = simulate.SimConfig(dom=dom, psi=psi, kernel=kern, **sim)
    except TypeError as exc:
        raise ConfigError(f"bad [sim] table: {exc}")
    pe = simulate.simulate_paths(cfg, x0)
    out = args.out or "endpoints.csv"
    _replace_into(out, lambda p: simulate.write_endpoints_csv(p, pe))
    print(f"simulate {cfg.model}: {pe.points.shape[0]} paths, "
          f"{pe.n_steps} steps -> {out}")
    return 0


def _cmd_suite(args) -> int:
    data = _load_toml(args.config)
    name = args.name or data.get("suite")
    if not name:
        raise ConfigError("suite needs a name (argument or `suite` key)")
    return _run_named_suite(name, data, args)


def _cmd_report(args) -> int:
    try:
        from bkern_plots import render_report
    except ModuleNotFoundError:
        raise ConfigError(
            "the plots package (bkern-plots) is not installed")
    written = render_report(args.bundle, args.out)
    print(f"report: {len(written)} files -> {args.out}")
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bkern",
        description="Kernel evaluation, path simulation, and named "
                    "verification suites.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--seed", type=int, help="override the seed")
        p.add_argument("--alpha", type=float, help="override alpha")
        if out_default is not None:
            p.add_argument("--out", default=None,
                           help=f"output file (default {out_default})")

    p = sub.add_parser("kernel", help="evaluate a kernel family on "
                                      "sampled pairs, write a CSV")
    common(p, "kernel.csv")
    p.set_defaults(fn=_cmd_kernel)

    p = sub.add_parser("tail", help="tabulate tail integrals on a grid")
    common(p, "tail.csv")
    p.set_defaults(fn=_cmd_tail)

    p = sub.add_parser("simulate", help="run paths, dump endpoints CSV")
    common(p, "endpoints.csv")
    p.add_argument("--n-paths", type=int, dest="n_paths")
    p.set_defaults(fn=_cmd_simulate)

    for alias, suite_name in (("aikawa", "aikawa"),
                              ("hk-check", "hk_two_sided")):
        p = sub.add_parser(alias, help=f"run the {suite_name} suite")
        common(p)
        p.add_argument("--outdir")
        p.add_argument("--n-paths", type=int, dest="n_paths")
        p.set_defaults(fn=lambda a, _n=suite_name:
                       _run_named_suite(_n, _load_toml(a.config), a))

    p = sub.add_parser("suite", help="run one named verification suite")
    p.add_argument("name", nargs="?",
                   help=f"one of: {', '.join(verify.SUITES)}")
    common(p)
    p.add_argument("--outdir")
    p.add_argument("--n-paths", type=int, dest="n_paths")
    p.set_defaults(fn=_cmd_suite)

    p = sub.add_parser("report", help="render plots from report bundles "
                                      "(delegates to bkern-plots)")
    p.add_argument("bundle", help="directory holding report.json files")
    p.add_argument("--out", default="plots")
    p.set_defaults(fn=_cmd_report)

    return ap


def run_cli(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help already
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BkernError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
