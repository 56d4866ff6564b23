"""Command-line entry point: ``jmcover <subcommand> [flags]``.

Exit status is 0 on success, 1 on a domain error (bad geometry, infinite
moment, horizon exhausted, ...) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import coverage as cov
from . import limits
from .geom import GeometryError, parse_window
from .processes import RadiusLaw, RngSpec, default_horizon, sample_halo, sample_marked_poisson, \
    sample_spacetime_poisson, sample_spbm_halo

S = argparse.SUPPRESS


# ---------------------------------------------------------------------------
# validated flag types


def _num(kind, cond, what):
    def conv(text):
        try:
            v = kind(text)
        except (TypeError, ValueError):
            raise argparse.ArgumentTypeError(f"expected {what}, got {text!r}")
        if isinstance(v, float) and not math.isfinite(v):
            raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
        if not cond(v):
            raise argparse.ArgumentTypeError(f"expected {what}, got {text!r}")
        return v

    conv.__name__ = what
    return conv


pos_float = _num(float, lambda v: v > 0, "a positive number")
nonneg_float = _num(float, lambda v: v >= 0, "a nonnegative number")
real = _num(float, lambda v: True, "a real number")
pos_int = _num(int, lambda v: v >= 1, "a positive integer")
nonneg_int = _num(int, lambda v: v >= 0, "a nonnegative integer")
dim = _num(int, lambda v: 1 <= v <= 1000, "a dimension in 1..1000")


def law_type(text):
    try:
        return RadiusLaw.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def window_type(text):
    try:
        return parse_window(text)
    except (GeometryError, ValueError, json.JSONDecodeError) as e:
        raise argparse.ArgumentTypeError(f"bad window {text!r}: {e}")


def grid_type(text):
    """``lo:hi:step``."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:hi:step")
    if not (step > 0 and hi >= lo):
        raise argparse.ArgumentTypeError("need step > 0 and hi >= lo")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def float_list(conv):
    def parse(text):
        if isinstance(text, (list, tuple)):
            return [conv(str(t)) for t in text]
        return [conv(t) for t in str(text).split(",") if t]

    parse.__name__ = "list"
    return parse


def oracle_type(text):
    if text == "off":
        return None
    if text.startswith("grid:"):
        return pos_float(text[5:])
    raise argparse.ArgumentTypeError("expected off or grid:h")


def theorem_type(text):
    if text not in limits.theorem_ids():
        raise argparse.ArgumentTypeError(f"unknown theorem {text!r}; one of {', '.join(limits.theorem_ids())}")
    return text


# ---------------------------------------------------------------------------
# parser


DEFAULTS = {
    "common": {"window": "square", "seed": 0, "tol": None, "out": None, "format": "csv", "threads": 1},
    "constants": {"d": 2, "k": 1, "format": "json"},
    "limit-cdf": {"theorem": "jm-polygon", "d": 2, "k": 1, "area": None, "perimeter": None, "law": None,
                  "beta": None, "beta_grid": "-5:15:0.5"},
    "simulate-jm": {"rho": 1000.0, "t": None, "unrestricted": False},
    "simulate-spbm": {"n": 1000.0, "law": "constant:1", "r": None, "unrestricted": False},
    "threshold": {"n": 1000.0, "law": "constant:1", "k": 1, "unrestricted": False, "oracle": "off"},
    "cover-time": {"rho": 1000.0, "unrestricted": False, "oracle": "off"},
    "experiment": {"model": "jm_restricted", "scales": "100,1000,10000", "k": 1, "law": None, "reps": 1000,
                   "plot": None},
    "scaling-test": {"L": 3.0, "reps": 1000, "level": 0.01, "unrestricted": False},
    "equivalence-test": {"rho": 2000.0, "t": None, "reps": 1000},
    "chiu-check": {"L": "1e3,1e4,1e6,1e8", "u": "-2,0,2", "d": "2,3"},
    "tessellate": {"mode": "jm", "rho": 125.0, "n": 100.0, "law": "uniform:1", "window": "disc",
                   "resolution": 400, "format": "ppm", "png": None},
}

CONVERTERS = {
    "window": window_type, "seed": nonneg_int, "tol": pos_float, "threads": pos_int, "d": dim, "k": pos_int,
    "area": nonneg_float, "perimeter": nonneg_float, "law": law_type, "beta": real, "beta_grid": grid_type,
    "rho": pos_float, "t": pos_float, "n": pos_float, "r": pos_float, "oracle": oracle_type,
    "scales": float_list(pos_float), "reps": pos_int, "L": pos_float, "level": pos_float,
    "resolution": _num(int, lambda v: v >= 16, "an integer >= 16"), "theorem": theorem_type,
}


def _common(p, window=True, seed=True, tol=False, fmt=("csv", "json")):
    if window:
        p.add_argument("--window", type=window_type, default=S,
                       help="window: builtin name (square, disc, triangle, cube), inline JSON or JSON file "
                            "(length units)")
    if seed:
        p.add_argument("--seed", type=nonneg_int, default=S, help="master RNG seed (integer)")
    if tol:
        p.add_argument("--tol", type=pos_float, default=S,
                       help="bisection tolerance (length/time units; default 1e-7 x window diameter)")
    p.add_argument("--out", type=str, default=S, help="output file path (default: stdout)")
    if fmt:
        p.add_argument("--format", choices=fmt, default=S, help="output format")
    p.add_argument("--config", type=str, default=S, help="JSON file of flag values; explicit flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jmcover", description="Cover times of Johnson-Mehl growth and "
                                 "coverage thresholds of Boolean models.")
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("constants", help="table of the limit constants")
    p.add_argument("--d", type=dim, default=S, help="dimension (integer)")
    p.add_argument("--k", type=pos_int, default=S, help="coverage multiplicity (integer)")
    _common(p, window=False, seed=False)

    p = sub.add_parser("limit-cdf", help="evaluate a limiting CDF on a beta grid")
    p.add_argument("--theorem", type=theorem_type, default=S, help=f"one of {', '.join(limits.theorem_ids())}")
    p.add_argument("--d", type=dim, default=S, help="dimension (integer)")
    p.add_argument("--k", type=pos_int, default=S, help="coverage multiplicity (integer)")
    p.add_argument("--area", type=nonneg_float, default=S, help="|A| (volume units; default from --window)")
    p.add_argument("--perimeter", type=nonneg_float, default=S,
                   help="|dA| (surface units; default from --window)")
    p.add_argument("--law", type=law_type, default=S,
                   help="radius law constant:c | uniform:b | exp:rate | pareto:alpha[,xm] (length units)")
    p.add_argument("--beta", type=real, default=S, help="single standardized level (dimensionless)")
    p.add_argument("--beta-grid", dest="beta_grid", type=grid_type, default=S,
                   help="grid lo:hi:step of standardized levels (dimensionless)")
    _common(p, seed=False)

    p = sub.add_parser("simulate-jm", help="sample Johnson-Mehl seeds")
    p.add_argument("--rho", type=pos_float, default=S, help="seed intensity (per unit volume per unit time)")
    p.add_argument("--t", type=pos_float, default=S, help="time horizon t_max (time units; default: automatic)")
    p.add_argument("--unrestricted", action="store_true", default=S, help="sample whole-space seeds (halo)")
    _common(p, fmt=("csv",))

    p = sub.add_parser("simulate-spbm", help="sample a Boolean model")
    p.add_argument("--n", type=pos_float, default=S, help="point intensity (per unit volume)")
    p.add_argument("--law", type=law_type, default=S, help="radius law (length units)")
    p.add_argument("--r", type=pos_float, default=S, help="radius scale for halo sampling (length units)")
    p.add_argument("--unrestricted", action="store_true", default=S, help="sample whole-space centres (halo)")
    _common(p, fmt=("csv",))

    p = sub.add_parser("threshold", help="k-coverage threshold R of a sampled Boolean model")
    p.add_argument("--n", type=pos_float, default=S, help="point intensity (per unit area)")
    p.add_argument("--law", type=law_type, default=S, help="radius law (length units)")
    p.add_argument("--k", type=pos_int, default=S, help="coverage multiplicity (integer)")
    p.add_argument("--unrestricted", action="store_true", default=S, help="centres in the whole plane")
    p.add_argument("--oracle", type=oracle_type, default=S, help="off | grid:h (cross-check spacing, length units)")
    _common(p, tol=True, fmt=("json",))

    p = sub.add_parser("cover-time", help="Johnson-Mehl cover time of a sampled seed set")
    p.add_argument("--rho", type=pos_float, default=S, help="seed intensity (per unit area per unit time)")
    p.add_argument("--unrestricted", action="store_true", default=S, help="seeds in the whole plane")
    p.add_argument("--oracle", type=oracle_type, default=S, help="off | grid:h (cross-check spacing, length units)")
    _common(p, tol=True, fmt=("json",))

    p = sub.add_parser("experiment", help="replicated standardized cover times against limit laws")
    p.add_argument("--model", choices=("jm_restricted", "jm_unrestricted", "spbm_restricted", "spbm_unrestricted"),
                   default=S, help="simulated model")
    p.add_argument("--scales", type=float_list(pos_float), default=S,
                   help="comma-separated increasing intensities rho or n (per unit volume)")
    p.add_argument("--k", type=pos_int, default=S, help="coverage multiplicity (SPBM, integer)")
    p.add_argument("--law", type=law_type, default=S, help="radius law (SPBM, length units)")
    p.add_argument("--reps", type=pos_int, default=S, help="replications per scale (integer)")
    p.add_argument("--threads", type=pos_int, default=S, help="worker processes (integer)")
    p.add_argument("--plot", type=str, default=S, help="also write an ECDF-vs-limit figure (PNG path)")
    _common(p, tol=True, fmt=("csv",))

    p = sub.add_parser("scaling-test", help="two-sample test of L T_rho against tau_L")
    p.add_argument("--L", type=pos_float, default=S, help="window scale factor L > 1 (dimensionless)")
    p.add_argument("--reps", type=pos_int, default=S, help="replications per side (integer)")
    p.add_argument("--level", type=pos_float, default=S, help="test level (probability)")
    p.add_argument("--unrestricted", action="store_true", default=S, help="whole-space seeds")
    _common(p, fmt=("json",))

    p = sub.add_parser("equivalence-test", help="J-M versus uniform-radius Boolean model coverage at time t")
    p.add_argument("--rho", type=pos_float, default=S, help="seed intensity (per unit area per unit time)")
    p.add_argument("--t", type=pos_float, default=S, help="time (time units; default: median of a pilot run)")
    p.add_argument("--reps", type=pos_int, default=S, help="replications per arm (integer)")
    _common(p, fmt=("json",))

    p = sub.add_parser("chiu-check", help="gap between Chiu's and the Gumbel centring")
    p.add_argument("--L", type=str, default=S, help="comma-separated window scales (dimensionless)")
    p.add_argument("--u", type=str, default=S, help="comma-separated levels (dimensionless)")
    p.add_argument("--d", type=str, default=S, help="comma-separated dimensions (integers)")
    _common(p, window=False, seed=False)

    p = sub.add_parser("tessellate", help="raster cell picture with the last covered point")
    p.add_argument("--mode", choices=("jm", "spbm"), default=S, help="growth seeds or weighted points")
    p.add_argument("--rho", type=pos_float, default=S, help="J-M seed intensity (per unit area per unit time)")
    p.add_argument("--n", type=pos_float, default=S, help="SPBM intensity (per unit area)")
    p.add_argument("--law", type=law_type, default=S, help="SPBM radius law (length units)")
    p.add_argument("--resolution", type=CONVERTERS["resolution"], default=S, help="pixels along the longer side (integer >= 16)")
    p.add_argument("--png", type=str, default=S, help="also write a PNG figure to this path")
    _common(p, fmt=("ppm",))
    return ap


def _resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    given = vars(args).copy()
    cmd = given.pop("command")
    cfg = {}
    if "config" in given:
        path = given.pop("config")
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {path}: {e}")
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    base = {**DEFAULTS["common"], **DEFAULTS.get(cmd, {})}
    unknown = set(cfg) - set(base)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {**base, **cfg}
    # values from defaults/config are strings or plain JSON: validate like flags
    for key, val in list(merged.items()):
        if key in given or val is None:
            continue
        conv = CONVERTERS.get(key)
        if conv is not None and not (key in ("d", "L") and cmd == "chiu-check"):
            try:
                merged[key] = conv(val if isinstance(val, list) else str(val))
            except argparse.ArgumentTypeError as e:
                raise UsageError(f"{key}: {e}")
    merged.update(given)
    merged["command"] = cmd
    return merged


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _summary(msg: str, o: dict):
    print(msg, file=sys.stderr if not o.get("out") else sys.stdout)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    return str(x)


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(o):
    row = limits.constants_table(o["d"], o["k"])
    _emit(_json(row), o["out"])
    _summary(f"constants d={o['d']} k={o['k']}: c_d={row['c_d']:.12g}", o)


def cmd_limit_cdf(o):
    w = o["window"]
    area = o["area"] if o["area"] is not None else (w.area if o["d"] == w.d else None)
    per = o["perimeter"] if o["perimeter"] is not None else (w.perimeter if o["d"] == w.d else None)
    if area is None or per is None:
        raise ValueError("give --area and --perimeter for a dimension other than the window's")
    spec = limits.ModelSpec(o["d"], o["k"], area, per, o["law"])
    law = limits.limit_cdf(o["theorem"], spec)
    betas = np.array([o["beta"]]) if o["beta"] is not None else o["beta_grid"]
    F = law(betas)
    if o["format"] == "json":
        text = _json({"theorem": o["theorem"], "formula": law.description,
                      "beta": betas.tolist(), "F": F.tolist()})
    else:
        buf = io.StringIO()
        buf.write("beta,F\n")
        for b, f in zip(betas, F):
            buf.write(f"{float(b)!r},{float(f)!r}\n")
        text = buf.getvalue()
    _emit(text, o["out"])
    _summary(f"limit-cdf {o['theorem']}: {len(betas)} values in [{F.min():.6g}, {F.max():.6g}]", o)


def _save_points(pts, o, what):
    if o["out"]:
        pts.save(o["out"])
    else:
        buf = io.StringIO()
        cols = ["x", "y", "z"][: pts.points.shape[1]]
        buf.write(",".join(cols + [pts.mark_kind]) + "\n")
        for p, m in zip(pts.points, pts.marks):
            buf.write(",".join(repr(float(v)) for v in p) + f",{float(m)!r}\n")
        sys.stdout.write(buf.getvalue())
    _summary(f"{what}: {len(pts)} points", o)


def cmd_simulate_jm(o):
    w = o["window"]
    t = o["t"] if o["t"] is not None else default_horizon(w, o["rho"])
    rng = RngSpec(o["seed"])
    pts = (sample_halo if o["unrestricted"] else sample_spacetime_poisson)(w, o["rho"], t, rng)
    _save_points(pts, o, f"simulate-jm rho={o['rho']:g} t_max={t:.6g}")


def cmd_simulate_spbm(o):
    w = o["window"]
    rng = RngSpec(o["seed"])
    if o["unrestricted"]:
        r = o["r"] if o["r"] is not None else cov._default_radius(w, o["n"], o["law"], 1)
        pts = sample_spbm_halo(w, o["n"], o["law"], r, rng)
    else:
        pts = sample_marked_poisson(w, o["n"], o["law"], rng)
    _save_points(pts, o, f"simulate-spbm n={o['n']:g} law={o['law']}")


def _need_planar(w):
    if w.d != 2:
        raise GeometryError("exact thresholds and cover times are planar; use a 2D window")


def cmd_threshold(o):
    w = o["window"]
    _need_planar(w)
    R, pts = cov.simulate_spbm_threshold(w, o["n"], o["law"], RngSpec(o["seed"]), o["k"],
                                         not o["unrestricted"], o["tol"])
    res = {"R": R, "points": len(pts), "k": o["k"], "law": str(o["law"]), "n": o["n"], "seed": o["seed"]}
    if math.isfinite(R):
        res["last_covered_point"] = cov.last_covered_point(w, pts, o["k"], o["tol"])
    if o["oracle"]:
        iv = cov.grid_oracle_max(cov.SPBMField(pts, o["k"]), w, o["oracle"])
        tol = o["tol"] or 1e-7 * w.diameter
        res["oracle"] = {"lower": iv.lower, "upper": iv.upper, "consistent": iv.lower - tol <= R <= iv.upper + tol}
    _emit(_json(res), o["out"])
    _summary(f"threshold R={R:.10g} ({len(pts)} points, k={o['k']})", o)


def cmd_cover_time(o):
    w = o["window"]
    _need_planar(w)
    T, seeds = cov.simulate_jm_cover_time(w, o["rho"], RngSpec(o["seed"]), not o["unrestricted"], o["tol"])
    g = cov.GrowthConfiguration(seeds, not o["unrestricted"])
    res = {"T": T, "seeds": len(seeds), "rho": o["rho"], "seed": o["seed"], "t_max": seeds.t_max,
           "last_covered_point": cov.last_covered_point(w, g, 1, o["tol"])}
    if w.d == 2 and o["rho"] > math.e:
        res["standardized"] = limits.standardize(T, o["rho"], "jm-polygon")
    if o["oracle"]:
        iv = cov.grid_oracle_max(cov.JMField(seeds), w, o["oracle"])
        tol = o["tol"] or 1e-7 * w.diameter
        res["oracle"] = {"lower": iv.lower, "upper": iv.upper, "consistent": iv.lower - tol <= T <= iv.upper + tol}
    _emit(_json(res), o["out"])
    _summary(f"cover-time T={T:.10g} ({len(seeds)} seeds)", o)


def cmd_experiment(o):
    from . import montecarlo as mc

    cfg = mc.ExperimentConfig(
        model=o["model"], window=o["window"], scales=tuple(o["scales"]), k=o["k"], law=o["law"],
        replications=o["reps"], master_seed=o["seed"], tol=o["tol"], output=o["out"], threads=o["threads"],
    )
    summaries = mc.run_cover_time_experiment(cfg)
    if o["out"]:
        mc.persist(summaries, cfg, o["out"])
    else:
        buf = io.StringIO()
        buf.write("scale,stream,raw_value,standardized_value\n")
        for s in summaries:
            for st, r, z in zip(s.streams, s.raw, s.standardized):
                buf.write(f"{s.scale!r},{int(st)},{float(r)!r},{float(z)!r}\n")
        sys.stdout.write(buf.getvalue())
    if o["plot"]:
        from .plotting import plot_ecdfs

        plot_ecdfs(summaries, cfg.candidate_laws(), o["plot"], title=f"{cfg.model} on {cfg.window.kind}")
    parts = [f"scale {s.scale:g}: " + " ".join(f"ks[{k}]={v:.4f}" for k, v in s.ks.items()) for s in summaries]
    _summary("experiment " + "; ".join(parts), o)
    n_err = sum(len(s.errors) for s in summaries)
    if n_err:
        print(f"{n_err} replications failed: streams "
              + ", ".join(str(e) for s in summaries for e in s.errors), file=sys.stderr)
        return 1
    return 0


def cmd_scaling_test(o):
    from . import montecarlo as mc

    if o["L"] <= 1:
        raise ValueError("--L must exceed 1")
    r = mc.scaling_lemma_test(o["L"], o["window"], o["reps"], o["seed"], not o["unrestricted"], o["level"], o["tol"])
    res = {"L": r.L, "rho": r.rho, "reps": o["reps"], "ks": r.ks, "pvalue": r.pvalue,
           "critical": r.critical, "reject": r.reject}
    _emit(_json(res), o["out"])
    _summary(f"scaling-test L={r.L:g}: ks={r.ks:.4f} critical={r.critical:.4f} "
             f"{'reject' if r.reject else 'accept'}", o)


def cmd_equivalence_test(o):
    from . import montecarlo as mc

    w = o["window"]
    t = o["t"]
    if t is None:
        pilot = [cov.simulate_jm_cover_time(w, o["rho"], RngSpec(o["seed"], i, (99,)))[0] for i in range(200)]
        t = float(np.median(pilot))
    r = mc.jm_spbm_equivalence_test(o["rho"], t, w, o["reps"], o["seed"])
    res = {"rho": o["rho"], "t": t, "reps": o["reps"], "p_jm": r.p_jm, "p_spbm": r.p_spbm,
           "ci_jm": r.ci_jm, "ci_spbm": r.ci_spbm, "difference": r.difference, "z": r.z,
           "within_3sigma": r.within_3sigma}
    _emit(_json(res), o["out"])
    _summary(f"equivalence-test t={t:.6g}: p_jm={r.p_jm:.4f} p_spbm={r.p_spbm:.4f} z={r.z:.3f}", o)


def cmd_chiu_check(o):
    try:
        Ls = float_list(pos_float)(o["L"])
        us = float_list(real)(o["u"])
        ds = float_list(_num(int, lambda v: v >= 1, "a positive integer"))(o["d"])
    except argparse.ArgumentTypeError as e:
        raise UsageError(str(e))
    rows = [{"d": d, "u": u, "L": L, "gap": limits.chiu_gap(L, u, d), "F": limits.chiu_F(u, d)}
            for d in ds for u in us for L in Ls]
    if o["format"] == "json":
        text = _json(rows)
    else:
        text = "d,u,L,gap,F\n" + "".join(f"{r['d']},{r['u']!r},{r['L']!r},{r['gap']!r},{r['F']!r}\n" for r in rows)
    _emit(text, o["out"])
    worst = max(abs(r["gap"]) for r in rows if r["L"] == max(Ls))
    _summary(f"chiu-check: max |gap| at L={max(Ls):g} is {worst:.3g}", o)


def cmd_tessellate(o):
    from .tessellation import assign_cells, render

    w = o["window"]
    _need_planar(w)
    rng = RngSpec(o["seed"])
    if o["mode"] == "jm":
        T, pts = cov.simulate_jm_cover_time(w, o["rho"], rng, True, o["tol"])
        star = cov.last_covered_point(w, cov.GrowthConfiguration(pts), 1, o["tol"])
        # seeds born after T never appear
        pts = pts.subset(pts.marks <= T)
    else:
        R, pts = cov.simulate_spbm_threshold(w, o["n"], o["law"], rng, 1, True, o["tol"])
        star = cov.last_covered_point(w, pts, 1, o["tol"])
    raster = assign_cells(w, pts, o["mode"], o["resolution"])
    out = o["out"] or "cells.ppm"
    ppm, svg = render(raster, w, pts, out, star)
    if o["png"]:
        from .plotting import plot_cells

        plot_cells(raster, w, pts, o["png"], star)
    print(f"tessellate: {len(pts)} generators, {raster.width}x{raster.height} px, last covered point "
          f"({star[0]:.4f}, {star[1]:.4f}) -> {ppm}, {svg}")


COMMANDS = {
    "constants": cmd_constants, "limit-cdf": cmd_limit_cdf, "simulate-jm": cmd_simulate_jm,
    "simulate-spbm": cmd_simulate_spbm, "threshold": cmd_threshold, "cover-time": cmd_cover_time,
    "experiment": cmd_experiment, "scaling-test": cmd_scaling_test, "equivalence-test": cmd_equivalence_test,
    "chiu-check": cmd_chiu_check, "tessellate": cmd_tessellate,
}


# options whose values may start with "-" (negative levels)
_SIGNED = ("--beta-grid", "--beta", "--u")


def _join_signed(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _SIGNED and i + 1 < len(argv) and argv[i + 1][:1] == "-" and argv[i + 1][1:2].isdigit():
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_signed(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        o = _resolve(args)
    except UsageError as e:
        print(f"jmcover: usage error: {e}", file=sys.stderr)
        return 2
    try:
        code = COMMANDS[o["command"]](o)
    except UsageError as e:
        print(f"jmcover: usage error: {e}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, GeometryError, cov.HorizonError, OSError) as e:
        print(f"jmcover: error: {e}", file=sys.stderr)
        return 1
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
