"""Replicated cover-time experiments, two-sample tests and result persistence."""

from __future__ import annotations

import csv
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import coverage as cov
from . import limits
from .geom import Window
from .processes import RadiusLaw, RngSpec, default_horizon, sample_spacetime_poisson
from .stats import ks_critical, ks_distance, ks_two_sample, two_proportion_z, wilson_interval

SCHEMA_VERSION = 1
MODELS = ("jm_restricted", "jm_unrestricted", "spbm_restricted", "spbm_unrestricted")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "jm_restricted"
    window: Window = field(default_factory=Window.unit_square)
    scales: tuple[float, ...] = (1e2, 1e3, 1e4)
    k: int = 1
    law: RadiusLaw | None = None
    replications: int = 1000
    master_seed: int = 0
    tol: float | None = None
    output: str | None = None
    threads: int = 1
    grid_h: float = 0.02  # grid spacing for the d=3 oracle path

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        sc = list(self.scales)
        if not sc or any(s <= 0 for s in sc) or any(b <= a for a, b in zip(sc, sc[1:])):
            raise ValueError("scales must be positive and increasing")
        if self.model.startswith("spbm") and self.law is None:
            raise ValueError("SPBM experiments need a radius law")
        if self.window.d == 3 and self.model != "jm_restricted":
            raise ValueError("d=3 experiments support the restricted J-M model only")

    @property
    def theorem(self) -> str:
        """Theorem id whose centring standardizes this experiment."""
        if self.model.startswith("jm"):
            return "jm-polygon" if self.window.d == 2 else "jm-smooth"
        return "spbm-polygon" if self.model == "spbm_restricted" else "spbm-unrestricted"

    def model_spec(self) -> limits.ModelSpec:
        w = self.window
        return limits.ModelSpec(w.d, self.k, w.area, w.perimeter, self.law)

    def candidate_laws(self) -> dict[str, limits.LimitLaw]:
        """Limit laws to compare the empirical distribution against."""
        spec = self.model_spec()
        if self.model.startswith("jm"):
            ids = ["jm-polygon", "jm-unrestricted"] if self.window.d == 2 else ["jm-smooth", "jm-unrestricted"]
        else:
            ids = ["spbm-polygon", "spbm-unrestricted"]
        out = {}
        for i in ids:
            try:
                out[i] = limits.limit_cdf(i, spec)
            except ValueError:
                pass
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d["window"] = self.window.to_json()
        d["law"] = str(self.law) if self.law is not None else None
        d["scales"] = list(self.scales)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["window"] = Window.from_json(d["window"])
        d["law"] = RadiusLaw.parse(d["law"]) if d.get("law") else None
        d["scales"] = tuple(d["scales"])
        return cls(**d)


@dataclass
class EcdfSummary:
    scale: float
    streams: np.ndarray  # stream index per replication
    raw: np.ndarray  # raw cover times / thresholds, in stream order
    standardized: np.ndarray
    ks: dict[str, float]
    runtime: dict[str, float]
    errors: list[int] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        """Sorted standardized values."""
        return np.sort(self.standardized)

    def shifted(self, delta: float) -> "EcdfSummary":
        return replace(self, standardized=self.standardized + delta)

    def ecdf(self, x):
        v = self.values
        return np.searchsorted(v, np.asarray(x, float), side="right") / len(v)

    def __eq__(self, other):
        if not isinstance(other, EcdfSummary):
            return NotImplemented
        return (
            self.scale == other.scale
            and np.array_equal(self.streams, other.streams)
            and np.array_equal(self.raw, other.raw)
            and np.array_equal(self.standardized, other.standardized)
            and self.errors == other.errors
        )


def _replicate(cfg: ExperimentConfig, scale_index: int, stream: int) -> float:
    """One cover time (or threshold) for stream ``stream`` at ``cfg.scales[scale_index]``."""
    scale = cfg.scales[scale_index]
    rng = RngSpec(cfg.master_seed, stream, (scale_index,))
    w = cfg.window
    if w.d == 3:
        return _grid_cover_time_3d(w, scale, rng, cfg.grid_h)
    if cfg.model == "jm_restricted":
        return cov.simulate_jm_cover_time(w, scale, rng, True, cfg.tol)[0]
    if cfg.model == "jm_unrestricted":
        return cov.simulate_jm_cover_time(w, scale, rng, False, cfg.tol)[0]
    restricted = cfg.model == "spbm_restricted"
    return cov.simulate_spbm_threshold(w, scale, cfg.law, rng, cfg.k, restricted, cfg.tol)[0]


def _grid_cover_time_3d(w: Window, rho: float, rng: RngSpec, h: float) -> float:
    """Cover time in a 3D box from the certified grid oracle (midpoint of the bracket)."""
    t = default_horizon(w, rho)
    for attempt in range(8):
        seeds = sample_spacetime_poisson(w, rho, t, rng.child(attempt))
        if len(seeds):
            iv = cov.grid_oracle_max(cov.JMField(seeds), w, h)
            if iv.upper <= t:
                return 0.5 * (iv.lower + iv.upper)
        t *= 2
    raise cov.HorizonError(math.inf, t, rng)


def _run_chunk(args):
    cfg_json, scale_index, streams = args
    cfg = ExperimentConfig.from_json(cfg_json)
    out = []
    for s in streams:
        t0 = time.perf_counter()
        try:
            v = _replicate(cfg, scale_index, s)
        except cov.HorizonError:
            v = math.nan
        out.append((s, v, time.perf_counter() - t0))
    return out


def run_cover_time_experiment(cfg: ExperimentConfig, streams=None) -> list[EcdfSummary]:
    """Replicate, standardize and compare to the limit laws; one summary per scale.

    ``streams`` restricts the run to a subset of stream indices (for splitting
    work); merging partial runs with :func:`merge` gives the full run.
    """
    streams = list(range(cfg.replications)) if streams is None else list(streams)
    spec = cfg.model_spec()
    laws = cfg.candidate_laws()
    summaries = []
    for si, scale in enumerate(cfg.scales):
        t0 = time.perf_counter()
        results = _map_streams(cfg, si, streams)
        results.sort()
        st = np.array([r[0] for r in results], dtype=int)
        raw = np.array([r[1] for r in results], dtype=float)
        errors = st[np.isnan(raw)].tolist()
        ok = ~np.isnan(raw)
        std = np.full_like(raw, np.nan)
        if ok.any():
            std[ok] = limits.standardize(raw[ok], scale, cfg.theorem, cfg.window.d, spec)
        good = std[ok]
        ks = {name: ks_distance(good, law) for name, law in laws.items()} if len(good) else {}
        per = np.array([r[2] for r in results])
        runtime = {"wall": time.perf_counter() - t0, "mean_rep": float(per.mean()), "max_rep": float(per.max())}
        summaries.append(EcdfSummary(float(scale), st, raw, std, ks, runtime, errors))
    return summaries


def _map_streams(cfg, si, streams):
    if cfg.threads <= 1 or len(streams) < 2:
        return _run_chunk((cfg.to_json(), si, streams))
    n = cfg.threads
    chunks = [streams[i::n] for i in range(n)]
    with ProcessPoolExecutor(max_workers=n) as pool:
        parts = pool.map(_run_chunk, [(cfg.to_json(), si, c) for c in chunks if c])
    return [r for p in parts for r in p]


def merge(parts: list[list[EcdfSummary]], cfg: ExperimentConfig) -> list[EcdfSummary]:
    """Combine partial runs over disjoint streams into full per-scale summaries."""
    laws = cfg.candidate_laws()
    out = []
    for si in range(len(cfg.scales)):
        pieces = [p[si] for p in parts]
        st = np.concatenate([p.streams for p in pieces])
        order = np.argsort(st, kind="stable")
        raw = np.concatenate([p.raw for p in pieces])[order]
        std = np.concatenate([p.standardized for p in pieces])[order]
        good = std[~np.isnan(std)]
        ks = {name: ks_distance(good, law) for name, law in laws.items()} if len(good) else {}
        runtime = {"wall": sum(p.runtime["wall"] for p in pieces),
                   "mean_rep": float(np.mean([p.runtime["mean_rep"] for p in pieces])),
                   "max_rep": max(p.runtime["max_rep"] for p in pieces)}
        errors = sorted(e for p in pieces for e in p.errors)
        out.append(EcdfSummary(pieces[0].scale, st[order], raw, std, ks, runtime, errors))
    return out


# ---------------------------------------------------------------------------
# persistence


def _git_describe() -> str | None:
    try:
        r = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True, timeout=5,
                           cwd=Path(__file__).parent)
        return r.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def persist(summaries: list[EcdfSummary], cfg: ExperimentConfig, path) -> tuple[Path, Path]:
    """Write ``path`` (CSV) and ``path.json`` (metadata)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["scale", "stream", "raw_value", "standardized_value"])
        for s in summaries:
            for st, r, z in zip(s.streams, s.raw, s.standardized):
                wr.writerow([repr(s.scale), int(st), repr(float(r)), repr(float(z))])
    meta = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_json(),
        "master_seed": cfg.master_seed,
        "git_describe": _git_describe(),
        "wall_time": sum(s.runtime["wall"] for s in summaries),
        "scales": [
            {"scale": s.scale, "ks": s.ks, "runtime": s.runtime, "errors": s.errors} for s in summaries
        ],
    }
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(meta, indent=1))
    return path, side


def load(path) -> tuple[list[EcdfSummary], ExperimentConfig]:
    path = Path(path)
    side = path.with_name(path.name + ".json")
    if not path.exists() or not side.exists():
        raise FileNotFoundError(f"missing experiment output {path} or its metadata")
    meta = json.loads(side.read_text())
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"schema version {meta.get('schema_version')} != {SCHEMA_VERSION}")
    cfg = ExperimentConfig.from_json(meta["config"])
    rows: dict[float, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(float(row["scale"]), []).append(
                (int(row["stream"]), float(row["raw_value"]), float(row["standardized_value"]))
            )
    out = []
    for info in meta["scales"]:
        r = rows.get(info["scale"], [])
        out.append(EcdfSummary(
            info["scale"],
            np.array([x[0] for x in r], dtype=int),
            np.array([x[1] for x in r]),
            np.array([x[2] for x in r]),
            info["ks"], info["runtime"], info["errors"],
        ))
    return out, cfg


# ---------------------------------------------------------------------------
# distribution checks


@dataclass(frozen=True)
class TwoSampleReport:
    ks: float
    pvalue: float
    critical: float
    reject: bool
    n_a: int
    n_b: int


@dataclass(frozen=True)
class ScalingReport(TwoSampleReport):
    L: float = 0.0
    rho: float = 0.0
    a: np.ndarray = field(default=None, repr=False, compare=False)
    b: np.ndarray = field(default=None, repr=False, compare=False)


def scaling_lemma_test(L: float, window: Window, reps: int, rng, restricted: bool = True,
                       level: float = 0.01, tol: float | None = None) -> ScalingReport:
    """Compare ``L T_rho`` (``rho = L^(d+1)`` on ``window``) with ``tau_L`` (unit intensity on ``L window``)."""
    if L <= 1:
        raise ValueError("L must exceed 1")
    base = rng if isinstance(rng, RngSpec) else RngSpec(int(rng))
    d = window.d
    rho = L ** (d + 1)
    big = window.scaled(L)
    a = np.empty(reps)
    b = np.empty(reps)
    for i in range(reps):
        ra = RngSpec(base.master_seed, i, base.path + (0,))
        rb = RngSpec(base.master_seed, i, base.path + (1,))
        a[i] = L * cov.simulate_jm_cover_time(window, rho, ra, restricted, tol)[0]
        b[i] = cov.simulate_jm_cover_time(big, 1.0, rb, restricted, None if tol is None else tol * L)[0]
    ks, p = ks_two_sample(a, b)
    crit = ks_critical(reps, reps, level)
    return ScalingReport(ks, p, crit, ks > crit, reps, reps, L, rho, a, b)


@dataclass(frozen=True)
class EquivalenceReport:
    p_jm: float
    p_spbm: float
    ci_jm: tuple[float, float]
    ci_spbm: tuple[float, float]
    difference: float
    z: float
    within_3sigma: bool
    reps: int


def jm_spbm_equivalence_test(rho: float, t: float, window: Window, reps: int, rng) -> EquivalenceReport:
    """Coverage at time ``t`` for restricted J-M versus SPBM with ``n = rho t``, radii uniform on ``(0, t)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    base = rng if isinstance(rng, RngSpec) else RngSpec(int(rng))
    jm = cov.JMModel(rho, t)
    sp = cov.SPBMModel(rho * t, RadiusLaw.uniform(t), 1.0, 1)
    ha = sum(cov.coverage_event(window, jm, True, RngSpec(base.master_seed, i, base.path + (0,))) for i in range(reps))
    hb = sum(cov.coverage_event(window, sp, True, RngSpec(base.master_seed, i, base.path + (1,))) for i in range(reps))
    z = two_proportion_z(ha, reps, hb, reps)
    return EquivalenceReport(ha / reps, hb / reps, wilson_interval(ha, reps), wilson_interval(hb, reps),
                             ha / reps - hb / reps, z, abs(z) < 3, reps)


__all__ = [
    "ExperimentConfig", "EcdfSummary", "run_cover_time_experiment", "merge", "persist", "load",
    "ks_distance", "ks_two_sample", "scaling_lemma_test", "jm_spbm_equivalence_test",
    "TwoSampleReport", "ScalingReport", "EquivalenceReport",
]
