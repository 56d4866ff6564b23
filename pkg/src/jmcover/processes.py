"""Poisson inputs: radius laws, marked point sets, space-time seeds, halo sampling."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geom import Window

RADIUS = "radius"
BIRTH_TIME = "birth_time"


@dataclass(frozen=True)
class RadiusLaw:
    """Nonnegative radius distribution with closed-form moments.

    kinds: ``constant(c)``, ``uniform(0, b)``, ``exponential(rate)``,
    ``pareto(alpha, xm)`` with density ``alpha xm^alpha / y^(alpha+1)`` on
    ``[xm, inf)``.
    """

    kind: str
    param: float
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "uniform", "exponential", "pareto"):
            raise ValueError(f"unknown radius law {self.kind!r}")
        if not (self.param > 0 and math.isfinite(self.param)):
            raise ValueError("radius law parameter must be positive")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("pareto scale must be positive")

    @classmethod
    def constant(cls, c: float = 1.0):
        return cls("constant", c)

    @classmethod
    def uniform(cls, b: float = 1.0):
        return cls("uniform", b)

    @classmethod
    def exponential(cls, rate: float = 1.0):
        return cls("exponential", rate)

    @classmethod
    def pareto(cls, alpha: float, xm: float = 1.0):
        return cls("pareto", alpha, xm)

    @classmethod
    def parse(cls, text: str) -> "RadiusLaw":
        """Parse ``constant:c``, ``uniform:b``, ``exp:rate`` or ``pareto:alpha[,xm]``."""
        name, _, rest = text.partition(":")
        name = {"exp": "exponential", "const": "constant"}.get(name, name)
        if not rest:
            raise ValueError(f"radius law {text!r} needs a parameter")
        vals = [float(x) for x in rest.split(",")]
        if name == "pareto":
            return cls.pareto(*vals)
        if len(vals) != 1:
            raise ValueError(f"radius law {name} takes one parameter")
        return cls(name, vals[0])

    def __str__(self):
        if self.kind == "pareto":
            return f"pareto:{self.param:g},{self.scale:g}"
        short = {"exponential": "exp"}.get(self.kind, self.kind)
        return f"{short}:{self.param:g}"

    @property
    def upper(self) -> float:
        """Essential supremum of the law (``inf`` when unbounded)."""
        if self.kind == "constant":
            return self.param
        if self.kind == "uniform":
            return self.param
        return math.inf

    def moment(self, m: float) -> float:
        """``E[Y^m]``; ``math.inf`` when the moment diverges."""
        if m < 0:
            raise ValueError("moment order must be nonnegative")
        if m == 0:
            return 1.0
        if self.kind == "constant":
            return self.param**m
        if self.kind == "uniform":
            return self.param**m / (m + 1)
        if self.kind == "exponential":
            return math.gamma(m + 1) / self.param**m
        alpha, xm = self.param, self.scale
        if alpha <= m:
            return math.inf
        return alpha * xm**m / (alpha - m)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.param)
        if self.kind == "uniform":
            return self.param * rng.random(size)
        if self.kind == "exponential":
            return rng.exponential(1.0 / self.param, size)
        # Y = xm * U^(-1/alpha); 1 - random() lies in (0, 1]
        return self.scale * (1.0 - rng.random(size)) ** (-1.0 / self.param)

    def sample_size_biased(self, rng: np.random.Generator, size: int, j: int) -> np.ndarray:
        """Samples from the law tilted by ``y^j`` (needs ``E[Y^j] < inf``)."""
        if j == 0:
            return self.sample(rng, size)
        if self.kind == "constant":
            return np.full(size, self.param)
        if self.kind == "uniform":
            return self.param * rng.beta(j + 1, 1, size)
        if self.kind == "exponential":
            return rng.gamma(j + 1, 1.0 / self.param, size)
        if self.param <= j:
            raise ValueError("size-biased pareto law needs alpha > j")
        return RadiusLaw.pareto(self.param - j, self.scale).sample(rng, size)


@dataclass(frozen=True)
class RngSpec:
    """Reproducible random stream: replication ``stream_index`` of ``master_seed``."""

    master_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *key: int) -> "RngSpec":
        return replace(self, path=self.path + tuple(key))


@dataclass(frozen=True, eq=False)
class MarkedPointSet:
    points: np.ndarray
    marks: np.ndarray
    mark_kind: str
    intensity: float
    window: Window
    rng: RngSpec | None = None
    t_max: float | None = None
    halo: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.window.d)
        marks = np.array(self.marks, dtype=float).reshape(-1)
        if len(pts) != len(marks):
            raise ValueError("points and marks differ in length")
        if np.any(marks < 0):
            raise ValueError("marks must be nonnegative")
        if self.mark_kind not in (RADIUS, BIRTH_TIME):
            raise ValueError(f"unknown mark kind {self.mark_kind!r}")
        pts.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "marks", marks)

    def __len__(self):
        return len(self.marks)

    def subset(self, mask) -> "MarkedPointSet":
        return replace(self, points=self.points[mask], marks=self.marks[mask])

    def with_marks(self, marks) -> "MarkedPointSet":
        return replace(self, marks=np.asarray(marks, dtype=float))

    # serialisation: CSV of coordinates + mark, JSON sidecar for the rest

    def save(self, path) -> None:
        path = Path(path)
        cols = ["x", "y", "z"][: self.window.d] + ["mark"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for p, m in zip(self.points, self.marks):
                w.writerow([repr(float(v)) for v in p] + [repr(float(m))])
        meta = {
            "window": self.window.to_json(),
            "intensity": self.intensity,
            "mark_kind": self.mark_kind,
            "seed": None if self.rng is None else self.rng.master_seed,
            "stream": None if self.rng is None else self.rng.stream_index,
            "path": None if self.rng is None else list(self.rng.path),
            "t_max": self.t_max,
            "halo": self.halo,
            **({"meta": self.meta} if self.meta else {}),
        }
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, path) -> "MarkedPointSet":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".json").read_text())
        window = Window.from_json(meta["window"])
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        data = np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(-1, window.d + 1)
        rng = None
        if meta.get("seed") is not None:
            rng = RngSpec(meta["seed"], meta["stream"], tuple(meta.get("path") or ()))
        return cls(
            data[:, :-1], data[:, -1], meta["mark_kind"], meta["intensity"], window,
            rng=rng, t_max=meta.get("t_max"), halo=meta.get("halo", False), meta=meta.get("meta", {}),
        )


def _rng(rng) -> tuple[np.random.Generator, RngSpec | None]:
    if isinstance(rng, RngSpec):
        return rng.generator(), rng
    if isinstance(rng, np.random.Generator):
        return rng, None
    spec = RngSpec(int(rng))
    return spec.generator(), spec


def sample_marked_poisson(w: Window, n: float, law: RadiusLaw, rng) -> MarkedPointSet:
    """Homogeneous Poisson process of intensity ``n`` in ``w`` with iid radius marks."""
    if n < 0:
        raise ValueError("intensity must be nonnegative")
    gen, spec = _rng(rng)
    count = int(gen.poisson(n * w.area)) if n > 0 else 0
    pts = w.sample_uniform(count, gen)
    marks = law.sample(gen, count)
    return MarkedPointSet(pts, marks, RADIUS, n, w, rng=spec, meta={"law": str(law)})


def sample_spacetime_poisson(w: Window, rho: float, t_max: float, rng) -> MarkedPointSet:
    """Seeds of intensity ``rho`` in ``w x [0, t_max]``, marked by birth time."""
    if rho < 0 or t_max < 0:
        raise ValueError("rho and t_max must be nonnegative")
    gen, spec = _rng(rng)
    count = int(gen.poisson(rho * w.area * t_max)) if rho > 0 and t_max > 0 else 0
    pts = w.sample_uniform(count, gen)
    births = t_max * gen.random(count)
    return MarkedPointSet(pts, births, BIRTH_TIME, rho, w, rng=spec, t_max=t_max)


def sample_halo(w: Window, rho: float, t_max: float, rng) -> MarkedPointSet:
    """Seeds of the whole-space process that can reach ``w`` by time ``t_max``.

    Samples a space-time Poisson process on ``bbox(w) + [-t_max, t_max]^d``
    times ``[0, t_max]`` and keeps ``(x, s)`` with ``dist(x, w) <= t_max - s``.
    The result is the full-space process restricted to that event set, so a
    cover time ``T <= t_max`` computed from it is exact.
    """
    if rho < 0 or t_max < 0:
        raise ValueError("rho and t_max must be nonnegative")
    gen, spec = _rng(rng)
    lo, hi = w.bbox
    lo, hi = lo - t_max, hi + t_max
    vol = float(np.prod(hi - lo))
    count = int(gen.poisson(rho * vol * t_max)) if rho > 0 and t_max > 0 else 0
    pts = lo + (hi - lo) * gen.random((count, len(lo)))
    births = t_max * gen.random(count)
    keep = w.distance(pts) <= t_max - births if count else np.zeros(0, dtype=bool)
    return MarkedPointSet(pts[keep], births[keep], BIRTH_TIME, rho, w, rng=spec, t_max=t_max, halo=True)


def sample_spbm_halo(w: Window, n: float, law: RadiusLaw, r_max: float, rng) -> MarkedPointSet:
    """Whole-plane SPBM points whose ball at scale ``r_max`` can reach ``w``.

    Keeps the marked points ``(x, Y)`` of an intensity-``n`` process on the
    plane with ``dist(x, w) <= r_max * Y``. For convex ``w`` the mean count is
    ``n E|w + B(0, r_max Y)|`` (Steiner formula), so marks are drawn from the
    mixture of the law tilted by ``1, y, y^2`` and positions uniformly in the
    dilated window. Needs ``E[Y^2] < inf``.
    """
    if w.d != 2 or not w.is_convex:
        raise ValueError("SPBM halo sampling needs a convex planar window")
    m1, m2 = law.moment(1), law.moment(2)
    if not math.isfinite(m2):
        raise ValueError("SPBM halo sampling needs a finite second moment")
    gen, spec = _rng(rng)
    weights = np.array([w.area, w.perimeter * r_max * m1, math.pi * r_max**2 * m2])
    total = n * float(weights.sum())
    count = int(gen.poisson(total)) if total > 0 else 0
    comp = gen.choice(3, size=count, p=weights / weights.sum()) if count else np.zeros(0, int)
    marks = np.empty(count)
    for j in range(3):
        sel = comp == j
        marks[sel] = law.sample_size_biased(gen, int(sel.sum()), j)
    pts = np.empty((count, 2))
    lo, hi = w.bbox
    for i in range(count):
        reach = r_max * marks[i]
        while True:
            x = lo - reach + (hi - lo + 2 * reach) * gen.random(2)
            if w.distance(x)[0] <= reach:
                pts[i] = x
                break
    return MarkedPointSet(pts, marks, RADIUS, n, w, rng=spec, t_max=r_max, halo=True, meta={"law": str(law)})


def truncate_marks(s: MarkedPointSet, cutoff: float) -> tuple[MarkedPointSet, MarkedPointSet]:
    """Split into marks ``<= cutoff`` and ``> cutoff``."""
    if s.mark_kind != RADIUS:
        raise ValueError("truncate_marks needs radius marks")
    below = s.marks <= cutoff
    return s.subset(below), s.subset(~below)


def default_horizon(w: Window, rho: float, margin: float = 40.0) -> float:
    """Generous initial time horizon for sampling J-M seeds in ``w``.

    Solves ``omega_d rho t^(d+1) = d log rho + d^2 loglog rho + margin`` for the
    area-normalised intensity; a cover time beyond it is rare and triggers a
    re-sample with a doubled horizon.
    """
    d = w.d
    r = rho * max(w.area, 1e-300) ** ((d + 1) / d)
    omega = math.pi ** (d / 2) / math.gamma(1 + d / 2)
    lg = math.log(r) if r > 1 else 0.0
    llg = math.log(lg) if lg > 1 else 0.0
    t = ((d * lg + d * d * llg + margin) / (omega * r)) ** (1 / (d + 1))
    return t * max(w.area, 1e-300) ** (1 / d)
