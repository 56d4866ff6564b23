"""Coverage fields, exact planar k-coverage verification, cover times and thresholds.

Both models are handled as a monotone family of disks indexed by a level
``t``: disk ``i`` has radius ``a_i t + b_i`` and is active when that is
positive. For Johnson-Mehl seeds ``(x_i, s_i)`` this is ``a=1, b=-s``
(radius ``t - s_i``); for the SPBM with marks ``Y_i`` it is ``a=Y, b=0``
(radius ``r Y_i``). The coverage field is then
``Xi(x) = k-th smallest of (|x - c_i| - b_i) / a_i`` and the cover time or
threshold is ``max_{x in A} Xi(x)``.

The exact predicate checks every point where the boundary of the k-deficit
region can have a corner: window corners, circle/boundary crossings and
circle/circle crossings, plus points on every circle (k >= 2) and on a disc
window's boundary for corner-free components. A grid of cells with certified
upper bounds on ``Xi`` restricts the check to the few cells that could still
be uncovered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geom import TOL, Disk, GeometryError, Window
from .processes import BIRTH_TIME, RADIUS, MarkedPointSet, RadiusLaw, RngSpec


class HorizonError(RuntimeError):
    """The sampled time/radius horizon is below the computed cover time."""

    def __init__(self, value: float, horizon: float, rng: RngSpec | None = None):
        self.value, self.horizon, self.rng = value, horizon, rng
        super().__init__(
            f"computed value {value:.6g} exceeds the sampled horizon {horizon:.6g}; "
            "re-sample with a larger t_max"
        )


@dataclass(frozen=True)
class CoverageVerdict:
    covered: bool
    witness: tuple[float, float] | None = None
    deficit: int | None = None
    ambiguous: bool = False


@dataclass(frozen=True)
class CertifiedInterval:
    lower: float
    upper: float
    lipschitz_used: float
    grid_spacing: float
    argmax: tuple[float, ...] | None = None

    def __contains__(self, x: float) -> bool:
        return self.lower <= x <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class GrowthConfiguration:
    seeds: MarkedPointSet
    restricted: bool = True

    def __post_init__(self):
        if self.seeds.mark_kind != BIRTH_TIME:
            raise ValueError("growth configuration needs birth-time marks")


def _default_tol(w: Window, scale: float = 1e-7) -> float:
    return scale * w.diameter


# ---------------------------------------------------------------------------
# pointwise fields


def xi_jm(x, g: GrowthConfiguration | MarkedPointSet) -> float | np.ndarray:
    """Time at which ``x`` is first covered: ``min_i (s_i + |x - x_i|)``."""
    seeds = g.seeds if isinstance(g, GrowthConfiguration) else g
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if len(seeds) == 0:
        out = np.full(len(pts), math.inf)
    else:
        out = _kth_brute(pts, seeds.points, np.ones(len(seeds)), -seeds.marks, 1)
    return float(out[0]) if single else out


def xi_spbm(x, pts: MarkedPointSet, k: int = 1) -> float | np.ndarray:
    """k-th smallest ``|x - p_i| / Y_i``; points with ``Y_i = 0`` never cover."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    q = np.atleast_2d(x)
    use = pts.marks > 0
    if use.sum() < k:
        out = np.full(len(q), math.inf)
    else:
        out = _kth_brute(q, pts.points[use], pts.marks[use], np.zeros(int(use.sum())), k)
    return float(out[0]) if single else out


def _kth_brute(q, centers, a, b, k, chunk=2_000_000):
    out = np.empty(len(q))
    step = max(1, chunk // max(len(centers), 1))
    for s in range(0, len(q), step):
        qq = q[s : s + step]
        d = np.sqrt(((qq[:, None, :] - centers[None, :, :]) ** 2).sum(-1))
        v = (d - b[None, :]) / a[None, :]
        if k == 1:
            out[s : s + step] = v.min(axis=1)
        else:
            out[s : s + step] = np.partition(v, k - 1, axis=1)[:, k - 1]
    return out


def cover_count(p, disks: list[Disk], tol: float = TOL) -> tuple[int, int]:
    """``(closed, open)``: disks with ``|p-c| <= r + tol`` and ``|p-c| <= r - tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if not disks:
        return 0, 0
    p = np.asarray(p, dtype=float)
    c = np.array([dk.center for dk in disks], dtype=float)
    r = np.array([dk.radius for dk in disks], dtype=float)
    dist = np.sqrt(((c - p) ** 2).sum(-1))
    return int(np.sum(dist <= r + tol)), int(np.sum(dist <= r - tol))


# ---------------------------------------------------------------------------
# spatial helpers


def _split_big(radii):
    """Radius cut separating the few large disks from the bulk."""
    if len(radii) == 0:
        return 0.0
    med = float(np.median(radii))
    rmax = float(radii.max())
    return rmax if rmax <= 4 * med else 4 * med


def _intersecting_pairs(centers, radii):
    """Index pairs ``i < j`` whose closed disks overlap."""
    n = len(radii)
    if n < 2:
        return np.zeros((0, 2), dtype=int)
    if n <= 600:
        i, j = np.triu_indices(n, 1)
    else:
        cut = _split_big(radii)
        small = np.flatnonzero(radii <= cut)
        big = np.flatnonzero(radii > cut)
        tree = cKDTree(centers[small])
        pr = tree.query_pairs(2 * cut, output_type="ndarray")
        i, j = small[pr[:, 0]], small[pr[:, 1]]
        if len(big):
            bi = np.repeat(big, n)
            bj = np.tile(np.arange(n), len(big))
            keep = ~np.isin(bj, big) | (bj > bi)
            keep &= bi != bj
            i = np.concatenate([i, bi[keep]])
            j = np.concatenate([j, bj[keep]])
    d2 = ((centers[i] - centers[j]) ** 2).sum(-1)
    ok = d2 <= (radii[i] + radii[j]) ** 2
    return np.stack([i[ok], j[ok]], axis=1)


def _point_disk_dists(P, centers, radii):
    """Sparse (point, disk, distance) triples with distance <= radius (+slack)."""
    m, n = len(P), len(radii)
    if m == 0 or n == 0:
        e = np.zeros(0, dtype=int)
        return e, e, np.zeros(0)
    if m * n <= 4_000_000:
        d = np.sqrt(((P[:, None, :] - centers[None, :, :]) ** 2).sum(-1))
        pi, di = np.nonzero(d <= radii[None, :] * (1 + 1e-9) + 1e-12)
        return pi, di, d[pi, di]
    cut = _split_big(radii)
    small = np.flatnonzero(radii <= cut)
    big = np.flatnonzero(radii > cut)
    tp = cKDTree(P)
    ts = cKDTree(centers[small])
    sdm = tp.sparse_distance_matrix(ts, cut * (1 + 1e-9) + 1e-12, output_type="ndarray")
    pi, di, dd = sdm["i"].astype(int), small[sdm["j"]], sdm["v"]
    if len(big):
        d = np.sqrt(((P[:, None, :] - centers[big][None, :, :]) ** 2).sum(-1))
        bp, bd = np.nonzero(d <= radii[big][None, :] * (1 + 1e-9) + 1e-12)
        pi = np.concatenate([pi, bp])
        di = np.concatenate([di, big[bd]])
        dd = np.concatenate([dd, d[bp, bd]])
    return pi, di, dd


def _counts(P, centers, radii, tol):
    """Closed and open cover counts at each point of ``P``."""
    pi, di, dd = _point_disk_dists(P, centers, radii + tol)
    r = radii[di]
    closed = np.bincount(pi[dd <= r + tol], minlength=len(P))
    opened = np.bincount(pi[dd <= r - tol], minlength=len(P))
    return closed, opened


# ---------------------------------------------------------------------------
# candidate generation


def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, v / n, 0.0)


def _wedge_dirs(n1, n2):
    """Bisector directions of the four wedges cut by two curves with normals n1, n2."""
    s, d = _unit(n1 + n2), _unit(n1 - n2)
    return np.stack([s, -s, d, -d], axis=1)


def _circle_circle_points(centers, radii, pairs):
    i, j = pairs[:, 0], pairs[:, 1]
    c1, c2, r1, r2 = centers[i], centers[j], radii[i], radii[j]
    delta = c2 - c1
    dist = np.hypot(delta[:, 0], delta[:, 1])
    ok = (dist > 0) & (dist >= np.abs(r1 - r2))
    c1, c2, r1, r2, delta, dist = c1[ok], c2[ok], r1[ok], r2[ok], delta[ok], dist[ok]
    along = (dist**2 + r1**2 - r2**2) / (2 * dist)
    h = np.sqrt(np.maximum(r1**2 - along**2, 0.0))
    u = delta / dist[:, None]
    perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
    mid = c1 + along[:, None] * u
    P = np.concatenate([mid + h[:, None] * perp, mid - h[:, None] * perp])
    C1 = np.concatenate([c1, c1])
    C2 = np.concatenate([c2, c2])
    R1 = np.concatenate([r1, r1])
    R2 = np.concatenate([r2, r2])
    n1 = (P - C1) / R1[:, None]
    n2 = (P - C2) / R2[:, None]
    return P, _wedge_dirs(n1, n2)


def _circle_edge_points(w: Window, centers, radii):
    if w.kind == "disc":
        wc = np.array(w.center)
        allc = np.vstack([centers, wc])
        allr = np.concatenate([radii, [w.radius]])
        m = len(radii)
        pairs = np.stack([np.arange(m), np.full(m, m)], axis=1)
        d = np.hypot(*(centers - wc).T)
        pairs = pairs[(d <= radii + w.radius) & (d >= np.abs(radii - w.radius))]
        return _circle_circle_points(allc, allr, pairs)
    a, b = w.edges()
    e = b - a
    L = np.hypot(e[:, 0], e[:, 1])
    outward = np.stack([e[:, 1], -e[:, 0]], axis=1) / L[:, None]
    f = a[None, :, :] - centers[:, None, :]
    A = (e * e).sum(-1)[None, :]
    B = 2 * (f * e[None]).sum(-1)
    C = (f * f).sum(-1) - radii[:, None] ** 2
    disc = B * B - 4 * A * C
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    pts, dirs = [], []
    for sign in (-1.0, 1.0):
        u = (-B + sign * sq) / (2 * A)
        sel = ok & (u >= 0) & (u <= 1)
        di, ei = np.nonzero(sel)
        p = a[ei] + u[di, ei][:, None] * e[ei]
        n1 = (p - centers[di]) / radii[di][:, None]
        pts.append(p)
        dirs.append(_wedge_dirs(n1, outward[ei]))
    return np.concatenate(pts), np.concatenate(dirs)


def _corner_points(w: Window):
    v = w.vertices
    prev = np.roll(v, 1, axis=0)
    nxt = np.roll(v, -1, axis=0)
    bis = _unit(_unit(prev - v) + _unit(nxt - v))
    # reflex corners: the sum of edge directions points outward
    e1, e2 = v - prev, nxt - v
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    bis = np.where((cross < 0)[:, None], -bis, bis)
    dirs = np.zeros((len(v), 4, 2))
    dirs[:, 0] = bis
    dirs[:, 1:] = np.nan
    return v.copy(), dirs


def _axis_points(centers, radii):
    axes = np.array([[1.0, 0], [0, 1.0], [-1.0, 0], [0, -1.0]])
    P = (centers[:, None, :] + radii[:, None, None] * axes[None]).reshape(-1, 2)
    n1 = np.tile(axes, (len(radii), 1))
    dirs = np.full((len(P), 4, 2), np.nan)
    dirs[:, 0], dirs[:, 1] = n1, -n1
    return P, dirs


def _disc_boundary_points(w: Window, cells=None):
    axes = np.array([[1.0, 0], [0, 1.0], [-1.0, 0], [0, -1.0]])
    P = np.array(w.center) + w.radius * axes
    dirs = np.full((4, 4, 2), np.nan)
    dirs[:, 0] = -axes
    return P, dirs


def _point_probe(P):
    dirs = np.full((len(P), 4, 2), np.nan)
    dirs[:, 0] = 0.0
    return np.asarray(P, dtype=float).reshape(-1, 2), dirs


@dataclass
class _Cells:
    centers: np.ndarray  # (C, 2) square centres
    half: float  # half side length
    reps: np.ndarray  # (C, 2) representative points in the window
    radius: np.ndarray  # (C,) bound on distance from rep to any point of cell & window

    def subset(self, mask):
        return _Cells(self.centers[mask], self.half, self.reps[mask], self.radius[mask])


def _in_cells(P, cells: _Cells, margin):
    if len(P) == 0 or len(cells.centers) == 0:
        return np.zeros(len(P), dtype=bool)
    lim = cells.half + margin
    if len(cells.centers) <= 16 or len(P) * len(cells.centers) <= 100_000:
        d = np.abs(P[:, None, :] - cells.centers[None, :, :]).max(-1)
        return (d <= lim).any(axis=1)
    tree = cKDTree(cells.centers)
    dist, _ = tree.query(P, 1, p=np.inf, distance_upper_bound=lim * (1 + 1e-12))
    return np.isfinite(dist)


def _disks_touching_cells(centers, radii, cells: _Cells):
    if len(cells.centers) == 0:
        return np.zeros(len(radii), dtype=bool)
    out = np.zeros(len(radii), dtype=bool)
    step = max(1, 2_000_000 // len(cells.centers))
    for s in range(0, len(radii), step):
        c = centers[s : s + step]
        gap = np.maximum(np.abs(c[:, None, :] - cells.centers[None, :, :]) - cells.half, 0.0)
        out[s : s + step] = ((gap**2).sum(-1) <= radii[s : s + step, None] ** 2).any(axis=1)
    return out


# ---------------------------------------------------------------------------
# exact verifier


@dataclass
class _Check:
    covered: bool
    witnesses: np.ndarray  # failing probe points
    deficits: np.ndarray
    ambiguous: bool
    candidates: np.ndarray  # failing candidate points (before probing)


def _verify(w: Window, centers, radii, k: int, tol: float, cells: _Cells | None = None) -> _Check:
    """Exact k-coverage of ``w`` (or of ``w`` intersected with ``cells``) by closed disks."""
    act = radii > 0
    centers, radii = centers[act], radii[act]
    if cells is not None:
        if len(cells.centers) == 0:
            e = np.zeros((0, 2))
            return _Check(True, e, np.zeros(0, int), False, e)
        rel = _disks_touching_cells(centers, radii, cells)
        centers, radii = centers[rel], radii[rel]

    groups = []
    if w.is_polygonal:
        groups.append(_corner_points(w))
    else:
        groups.append(_disc_boundary_points(w))
    if len(radii):
        groups.append(_circle_edge_points(w, centers, radii))
        pairs = _intersecting_pairs(centers, radii)
        if len(pairs):
            groups.append(_circle_circle_points(centers, radii, pairs))
        if k >= 2:
            groups.append(_axis_points(centers, radii))
    if cells is None:
        lo, hi = w.bbox
        probe = w.project((lo + hi) / 2)
        groups.append(_point_probe(probe))
    else:
        groups.append(_point_probe(cells.reps))
    P = np.concatenate([g[0] for g in groups])
    D = np.concatenate([g[1] for g in groups])

    keep = w.contains(P) | (w.boundary_distance(P) <= 10 * tol)
    if cells is not None:
        keep &= _in_cells(P, cells, 10 * tol)
    P, D = P[keep], D[keep]
    if len(P) == 0:
        e = np.zeros((0, 2))
        return _Check(True, e, np.zeros(0, int), False, e)

    _, opened = _counts(P, centers, radii, tol)
    bad = opened < k
    if not bad.any():
        e = np.zeros((0, 2))
        return _Check(True, e, np.zeros(0, int), False, e)

    delta = 10 * tol
    Pb, Db = P[bad], D[bad]
    Q = (Pb[:, None, :] + delta * Db).reshape(-1, 2)
    owner = np.repeat(np.arange(len(Pb)), Db.shape[1])
    valid = ~np.isnan(Q).any(axis=1)
    Q, owner = Q[valid], owner[valid]
    inside = w.contains(Q)
    Q, owner = Q[inside], owner[inside]
    closed, _ = _counts(Q, centers, radii, tol)
    fail = closed < k
    wit = Q[fail]
    deficits = k - closed[fail]
    resolved = np.zeros(len(Pb), dtype=bool)
    resolved[owner[fail]] = True
    ambiguous = False
    pending = np.flatnonzero(~resolved)
    if len(pending):
        # local refinement at spacing delta/10 around undecided candidates
        g = np.linspace(-delta, delta, 21)
        gx, gy = np.meshgrid(g, g)
        offs = np.stack([gx.ravel(), gy.ravel()], axis=1)
        extra_w, extra_d = [], []
        for idx in pending:
            R = Pb[idx] + offs
            R = R[w.contains(R)]
            c, _ = _counts(R, centers, radii, 0.0)
            f = c < k
            if f.any():
                extra_w.append(R[f][:1])
                extra_d.append(k - c[f][:1])
            else:
                ambiguous = True
        if extra_w:
            wit = np.concatenate([wit] + extra_w)
            deficits = np.concatenate([deficits] + extra_d)
    return _Check(len(wit) == 0, wit, deficits.astype(int), ambiguous, Pb)


def is_k_covered(w: Window, disks: list[Disk], k: int = 1, tol: float = TOL, localize: bool = True) -> CoverageVerdict:
    """Decide whether every point of ``w`` lies in at least ``k`` closed disks."""
    if w.d != 2:
        raise GeometryError("exact coverage verification is implemented for d=2 only")
    if k < 1:
        raise ValueError("k must be >= 1")
    centers = np.array([dk.center[:2] for dk in disks], dtype=float).reshape(-1, 2)
    radii = np.array([dk.radius for dk in disks], dtype=float)
    return _verdict(_check_disks(w, centers, radii, k, tol, localize))


def _verdict(chk: _Check) -> CoverageVerdict:
    if chk.covered:
        return CoverageVerdict(True, ambiguous=chk.ambiguous)
    i = int(np.argmax(chk.deficits))
    return CoverageVerdict(False, tuple(float(v) for v in chk.witnesses[i]), int(chk.deficits[i]), chk.ambiguous)


def _check_disks(w, centers, radii, k, tol, localize=True) -> _Check:
    if not localize or len(radii) < 64:
        return _verify(w, centers, radii, k, tol)
    fam = _Family(centers, np.ones(len(radii)), radii)
    cells = _make_cells(w, len(radii))
    upper, _ = fam.bounds(cells, k)
    return _verify(w, centers, radii, k, tol, cells.subset(upper > 0))


# ---------------------------------------------------------------------------
# monotone disk families and the max-field engine


class _Family:
    """Disks with radius ``a * t + b`` (``a > 0``)."""

    def __init__(self, centers, a, b):
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.n = len(self.a)
        self.tree = cKDTree(self.centers) if self.n else None
        self.lipschitz = 1.0 / float(self.a.min()) if self.n else math.inf
        self._varied = self.n > 0 and float(self.a.max()) > float(self.a.min())
        if self._varied:
            self.strong = np.argsort(-self.a)[: min(16, self.n)]
        else:
            self.strong = np.zeros(0, dtype=int)

    def radii(self, t):
        return self.a * t + self.b

    def bounds(self, cells: _Cells, k: int):
        """Upper bound of the field over each cell, lower bound at each rep."""
        C = len(cells.reps)
        if self.n < k:
            return np.full(C, math.inf), np.full(C, math.inf)
        K = min(self.n, max(32, 4 * k))
        d, idx = self.tree.query(cells.reps, K)
        d = d.reshape(C, K)
        idx = idx.reshape(C, K)
        if len(self.strong) and K < self.n:
            ds = np.sqrt(((cells.reps[:, None, :] - self.centers[self.strong][None]) ** 2).sum(-1))
            # a strong disk already among the nearest must not be counted twice
            dup = (idx[:, :, None] == self.strong[None, None, :]).any(axis=1)
            ds[dup] = math.inf
            d = np.concatenate([d, ds], axis=1)
            idx = np.concatenate([idx, np.broadcast_to(self.strong, (C, len(self.strong)))], axis=1)
        a, b = self.a[idx], self.b[idx]
        up = (d + cells.radius[:, None] - b) / a
        lo = (d - b) / a
        if k == 1:
            upper, lower = up.min(axis=1), lo.min(axis=1)
        else:
            upper = np.partition(up, k - 1, axis=1)[:, k - 1]
            lower = np.partition(lo, k - 1, axis=1)[:, k - 1]
        if K < self.n:
            # every unseen disk is at least as far as the K-th nearest
            dK = d[:, K - 1]
            seen = np.zeros(self.n, dtype=bool)
            seen[self.strong] = True
            rest = ~seen
            amax = float(self.a[rest].max()) if len(self.strong) else float(self.a.max())
            amin = float(self.a.min())
            bmax = float(self.b.max())
            num = dK - bmax
            unseen = np.where(num >= 0, num / amax, num / amin)
            lower = np.minimum(lower, unseen)
        return upper, lower

    def values(self, pts, k: int):
        """Exact field values (kd-tree with brute-force fallback)."""
        pts = np.atleast_2d(pts)
        if self.n < k:
            return np.full(len(pts), math.inf)
        return _kth_brute(pts, self.centers, self.a, self.b, k)


def _make_cells(w: Window, n: int, target: int | None = None, h: float | None = None) -> _Cells:
    lo, hi = w.bbox
    if h is None:
        target = target or int(np.clip(2 * n, 256, 16384))
        h = math.sqrt(float(np.prod(hi - lo)) / target)
    nx, ny = (max(1, math.ceil((b - a) / h - 1e-9)) for a, b in zip(lo, hi))
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    centers = lo + h * (np.stack([ix.ravel(), iy.ravel()], axis=1) + 0.5)
    half_diag = h / math.sqrt(2)
    dist = w.distance(centers)
    meet = dist <= half_diag
    centers = centers[meet]
    inside = dist[meet] == 0
    reps = np.where(inside[:, None], centers, w.project(centers))
    factor = np.where(inside | w.is_convex, 1.0, 2.0)
    return _Cells(centers, h / 2, reps, half_diag * factor)


@dataclass
class _MaxResult:
    value: float
    lo: float
    hi: float
    point: np.ndarray | None
    ambiguous: bool


def _max_field(w: Window, fam: _Family, k: int, tol: float, verify: bool = True, want_point: bool = False) -> _MaxResult:
    if w.d != 2:
        raise GeometryError("exact cover times are implemented for d=2 only")
    if fam.n < k:
        return _MaxResult(math.inf, math.inf, math.inf, None, False)
    cells = _make_cells(w, fam.n)
    upper, lower = fam.bounds(cells, k)
    lo = float(lower.max())
    hi = float(upper.max())
    ambiguous = False

    def check(t):
        hot = cells.subset(upper > t)
        return _verify(w, fam.centers, fam.radii(t), k, tol / 100, hot)

    while hi - lo > tol:
        hot = upper > lo
        if hot.sum() <= 256 and cells.half > tol / 16:
            # cells that cannot beat lo are certified covered; split the rest
            cells, upper, lower = _refine(w, fam, cells.subset(hot), k)
            lo = max(lo, float(lower.max()))
            hi = max(lo, float(upper.max()))
            continue
        mid = 0.5 * (lo + hi)
        res = check(mid)
        ambiguous |= res.ambiguous
        if res.covered:
            hi = mid
        else:
            lo = mid
    value = 0.5 * (lo + hi)
    point = None
    if verify or want_point:
        above = check(value + tol)
        below = check(value - tol)
        if not above.covered or below.covered:
            raise RuntimeError("bisection sandwich failed: coverage predicate not monotone at result")
        ambiguous |= above.ambiguous or below.ambiguous
        if want_point:
            point = _argmax_refine(w, fam, k, below.witnesses, tol)
    return _MaxResult(value, lo, hi, point, ambiguous)


def _refine(w, fam, cells: _Cells, k):
    """Split each cell into 4x4 subcells and recompute bounds."""
    side = cells.half / 2
    offs = (np.arange(4) - 1.5) * side
    ox, oy = np.meshgrid(offs, offs)
    o = np.stack([ox.ravel(), oy.ravel()], axis=1)
    centers = (cells.centers[:, None, :] + o[None]).reshape(-1, 2)
    half_diag = side / math.sqrt(2)
    dist = w.distance(centers)
    meet = dist <= half_diag
    centers = centers[meet]
    inside = dist[meet] == 0
    reps = np.where(inside[:, None], centers, w.project(centers))
    factor = np.where(inside | w.is_convex, 1.0, 2.0)
    sub = _Cells(centers, side / 2, reps, half_diag * factor)
    upper, lower = fam.bounds(sub, k)
    return sub, upper, lower


def _argmax_refine(w, fam, k, witnesses, tol):
    if len(witnesses) == 0:
        return None
    vals = fam.values(witnesses, k)
    best = witnesses[int(np.argmax(vals))].copy()
    bval = float(vals.max())
    step = 100 * tol
    g = np.linspace(-1, 1, 5)
    gx, gy = np.meshgrid(g, g)
    offs = np.stack([gx.ravel(), gy.ravel()], axis=1)
    while step > tol / 10:
        cand = w.project(best + step * offs)
        v = fam.values(cand, k)
        i = int(np.argmax(v))
        if v[i] > bval:
            best, bval = cand[i], float(v[i])
        else:
            step /= 2
    return best


def _jm_family(g: GrowthConfiguration) -> _Family:
    s = g.seeds
    return _Family(s.points, np.ones(len(s)), -s.marks)


def _spbm_family(pts: MarkedPointSet) -> _Family:
    use = pts.marks > 0
    return _Family(pts.points[use], pts.marks[use], np.zeros(int(use.sum())))


def _check_horizon(value, pts: MarkedPointSet):
    if pts.t_max is not None and value > pts.t_max:
        raise HorizonError(value, pts.t_max, pts.rng)


def jm_cover_time(w: Window, g: GrowthConfiguration, tol: float | None = None, verify: bool = True) -> float:
    """Cover time ``max_{x in w} min_i (s_i + |x - x_i|)`` to within ``tol``.

    Raises HorizonError if the result exceeds the horizon the seeds were
    sampled to (seeds born later, or farther away for halo samples, could
    then matter).
    """
    tol = _default_tol(w) if tol is None else tol
    if len(g.seeds) == 0:
        raise HorizonError(math.inf, g.seeds.t_max or 0.0, g.seeds.rng)
    if g.restricted and not np.all(w.contains(g.seeds.points) | (w.boundary_distance(g.seeds.points) <= TOL)):
        raise ValueError("restricted configuration has seeds outside the window")
    res = _max_field(w, _jm_family(g), 1, tol, verify)
    _check_horizon(res.value, g.seeds)
    return res.value


def coverage_threshold(w: Window, pts: MarkedPointSet, k: int = 1, tol: float | None = None,
                       verify: bool = True, oracle_h: float | None = None):
    """Smallest ``r`` with ``w`` k-covered by the balls ``B(p_i, r Y_i)``.

    With ``oracle_h`` set, returns ``(R, consistent)`` where ``consistent``
    says whether ``R`` lies (to within ``tol``) in the grid oracle's bracket.
    """
    if pts.mark_kind != RADIUS:
        raise ValueError("coverage_threshold needs radius marks")
    tol = _default_tol(w) if tol is None else tol
    fam = _spbm_family(pts)
    if fam.n < k:
        return (math.inf, True) if oracle_h else math.inf
    res = _max_field(w, fam, k, tol, verify)
    _check_horizon(res.value, pts)
    if oracle_h:
        iv = grid_oracle_max(SPBMField(pts, k), w, oracle_h)
        return res.value, iv.lower - tol <= res.value <= iv.upper + tol
    return res.value


def dump_instance(path, w: Window, centers, radii, k: int, tol: float, verdict: CoverageVerdict) -> None:
    """Write a coverage instance and its verdict as JSON for later reproduction."""
    import json

    doc = {
        "window": w.to_json(),
        "points": np.asarray(centers, float).tolist(),
        "marks": np.asarray(radii, float).tolist(),
        "k": int(k),
        "tol": float(tol),
        "verdict": {"covered": verdict.covered, "deficit": verdict.deficit, "ambiguous": verdict.ambiguous},
        "witness": list(verdict.witness) if verdict.witness is not None else None,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_instance(path) -> tuple[Window, list[Disk], int, float]:
    import json

    with open(path) as fh:
        doc = json.load(fh)
    disks = [Disk(tuple(c), float(r)) for c, r in zip(doc["points"], doc["marks"])]
    return Window.from_json(doc["window"]), disks, int(doc["k"]), float(doc["tol"])


def last_covered_point(w: Window, model, k: int = 1, tol: float | None = None) -> tuple[float, float]:
    """A point whose coverage field is within ``10 tol`` of its maximum over ``w``."""
    tol = _default_tol(w) if tol is None else tol
    if isinstance(model, GrowthConfiguration):
        fam, k = _jm_family(model), 1
    elif model.mark_kind == BIRTH_TIME:
        fam, k = _Family(model.points, np.ones(len(model)), -model.marks), 1
    else:
        fam = _spbm_family(model)
    if fam.n < k:
        raise ValueError("not enough generators for the requested k")
    res = _max_field(w, fam, k, tol, verify=True, want_point=True)
    return tuple(float(v) for v in res.point)


# ---------------------------------------------------------------------------
# independent grid oracle (brute-force field evaluation, Lipschitz certificate)


class JMField:
    def __init__(self, g: GrowthConfiguration | MarkedPointSet):
        seeds = g.seeds if isinstance(g, GrowthConfiguration) else g
        self.points = np.asarray(seeds.points, dtype=float)
        self.births = np.asarray(seeds.marks, dtype=float)
        self.lipschitz = 1.0

    def values(self, x):
        return _brute_min_chunks(x, self.points, lambda d, sl: d + self.births[None, :], 1)


class SPBMField:
    def __init__(self, pts: MarkedPointSet, k: int = 1):
        use = pts.marks > 0
        self.points = np.asarray(pts.points[use], dtype=float)
        self.marks = np.asarray(pts.marks[use], dtype=float)
        if len(self.marks) < k:
            raise ValueError("fewer usable points than k")
        self.k = k
        self.lipschitz = 1.0 / float(self.marks.min())

    def values(self, x):
        return _brute_min_chunks(x, self.points, lambda d, sl: d / self.marks[None, :], self.k)


def _brute_min_chunks(x, points, transform, k):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.empty(len(x))
    step = max(1, 4_000_000 // max(len(points), 1))
    for s in range(0, len(x), step):
        diff = x[s : s + step, None, :] - points[None, :, :]
        v = transform(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)), None)
        out[s : s + step] = v.min(axis=1) if k == 1 else np.sort(v, axis=1)[:, k - 1]
    return out


def grid_oracle_max(field, w: Window, h: float, offset: float = 0.0) -> CertifiedInterval:
    """Certified bracket for ``max_{x in w} Xi(x)`` from a grid of spacing ``h``.

    ``field`` is a JMField or SPBMField. Every point of ``w`` lies within
    ``h sqrt(d)/2`` of a grid representative (cell centre, or its projection
    onto ``w`` for boundary cells of a convex window), so
    ``lower = max over reps`` and ``upper = lower + L h sqrt(d)/2``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if h > w.inradius:
        raise ValueError("grid spacing exceeds the window inradius")
    lo, hi = w.bbox
    d = len(lo)
    axes = [lo[i] + h * (np.arange(max(1, math.ceil((hi[i] - lo[i]) / h - 1e-9)) + 1) - 0.5 + offset)
            for i in range(d)]
    axes = [a[(a - h / 2) < hi[i]] for i, a in enumerate(axes)]
    half_diag = h * math.sqrt(d) / 2
    best, arg = -math.inf, None
    grids = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    step = 200_000
    factor = 1.0 if w.is_convex else 2.0
    for s in range(0, len(flat), step):
        c = flat[s : s + step]
        dist = w.distance(c)
        meet = dist <= half_diag
        c, dist = c[meet], dist[meet]
        if len(c) == 0:
            continue
        reps = np.where((dist == 0)[:, None], c, w.project(c)) if d == 2 or w.kind == "box" else c
        v = field.values(reps)
        i = int(np.argmax(v))
        if v[i] > best:
            best, arg = float(v[i]), tuple(float(t) for t in reps[i])
    width = field.lipschitz * half_diag * factor
    return CertifiedInterval(best, best + width, field.lipschitz, h, arg)


# ---------------------------------------------------------------------------
# coverage probabilities


@dataclass(frozen=True)
class JMModel:
    rho: float
    t: float


@dataclass(frozen=True)
class SPBMModel:
    n: float
    law: RadiusLaw
    r: float
    k: int = 1


def coverage_event(w: Window, model, restricted: bool, rng: RngSpec, tol: float = TOL) -> bool:
    """One realisation of the coverage event for a J-M or SPBM model."""
    from .processes import sample_halo, sample_marked_poisson, sample_spacetime_poisson, sample_spbm_halo

    if isinstance(model, JMModel):
        if restricted:
            seeds = sample_spacetime_poisson(w, model.rho, model.t, rng)
        else:
            seeds = sample_halo(w, model.rho, model.t, rng)
        radii, centers, k = model.t - seeds.marks, seeds.points, 1
    else:
        if restricted:
            pts = sample_marked_poisson(w, model.n, model.law, rng)
        else:
            pts = sample_spbm_halo(w, model.n, model.law, model.r, rng)
        radii, centers, k = model.r * pts.marks, pts.points, model.k
    if len(radii) < k:
        return False
    return _check_disks(w, centers, radii, k, tol).covered


def coverage_probability_estimate(w: Window, model, restricted: bool, reps: int, rng, tol: float = TOL):
    """Monte Carlo coverage frequency with a Wilson 95% interval."""
    from .stats import wilson_interval

    if reps < 1:
        raise ValueError("reps must be >= 1")
    base = rng if isinstance(rng, RngSpec) else RngSpec(int(rng))
    hits = sum(coverage_event(w, model, restricted, RngSpec(base.master_seed, i, base.path), tol) for i in range(reps))
    return hits / reps, wilson_interval(hits, reps)


def simulate_jm_cover_time(w: Window, rho: float, rng: RngSpec, restricted: bool = True,
                           tol: float | None = None, t_max: float | None = None, max_tries: int = 8):
    """Sample seeds and return ``(T, seeds)``, doubling the horizon on overflow.

    Each attempt draws from its own child stream of ``rng`` so results are
    reproducible from ``rng`` alone.
    """
    from .processes import default_horizon, sample_halo, sample_spacetime_poisson

    t = default_horizon(w, rho) if t_max is None else t_max
    sampler = sample_spacetime_poisson if restricted else sample_halo
    for attempt in range(max_tries):
        seeds = sampler(w, rho, t, rng.child(attempt))
        if len(seeds):
            try:
                return jm_cover_time(w, GrowthConfiguration(seeds, restricted), tol), seeds
            except HorizonError:
                pass
        t *= 2
    raise HorizonError(math.inf, t, rng)


def simulate_spbm_threshold(w: Window, n: float, law: RadiusLaw, rng: RngSpec, k: int = 1,
                            restricted: bool = True, tol: float | None = None, r_max: float | None = None,
                            max_tries: int = 8):
    """Sample an SPBM and return ``(R, points)``; unrestricted samples grow ``r_max`` on overflow."""
    from .processes import sample_marked_poisson, sample_spbm_halo

    if restricted:
        pts = sample_marked_poisson(w, n, law, rng.child(0))
        return coverage_threshold(w, pts, k, tol), pts
    r = r_max if r_max is not None else _default_radius(w, n, law, k)
    for attempt in range(max_tries):
        pts = sample_spbm_halo(w, n, law, r, rng.child(attempt))
        try:
            return coverage_threshold(w, pts, k, tol), pts
        except HorizonError:
            r *= 2
    raise HorizonError(math.inf, r, rng)


def _default_radius(w: Window, n: float, law: RadiusLaw, k: int) -> float:
    """Radius scale well above the typical k-coverage threshold."""
    ey2 = law.moment(2)
    a = max(w.area, 1e-300)
    m = n * a
    lg = math.log(m) if m > 1 else 0.0
    llg = math.log(lg) if lg > 1 else 0.0
    return math.sqrt((lg + (2 * k + 1) * llg + 40) / (math.pi * n * ey2)) if ey2 > 0 else w.diameter
