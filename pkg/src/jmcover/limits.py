"""Closed-form constants, limiting CDFs, standardizations and radius schedules.

Every limit law here has the shape ``F(beta) = exp(-sum_j a_j exp(-beta / s_j))``
and is evaluated in log space. Gamma-function values come from
``math.lgamma`` so that constants stay finite for large ``d``.

Theorem ids
-----------
``jm-unrestricted``      J-M cover time, whole-space seeds, any window (Gumbel).
``jm-polygon``           J-M cover time, seeds restricted to a polygon, d=2 (TCEV).
``jm-smooth``            J-M cover time, restricted, smooth boundary, d>=3.
``spbm-polygon``         SPBM k-coverage of a polygon, d=2.
``spbm-smooth``          SPBM k-coverage of a smooth body, d>=3.
``spbm-unrestricted``    SPBM k-coverage with centres in all of space.

The J-M ids accept a ``-tau`` suffix for the fixed-intensity, growing-window
version (``tau_L`` on ``L A``); the limit is the same, the centring differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .processes import RadiusLaw


class ConstantMismatchError(ArithmeticError):
    """Two algebraically equal expressions for a constant disagree numerically."""


class InfiniteMomentError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constants


def log_omega(d: int) -> float:
    if d < 0:
        raise ValueError("d must be >= 0")
    return 0.5 * d * math.log(math.pi) - math.lgamma(1 + d / 2)


def omega(d: int) -> float:
    """Volume of the unit ball in R^d (1 for d = 0)."""
    if d == 0:
        return 1.0
    return math.exp(log_omega(d))


def log_c_d(d: int) -> float:
    if d < 1:
        raise ValueError("d must be >= 1")
    ratio = 0.5 * math.log(math.pi) + math.lgamma(1 + d / 2) - math.lgamma((d + 1) / 2)
    return -math.lgamma(d + 1) + (d - 1) * ratio


def c_d(d: int) -> float:
    """``(1/d!) (sqrt(pi) Gamma(1+d/2) / Gamma((d+1)/2))^(d-1)``."""
    return math.exp(log_c_d(d))


def _log_c_dk_direct(d: int, k: int) -> float:
    return (
        log_c_d(d - 1)
        + (2 - d - 1 / d) * log_omega(d)
        + (2 * d - 3) * log_omega(d - 1)
        + (1 - d) * log_omega(d - 2)
        + (d + k - 3 + 1 / d) * math.log(1 - 1 / d)
        + (-1 + 1 / d) * math.log(2)
        - math.lgamma(k)
    )


def _log_c_d1_gamma(d: int) -> float:
    return (
        -math.lgamma(d)
        + (1 - d) * math.log(2)
        + (d - 2 + 1 / d) * math.log(d - 1)
        + (d / 2 - 1) * math.log(math.pi)
        + (1 - d) * math.lgamma((d + 1) / 2)
        + (d - 1 + 1 / d) * math.lgamma(d / 2)
    )


def c_dk(d: int, k: int = 1, rtol: float = 1e-10) -> float:
    """Boundary coefficient ``c_{d,k}`` for k-coverage near a smooth boundary.

    Computed from the product of unit-ball volumes and cross-checked against
    the Gamma-function closed form of ``c_{d,1}`` times
    ``(1 - 1/d)^(k-1) / (k-1)!``.
    """
    if d < 2 or k < 1:
        raise ValueError("need d >= 2 and k >= 1")
    direct = _log_c_dk_direct(d, k)
    other = _log_c_d1_gamma(d) + (k - 1) * math.log(1 - 1 / d) - math.lgamma(k)
    if abs(math.expm1(direct - other)) > rtol:
        raise ConstantMismatchError(f"c_{{{d},{k}}}: {math.exp(direct)!r} vs {math.exp(other)!r}")
    return math.exp(direct)


def c_prime_d(d: int) -> float:
    """Boundary coefficient of the restricted J-M limit for smooth windows."""
    if d < 2:
        raise ValueError("d must be >= 2")
    lg = (
        log_c_d(d - 1)
        + (2 * d - 3) * log_omega(d - 1)
        - (d - 1) * log_omega(d - 2)
        - (d - 1) * math.log(d)
        + (d - 1) / (d + 1) * (d * math.log(d - 1) - math.log(2) - d * log_omega(d))
    )
    return math.exp(lg)


def c_prime_d_via_spbm(d: int) -> float:
    """Same constant, assembled from ``c_{d,1}`` through the uniform-radius SPBM."""
    lg = (
        math.log(c_dk(d, 1))
        + (d - 2 + 1 / d) * math.log(d + 1)
        - (d - 1) * math.log(d)
        + (1 - 1 / d) / (d + 1) * (math.log(2 * (d - 1)) - log_omega(d))
        + (d - 2 + 1 / d) * math.log(d / (d + 1))
    )
    return math.exp(lg)


def c_dkY(spec: "ModelSpec") -> float:
    """``c_{d,k} E[Y^(d-1)]^(d-1) / E[Y^d]^(d-2+1/d)``."""
    d, k = spec.d, spec.k
    m1, m2 = spec.moment(d - 1), spec.moment(d)
    return c_dk(d, k) * m1 ** (d - 1) / m2 ** (d - 2 + 1 / d)


# ---------------------------------------------------------------------------
# model description and limit laws


@dataclass(frozen=True)
class ModelSpec:
    d: int = 2
    k: int = 1
    area: float = 1.0
    perimeter: float = 0.0
    law: RadiusLaw | None = None

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be >= 1")
        if self.area < 0 or self.perimeter < 0:
            raise ValueError("area and perimeter must be nonnegative")

    def moment(self, m: float) -> float:
        if self.law is None:
            return 1.0
        v = self.law.moment(m)
        if not math.isfinite(v):
            raise InfiniteMomentError(f"E[Y^{m:g}] is infinite for {self.law}")
        return v


@dataclass(frozen=True)
class LimitLaw:
    """``F(beta) = exp(-sum_j coef_j exp(-beta / scale_j))``."""

    theorem: str
    spec: ModelSpec
    terms: tuple[tuple[float, float], ...]
    description: str = ""

    def log_cdf(self, beta):
        b = np.asarray(beta, dtype=float)
        out = np.zeros_like(b)
        with np.errstate(over="ignore"):
            for coef, scale in self.terms:
                if coef > 0:
                    out = out - coef * np.exp(-b / scale)
        return out if out.ndim else float(out)

    def __call__(self, beta):
        lf = self.log_cdf(beta)
        return np.exp(lf) if isinstance(lf, np.ndarray) else math.exp(lf)

    cdf = __call__

    def quantile(self, p: float) -> float:
        """Inverse CDF by bracketing and bisection."""
        if not 0 < p < 1:
            raise ValueError("p must be in (0, 1)")
        lo, hi = -1.0, 1.0
        while self(lo) > p:
            lo *= 2
        while self(hi) < p:
            hi *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self(mid) < p:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class _Theorem:
    id: str
    d_rule: str
    formula: str
    centring: str
    needs_law: bool = False


THEOREMS: dict[str, _Theorem] = {
    t.id: t
    for t in [
        _Theorem(
            "jm-unrestricted", "d >= 1",
            "exp(-c_d (d^d omega_d)^(-1/(d+1)) |A| e^(-beta/(d+1)))",
            "omega_d rho T^(d+1) - d log rho - d^2 loglog rho",
        ),
        _Theorem(
            "jm-polygon", "d = 2",
            "exp(-(4 pi)^(-1/3) |A| e^(-beta/3) - (2 pi^2)^(-1/3) |dA| e^(-beta/6))",
            "pi rho T^3 - 2 log rho - 4 loglog rho",
        ),
        _Theorem(
            "jm-smooth", "d >= 3 (d = 2 gives jm-polygon)",
            "exp(-c'_d |dA| e^(-beta/(2d+2)))",
            "omega_d rho T^(d+1) - 2(d-1) log rho - 2d(d-1) loglog rho",
        ),
        _Theorem(
            "spbm-polygon", "d = 2",
            "exp(-(EY)^2/E[Y^2] 1{k=1} |A| e^(-beta) - c_{2,k} EY |dA| / sqrt(E[Y^2]) e^(-beta/2))",
            "n pi r^2 E[Y^2] - log n - (2k-1) loglog n",
            True,
        ),
        _Theorem(
            "spbm-smooth", "d >= 3",
            "exp(-c_{d,k,Y} |dA| e^(-beta/2))",
            "n omega_d r^d E[Y^d] - (2-2/d) log n - 2(d+k-3+1/d) loglog n",
            True,
        ),
        _Theorem(
            "spbm-unrestricted", "d >= 1",
            "exp(-c_d E[Y^(d-1)]^d / ((k-1)! E[Y^d]^(d-1)) |B| e^(-beta))",
            "omega_d E[Y^d] delta^d lambda - log lambda - (d+k-2) loglog lambda",
            True,
        ),
    ]
}
TAU_THEOREMS = {
    "jm-unrestricted-tau": "omega_d tau^(d+1) - d(d+1) log L - d^2 loglog L - d^2 log(d+1)",
    "jm-polygon-tau": "pi tau^3 - 6 log L - 4 loglog L - log 81",
    "jm-smooth-tau": "omega_d tau^(d+1) - 2(d^2-1) log L - 2d(d-1) loglog L - 2d(d-1) log(d+1)",
}


def theorem_ids() -> list[str]:
    return sorted(list(THEOREMS) + list(TAU_THEOREMS))


def _base(which: str) -> str:
    base = which[:-4] if which.endswith("-tau") else which
    if base not in THEOREMS or (which != base and which not in TAU_THEOREMS):
        raise ValueError(f"unknown theorem id {which!r}; choose from {', '.join(theorem_ids())}")
    return base


def limit_cdf(which: str, spec: ModelSpec) -> LimitLaw:
    """Limiting CDF of the standardized cover time / threshold for ``which``."""
    base = _base(which)
    d, k, A, P = spec.d, spec.k, spec.area, spec.perimeter
    th = THEOREMS[base]
    if th.needs_law and spec.law is None:
        raise ValueError(f"{which} needs a radius law")
    if base == "jm-unrestricted":
        terms = ((c_d(d) * math.exp(-(d * math.log(d) + log_omega(d)) / (d + 1)) * A, d + 1.0),)
    elif base == "jm-polygon":
        if d != 2:
            raise ValueError("jm-polygon is a d=2 result")
        terms = (((4 * math.pi) ** (-1 / 3) * A, 3.0), ((2 * math.pi**2) ** (-1 / 3) * P, 6.0))
    elif base == "jm-smooth":
        if d < 2:
            raise ValueError("jm-smooth needs d >= 2")
        if d == 2:
            return LimitLaw(which, spec, limit_cdf("jm-polygon", spec).terms, th.formula)
        terms = ((c_prime_d(d) * P, 2.0 * d + 2),)
    elif base == "spbm-polygon":
        if d != 2:
            raise ValueError("spbm-polygon is a d=2 result")
        m1, m2 = spec.moment(1), spec.moment(2)
        area = (m1 * m1 / m2) * A if k == 1 else 0.0
        terms = ((area, 1.0), (c_dk(2, k) * m1 * P / math.sqrt(m2), 2.0))
    elif base == "spbm-smooth":
        if d < 3:
            raise ValueError("spbm-smooth needs d >= 3")
        terms = ((c_dkY(spec) * P, 2.0),)
    else:
        coef = c_d(d) * spec.moment(d - 1) ** d / (math.factorial(k - 1) * spec.moment(d) ** (d - 1))
        terms = ((coef * A, 1.0),)
    if not any(c > 0 for c, _ in terms):
        raise ValueError("all limit coefficients vanish (need positive area or perimeter)")
    return LimitLaw(which, spec, tuple(terms), th.formula)


def _loglog(x: float) -> float:
    if not x > math.e:
        raise ValueError("scale parameter must exceed e")
    return math.log(math.log(x))


def standardize(value, scale: float, which: str, d: int = 2, spec: ModelSpec | None = None):
    """Map a raw cover time (or threshold) to the theorem's beta scale.

    ``scale`` is the intensity ``rho`` (or ``n``, ``lambda``) for the plain
    ids and the window scale ``L`` for the ``-tau`` ids. SPBM ids need
    ``spec`` for the radius moments.
    """
    base = _base(which)
    v = np.asarray(value, dtype=float)
    lg, llg = math.log(scale), _loglog(scale)
    if spec is not None:
        d = spec.d
    if which.endswith("-tau"):
        L = scale
        if base == "jm-unrestricted":
            off = d * (d + 1) * lg + d * d * llg + d * d * math.log(d + 1)
        elif base == "jm-polygon":
            off = 6 * lg + 4 * llg + math.log(81)
            d = 2
        else:
            off = 2 * (d * d - 1) * lg + 2 * d * (d - 1) * (llg + math.log(d + 1))
        del L
        out = omega(d) * v ** (d + 1) - off
    elif base == "jm-unrestricted":
        out = omega(d) * scale * v ** (d + 1) - d * lg - d * d * llg
    elif base == "jm-polygon":
        out = math.pi * scale * v**3 - 2 * lg - 4 * llg
    elif base == "jm-smooth":
        out = omega(d) * scale * v ** (d + 1) - 2 * (d - 1) * lg - 2 * d * (d - 1) * llg
    else:
        if spec is None or spec.law is None:
            raise ValueError(f"{which} needs a ModelSpec with a radius law")
        k = spec.k
        if base == "spbm-polygon":
            out = scale * math.pi * v**2 * spec.moment(2) - lg - (2 * k - 1) * llg
        elif base == "spbm-smooth":
            out = scale * omega(d) * v**d * spec.moment(d) - (2 - 2 / d) * lg - 2 * (d + k - 3 + 1 / d) * llg
        else:
            out = omega(d) * spec.moment(d) * v**d * scale - lg - (d + k - 2) * llg
    return out if out.ndim else float(out)


def unstandardize(beta: float, scale: float, which: str, d: int = 2, spec: ModelSpec | None = None) -> float:
    """Raw value whose standardization is ``beta`` (inverse of :func:`standardize`)."""
    base = _base(which)
    if spec is not None:
        d = spec.d
    if base == "jm-polygon":
        d = 2
    zero = standardize(0.0, scale, which, d, spec)
    one = standardize(1.0, scale, which, d, spec)
    power = d + 1 if base.startswith("jm") else d
    if base == "spbm-polygon":
        power = 2
    x = (beta - zero) / (one - zero)
    return max(x, 0.0) ** (1 / power)


def rn_schedule(n: float, spec: ModelSpec, beta: float) -> float:
    """Radius ``r_n`` putting ``n omega_d r^d E[Y^d]`` at the k-coverage centring plus ``beta``."""
    d, k = spec.d, spec.k
    md = spec.moment(d)
    bracket = (2 - 2 / d) * math.log(n) + 2 * (d + k - 3 + 1 / d) * _loglog(n) + beta
    return (max(bracket, 0.0) / (n * omega(d) * md)) ** (1 / d)


def gumbel_cdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-np.exp(-x))
    return out if out.ndim else float(out)


def tcev_sample(spec: ModelSpec, rng: np.random.Generator, size: int | None = None):
    """Max of two shifted independent Gumbels; its law is the ``jm-polygon`` limit."""
    if spec.area <= 0 or spec.perimeter <= 0:
        raise ValueError("need positive area and perimeter")
    g1 = rng.gumbel(size=size)
    g2 = rng.gumbel(size=size)
    a = 3 * (g1 + math.log(spec.area)) - math.log(4 * math.pi)
    b = 6 * (g2 + math.log(spec.perimeter)) - math.log(4 * math.pi**4)
    return np.maximum(a, b)


# ---------------------------------------------------------------------------
# consistency with the fixed-intensity growing-window centring of Chiu


def _chiu_c(L: float, d: int) -> float:
    c = d * (d + 1) * math.log(L) - log_omega(d)
    if not c > 1:
        raise ValueError("L too small: c(L) must exceed 1")
    return c


def chiu_transform(tau, L: float, d: int):
    """Chiu's standardization of the cover time ``tau`` of ``L A``."""
    c = _chiu_c(L, d)
    tau = np.asarray(tau, dtype=float)
    shift = c + math.log(c ** (1 / (d + 1)) * ((c + math.log(c)) / (d + 1)) ** (d - 1))
    out = c ** (d / (d + 1)) * omega(d) ** (1 / (d + 1)) * tau - shift
    return out if out.ndim else float(out)


def chiu_F(u, d: int):
    """``exp(-c_d (d+1)^(d-1) d^(-d) e^(-u))``."""
    u = np.asarray(u, dtype=float)
    out = np.exp(-c_d(d) * (d + 1) ** (d - 1) * d ** (-d) * np.exp(-u))
    return out if out.ndim else float(out)


def chiu_gap(L: float, u: float, d: int) -> float:
    """Difference of the two cover-time thresholds at matched levels.

    Chiu's threshold ``tau_C`` solves ``chiu_transform(tau) = u``. The
    comparison threshold ``tau_P`` solves
    ``omega_d tau^(d+1) - d(d+1) log L - d^2 loglog L = (d+1) u + log(d^(d^2) (d+1) / omega_d)``,
    so both describe the same limiting probability ``chiu_F(u, d)``.
    """
    c = _chiu_c(L, d)
    shift = c + math.log(c ** (1 / (d + 1)) * ((c + math.log(c)) / (d + 1)) ** (d - 1))
    tau_c = (u + shift) / (c ** (d / (d + 1)) * omega(d) ** (1 / (d + 1)))
    level = (d + 1) * u + d * d * math.log(d) + math.log(d + 1) - log_omega(d)
    rhs = level + d * (d + 1) * math.log(L) + d * d * _loglog(L)
    tau_p = (max(rhs, 0.0) / omega(d)) ** (1 / (d + 1))
    return tau_c - tau_p


def constants_table(d: int, k: int = 1) -> dict:
    row = {"d": d, "k": k, "omega_d": omega(d), "c_d": c_d(d)}
    row["c_dk"] = c_dk(d, k) if d >= 2 else None
    row["c_prime_d"] = c_prime_d(d) if d >= 2 else None
    return row
