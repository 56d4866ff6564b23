"""Small statistical helpers: Wilson intervals, DKW bands, KS distances."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats


def wilson_interval(hits: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = hits / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # the interval contains p exactly; clamp away rounding at p = 0 or 1
    return min(p, max(0.0, mid - half)), max(p, min(1.0, mid + half))


def dkw_epsilon(n: int, alpha: float = 0.05) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band."""
    return math.sqrt(math.log(2 / alpha) / (2 * n))


def ks_distance(sample, cdf) -> float:
    """Sup distance between the empirical CDF of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    if len(x) == 0:
        raise ValueError("empty sample")
    return float(stats.kstest(x, cdf).statistic)


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value."""
    res = stats.ks_2samp(np.asarray(a, float), np.asarray(b, float), method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_critical(n: int, m: int | None = None, alpha: float = 0.05) -> float:
    """Asymptotic KS critical value for one or two samples."""
    c = math.sqrt(-0.5 * math.log(alpha / 2))
    if m is None:
        return c / math.sqrt(n)
    return c * math.sqrt((n + m) / (n * m))


def two_proportion_z(h1: int, n1: int, h2: int, n2: int) -> float:
    p = (h1 + h2) / (n1 + n2)
    se = math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    if se == 0:
        return 0.0
    return (h1 / n1 - h2 / n2) / se
