"""Goodness-of-fit checks tying simulated samples to the analytic laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaincc

from .analytic import DomainError

__all__ = [
    "GofReport",
    "kolmogorov_sf",
    "ks_test",
    "ks_2samp",
    "chi_square_poisson",
    "poisson_bins",
    "moment_report",
]

DEFAULT_SIGNIFICANCE = 1e-3


@dataclass(frozen=True)
class GofReport:
    test_name: str
    statistic: float
    p_value: Optional[float]
    n: int
    passed: bool
    significance: float = DEFAULT_SIGNIFICANCE
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "test_name": self.test_name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "pass": self.passed,
            "significance": self.significance,
        }
        out.update(self.details)
        return out


def kolmogorov_sf(x: float) -> float:
    """P(K > x) for the Kolmogorov distribution."""
    if x <= 0.0:
        return 1.0
    if x < 1.0:
        # Jacobi-transformed form converges fast for small x
        w = math.pi * math.pi / (8.0 * x * x)
        cdf = math.sqrt(2.0 * math.pi) / x * sum(math.exp(-(2 * k - 1) ** 2 * w) for k in range(1, 8))
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < 1e-17:
            break
    return min(1.0, max(0.0, 2.0 * total))


def _stephens(d: float, en: float) -> float:
    return kolmogorov_sf(d * (en + 0.12 + 0.11 / en))


def ks_test(samples: Sequence[float], cdf: Callable[[float], float],
            significance: float = DEFAULT_SIGNIFICANCE, *, min_n: int = 10) -> GofReport:
    """One-sample Kolmogorov-Smirnov test of sorted ``samples`` against ``cdf``.

    The p-value uses the asymptotic Kolmogorov law with Stephens'
    correction ``D (sqrt(n) + 0.12 + 0.11 / sqrt(n))``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < min_n:
        raise DomainError(f"need at least {min_n} samples, got {n}")
    if np.any(np.diff(x) < 0):
        raise DomainError("samples must be sorted in nondecreasing order")
    F = np.array([cdf(v) for v in x], dtype=float)
    if np.any((F < 0) | (F > 1)) or not np.isfinite(F).all():
        raise DomainError("cdf must map into [0, 1]")
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    p = _stephens(d, math.sqrt(n))
    return GofReport("ks", d, p, n, p >= significance, significance)


def ks_2samp(x: Sequence[float], y: Sequence[float],
             significance: float = DEFAULT_SIGNIFICANCE) -> GofReport:
    """Two-sample Kolmogorov-Smirnov test (asymptotic p-value)."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    n, m = x.size, y.size
    if n < 10 or m < 10:
        raise DomainError("need at least 10 samples on each side")
    grid = np.concatenate([x, y])
    d = float(np.max(np.abs(np.searchsorted(x, grid, side="right") / n
                            - np.searchsorted(y, grid, side="right") / m)))
    p = _stephens(d, math.sqrt(n * m / (n + m)))
    return GofReport("ks_2samp", d, p, n + m, p >= significance, significance)


def poisson_bins(lam: float, n: int, min_expected: float = 5.0) -> list[tuple[int, Optional[int], float]]:
    """Bins ``(k_lo, k_hi, expected)`` for a Poisson(lam) histogram of size ``n``.

    Cells are merged from the left until each expects at least
    ``min_expected``; the last bin is open (``k_hi is None``) and, if short,
    is merged into its neighbour.
    """
    if lam == 0.0:
        # all mass at zero; any k >= 1 is impossible
        return [(0, 0, float(n)), (1, None, 0.0)]
    # enough cells that the open tail is negligible
    k_max = int(lam + 12.0 * math.sqrt(lam) + 30)
    log_lam = math.log(lam)
    probs = [math.exp(-lam + k * log_lam - math.lgamma(k + 1)) for k in range(k_max + 1)]
    bins: list[list] = []
    lo, acc = 0, 0.0
    for k, pk in enumerate(probs):
        acc += n * pk
        if acc >= min_expected:
            bins.append([lo, k, acc])
            lo, acc = k + 1, 0.0
    # open tail takes everything from lo upward
    tail = n - sum(b[2] for b in bins)
    if bins and tail < min_expected:
        bins[-1][1] = None
        bins[-1][2] += max(tail, 0.0)
    else:
        bins.append([lo, None, max(tail, 0.0)])
    return [tuple(b) for b in bins]


def chi_square_poisson(counts: Sequence[int], lam: float,
                       significance: float = DEFAULT_SIGNIFICANCE) -> GofReport:
    """Chi-square test of a histogram (``counts[k]`` = #{nu = k}) against Poisson(lam)."""
    obs = np.asarray(counts, dtype=np.int64).ravel()
    if obs.size == 0 or not obs.any():
        raise DomainError("histogram is empty")
    if np.any(obs < 0):
        raise DomainError("counts must be non-negative")
    n = int(obs.sum())
    if n < 100:
        raise DomainError(f"need a total count of at least 100, got {n}")
    if not (math.isfinite(lam) and lam >= 0.0):
        raise DomainError(f"lam must be finite and >= 0, got {lam}")

    bins = poisson_bins(lam, n)
    stat = 0.0
    cells = []
    for lo, hi, expected in bins:
        o = int(obs[lo:].sum() if hi is None else obs[lo:hi + 1].sum())
        if expected > 0:
            stat += (o - expected) ** 2 / expected
        elif o > 0:
            stat = math.inf
        cells.append({"k_lo": lo, "k_hi": hi, "observed": o, "expected": expected})
    df = sum(1 for b in bins if b[2] > 0) - 1
    if df == 0:
        p = 1.0 if stat == 0.0 else 0.0
    else:
        p = float(gammaincc(df / 2.0, stat / 2.0)) if math.isfinite(stat) else 0.0
    return GofReport("chi_square_poisson", stat, p, n, p >= significance, significance,
                     {"df": df, "lambda": lam, "bins": cells})


def moment_report(samples: Sequence[float], analytic_mean: float, analytic_variance: float,
                  z_limit: float = 4.0) -> GofReport:
    """z-scores of the sample mean and variance against analytic values.

    The variance z-score uses the standard error ``sqrt((m4 - s^4) / n)``
    from the sample fourth central moment.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 30:
        raise DomainError(f"need at least 30 samples, got {n}")
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    dev = x - mean
    m4 = float(np.mean(dev**4))
    se_mean = math.sqrt(var / n)
    se_var = math.sqrt(max(m4 - var * var, 0.0) / n)
    z_mean = (mean - analytic_mean) / se_mean if se_mean > 0 else _exact_z(mean, analytic_mean)
    z_var = (var - analytic_variance) / se_var if se_var > 0 else _exact_z(var, analytic_variance)
    stat = max(abs(z_mean), abs(z_var))
    return GofReport("moments", stat, None, n, stat < z_limit, details={
        "mean": mean, "variance": var, "z_mean": z_mean, "z_variance": z_var,
        "se_mean": se_mean, "se_variance": se_var,
    })


def _exact_z(value: float, target: float) -> float:
    return 0.0 if math.isclose(value, target, rel_tol=1e-12, abs_tol=1e-15) else math.inf
