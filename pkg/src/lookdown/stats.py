"""Goodness-of-fit harness confronting Monte Carlo output with exact laws.

Deterministic functions of their inputs; no hidden randomness.  Default
alpha is 0.001 and moment checks use 4-sigma bands so that a suite of ~30
checks false-fails rarely.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
import scipy.special as sp
import scipy.stats

from .errors import (DegenerateBinningError, SampleSizeError, ValidationError)
from .tables import INF, PmfTable, _InfiniteLevel, _key, table_from_pairs

ALPHA_DEFAULT = 0.001
# two-sided tail mass of a 4-sigma normal band; moment tests pass iff
# p_value > this, keeping the "pass <=> p > alpha" invariant
ALPHA_4SIGMA = 2.0 * float(sp.ndtr(-4.0))


@dataclass(frozen=True)
class GofReport:
    """Outcome of one statistical check."""

    name: str
    statistic: float
    p_value: float
    n: int
    alpha: float
    passed: bool
    dof: int | None = None
    bins: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError("p_value must lie in [0, 1]")
        if self.passed != (self.p_value > self.alpha):
            raise ValidationError("pass must hold iff p_value > alpha")

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "statistic": self.statistic,
                "p_value": self.p_value, "pass": self.passed, "n": self.n,
                "alpha": self.alpha, "dof": self.dof, "bins": self.bins,
                **({"extra": self.extra} if self.extra else {})}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _report(name, statistic, p_value, n, alpha, dof=None, bins="", extra=None):
    return GofReport(name=name, statistic=float(statistic),
                     p_value=float(p_value), n=int(n), alpha=float(alpha),
                     passed=bool(p_value > alpha), dof=dof, bins=bins,
                     extra=extra or {})


# ---------------------------------------------------------------------------
# Empirical pmfs

def empirical_pmf(samples: Sequence, name: str = "empirical") -> PmfTable:
    """Relative frequencies as exact fractions; INF kept as its own cell."""
    items = list(samples)
    if not items:
        raise SampleSizeError("empirical_pmf needs at least one sample")
    counts: dict[Any, int] = {}
    values: dict[Any, Any] = {}
    for s in items:
        k = _key(s)
        counts[k] = counts.get(k, 0) + 1
        values[k] = s
    n = len(items)

    def sort_key(k):
        v = values[k]
        if isinstance(v, _InfiniteLevel):
            return (2, 0)
        if isinstance(v, tuple):
            return (1, v)
        return (0, v)

    pairs = [(values[k], Fraction(counts[k], n))
             for k in sorted(counts, key=sort_key)]
    return table_from_pairs(pairs, tail_bound=0.0, n=n, name=name)


# ---------------------------------------------------------------------------
# Chi-square

def _pool(observed: np.ndarray, expected: np.ndarray, labels: list,
          min_expected: float):
    """Pool cells with expected count below the threshold into one tail cell."""
    keep = expected >= min_expected
    obs = list(observed[keep])
    exp = list(expected[keep])
    labs = [labels[i] for i in np.nonzero(keep)[0]]
    pooled_obs = float(observed[~keep].sum())
    pooled_exp = float(expected[~keep].sum())
    if pooled_exp > 0 or pooled_obs > 0:
        obs.append(pooled_obs)
        exp.append(pooled_exp)
        labs.append("pooled_tail")
    return np.asarray(obs), np.asarray(exp), labs


def chi_square_gof(empirical: PmfTable, exact: PmfTable,
                   min_expected: float = 5.0,
                   alpha: float = ALPHA_DEFAULT,
                   name: str = "chi_square") -> GofReport:
    """Pearson chi-square of an empirical pmf against an exact one.

    The exact table's support (plus its tail bound) defines the cells;
    empirical mass outside it joins the tail cell.  Cells with expected
    count below ``min_expected`` are pooled into the tail.
    """
    if empirical.n is None:
        raise ValidationError("empirical table must carry its sample size n")
    n = empirical.n
    exact_keys = {_key(v) for v in exact.support}
    labels = [v for v in exact.support]
    expected = np.asarray([float(w) * n for w in exact.weights])
    observed = np.asarray([float(empirical.weight_of(v)) * n
                           for v in exact.support])
    # everything the exact support does not cover competes for the tail cell
    extra_obs = n - observed.sum()
    tail_exp = float(exact.tail_bound) * n
    obs, exp, labs = _pool(observed, expected, labels, min_expected)
    if labs and labs[-1] == "pooled_tail":
        obs[-1] += extra_obs
        exp[-1] += tail_exp
    else:
        obs = np.append(obs, extra_obs)
        exp = np.append(exp, tail_exp)
        labs.append("pooled_tail")
    if exp[-1] < min_expected:
        # tail still too thin: merge into the last proper cell
        if len(obs) < 2:
            raise DegenerateBinningError("all mass pooled; nothing to test")
        obs[-2] += obs[-1]
        exp[-2] += exp[-1]
        obs, exp, labs = obs[:-1], exp[:-1], labs[:-1]
    if len(obs) < 2:
        raise DegenerateBinningError("all mass pooled; nothing to test")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    p = float(scipy.stats.chi2.sf(stat, dof))
    return _report(name, stat, p, n, alpha, dof=dof,
                   bins=f"{len(obs)} cells (min_expected={min_expected})")


def chi_square_two_sample(samples_a: Sequence, samples_b: Sequence,
                          min_expected: float = 5.0,
                          alpha: float = ALPHA_DEFAULT,
                          name: str = "chi_square_2sample") -> GofReport:
    """Homogeneity chi-square for two independent discrete samples."""
    a, b = list(samples_a), list(samples_b)
    na, nb = len(a), len(b)
    if min(na, nb) < 2:
        raise SampleSizeError("need at least two samples on each side")
    keys: dict[Any, Any] = {}
    ca: dict[Any, int] = {}
    cb: dict[Any, int] = {}
    for s in a:
        k = _key(s); keys[k] = s; ca[k] = ca.get(k, 0) + 1
    for s in b:
        k = _key(s); keys[k] = s; cb[k] = cb.get(k, 0) + 1
    labels = list(keys)
    oa = np.asarray([ca.get(k, 0) for k in labels], dtype=float)
    ob = np.asarray([cb.get(k, 0) for k in labels], dtype=float)
    pooled = (oa + ob) / (na + nb)
    # pool thin cells by the smaller expected count
    thin = np.minimum(pooled * na, pooled * nb) < min_expected
    if thin.any():
        oa = np.append(oa[~thin], oa[thin].sum())
        ob = np.append(ob[~thin], ob[thin].sum())
        pooled = (oa + ob) / (na + nb)
    if len(oa) < 2:
        raise DegenerateBinningError("all mass pooled; nothing to test")
    stat = float(np.sum((oa - pooled * na) ** 2 / (pooled * na))
                 + np.sum((ob - pooled * nb) ** 2 / (pooled * nb)))
    dof = len(oa) - 1
    p = float(scipy.stats.chi2.sf(stat, dof))
    return _report(name, stat, p, na + nb, alpha, dof=dof,
                   bins=f"{len(oa)} cells")


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov against Exp(1)

def ks_statistic(sorted_samples: np.ndarray, cdf: np.ndarray) -> float:
    n = len(sorted_samples)
    grid = np.arange(n, dtype=np.float64)
    return float(max(np.max(np.abs(cdf - (grid + 1.0) / n)),
                     np.max(np.abs(cdf - grid / n))))


def ks_test_exp1(samples: Sequence[float], alpha: float = ALPHA_DEFAULT,
                 name: str = "ks_exp1") -> GofReport:
    """One-sample KS against the unit exponential, asymptotic p-value."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 50:
        raise SampleSizeError("KS test needs n >= 50")
    if np.any(x <= 0):
        raise ValidationError("samples must be strictly positive")
    xs = np.sort(x)
    d = ks_statistic(xs, 1.0 - np.exp(-xs))
    p = float(sp.kolmogorov(math.sqrt(x.size) * d))
    return _report(name, d, p, x.size, alpha)


# ---------------------------------------------------------------------------
# Moment bands

def moment_band(samples: Sequence[float], target_mean: float,
                target_var: float | None = None, n_sigma: float = 4.0,
                name: str = "moment_band") -> GofReport:
    """4-sigma band test for the mean (and optionally the variance).

    The variance band uses the fourth-moment standard error of s^2.
    Reported p-value is the two-sided normal tail of the worst z-score,
    so pass <=> p > 2*Phi(-n_sigma).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 100:
        raise SampleSizeError("moment_band needs n >= 100")
    n = x.size
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        z_mean = math.inf if x[0] != target_mean else 0.0
    else:
        z_mean = abs(float(x.mean()) - target_mean) / (sd / math.sqrt(n))
    worst = z_mean
    extra = {"mean": float(x.mean()), "z_mean": z_mean}
    if target_var is not None:
        s2 = sd**2
        m4 = float(np.mean((x - x.mean()) ** 4))
        se_var = math.sqrt(max(m4 - s2**2, 0.0) / n)
        z_var = abs(s2 - target_var) / se_var if se_var > 0 else math.inf
        worst = max(worst, z_var)
        extra.update({"var": s2, "z_var": z_var})
    alpha = 2.0 * float(sp.ndtr(-n_sigma))
    p = 2.0 * float(sp.ndtr(-worst)) if math.isfinite(worst) else 0.0
    return _report(name, worst, p, n, alpha, extra=extra)


# ---------------------------------------------------------------------------
# Point-process diagnostics

def lag1_autocorrelation(x: Sequence[float]) -> float:
    v = np.asarray(x, dtype=np.float64)
    if v.size < 3:
        raise SampleSizeError("need at least 3 values")
    v = v - v.mean()
    denom = float(np.sum(v * v))
    if denom == 0:
        return 0.0
    return float(np.sum(v[:-1] * v[1:]) / denom)


def count_dispersion(times: Sequence[float], width: float,
                     weights: Sequence[float] | None = None
                     ) -> tuple[float, int]:
    """Variance-to-mean ratio of event counts in disjoint windows.

    Windows tile [min(t), max(t)); partial trailing windows are dropped.
    ``weights`` counts each event with a multiplicity (batch size).
    Returns (ratio, number of windows).
    """
    t = np.asarray(times, dtype=np.float64)
    if t.size < 2:
        raise SampleSizeError("need at least two event times")
    if width <= 0:
        raise ValidationError("window width must be positive")
    order = np.argsort(t)
    t = t[order]
    w = None if weights is None else np.asarray(weights, dtype=np.float64)[order]
    span = t[-1] - t[0]
    n_win = int(span / width)
    if n_win < 2:
        raise SampleSizeError("fewer than two complete windows")
    idx = np.floor((t - t[0]) / width).astype(np.int64)
    keep = idx < n_win
    counts = np.bincount(idx[keep], minlength=n_win,
                         weights=None if w is None else w[keep])
    mean = counts.mean()
    if mean == 0:
        raise SampleSizeError("windows are empty")
    return float(counts.var(ddof=1) / mean), n_win


def dispersion_band(times: Sequence[float], width: float,
                    n_sigma: float = 4.0,
                    name: str = "dispersion") -> GofReport:
    """Index of dispersion against the Poisson value 1, +-n_sigma band.

    Under Poisson counts, (ratio - 1) has standard error ~ sqrt(2/n_windows).
    """
    ratio, n_win = count_dispersion(times, width)
    z = abs(ratio - 1.0) / math.sqrt(2.0 / n_win)
    alpha = 2.0 * float(sp.ndtr(-n_sigma))
    p = 2.0 * float(sp.ndtr(-z))
    return _report(name, ratio, p, n_win, alpha,
                   extra={"z": z, "n_windows": n_win})
