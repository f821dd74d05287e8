"""Independent reference implementations used to cross-check the package.

Everything here deliberately takes a different route than the production
code: direct eigendecomposition instead of whitened SVD, exhaustive path
enumeration instead of the DP sweep, explicit rank counting and exact
rational arithmetic instead of vectorized float paths, linear rescans
instead of single-pass peak walks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg as sla


def cca_correlations_eig(x, y, ridge=0.0):
    """Canonical correlations via the generalized eigenvalue route.

    Solves inv(Sxx) Sxy inv(Syy) Syx; the eigenvalues are the squared
    canonical correlations.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    sxx = xc.T @ xc / (n - 1)
    syy = yc.T @ yc / (n - 1)
    sxy = xc.T @ yc / (n - 1)
    d1 = sxx.shape[0]
    d2 = syy.shape[0]
    if ridge > 0:
        sxx = sxx + np.eye(d1) * ridge * np.trace(sxx) / d1
        syy = syy + np.eye(d2) * ridge * np.trace(syy) / d2
    m = sla.solve(sxx, sxy) @ sla.solve(syy, sxy.T)
    evals = np.real(sla.eigvals(m))
    rho = np.sqrt(np.clip(evals, 0.0, 1.0))
    rho = np.sort(rho)[::-1]
    return rho[: min(d1, d2)]


def dtw_exhaustive(cost) -> float:
    """Lexicographic (total cost, steps) minimum over all monotone paths."""
    cost = np.asarray(cost, dtype=np.float64)
    t1, t2 = cost.shape

    @lru_cache(maxsize=None)
    def best(i, j):
        if i == 0 and j == 0:
            return (float(cost[0, 0]), 0)
        cands = []
        if i > 0:
            cands.append(best(i - 1, j))
        if j > 0:
            cands.append(best(i, j - 1))
        if i > 0 and j > 0:
            cands.append(best(i - 1, j - 1))
        c, s = min(cands)
        return (c + float(cost[i, j]), s + 1)

    c, s = best(t1 - 1, t2 - 1)
    return c / (s + 1)


def average_precision_definitional(pairs) -> float:
    """Mean precision at each positive's rank, by explicit iteration.

    `pairs` is an iterable of objects with .distance and .same; at equal
    distance the different-pairs rank first.
    """
    ranked = sorted(pairs, key=lambda p: (p.distance, p.same))
    precisions = []
    seen = 0
    for rank, p in enumerate(ranked, 1):
        if p.same:
            seen += 1
            precisions.append(seen / rank)
    if seen == 0 or seen == len(ranked):
        raise ValueError("need both positive and negative pairs")
    return math.fsum(precisions) / seen


def peaks_with_prominence_quadratic(values):
    """Interior plateau peaks and prominences by brute-force rescans.

    Returns a list of (center_index, prominence). Plateau centers use
    round-half-to-even; a base level is the minimum between the peak and
    the nearest strictly higher sample (or the edge).
    """
    v = [float(x) for x in values]
    n = len(v)
    runs = []
    start = 0
    for t in range(1, n + 1):
        if t == n or v[t] != v[start]:
            runs.append((start, t - 1))
            start = t
    out = []
    for s, e in runs:
        if s == 0 or e == n - 1:
            continue
        if not (v[s - 1] < v[s] and v[e + 1] < v[s]):
            continue
        h = v[s]
        left_stop = 0
        for k in range(s - 1, -1, -1):
            if v[k] > h:
                left_stop = k + 1
                break
        left_base = min(v[left_stop:s])
        right_stop = n - 1
        for k in range(e + 1, n):
            if v[k] > h:
                right_stop = k - 1
                break
        right_base = min(v[e + 1:right_stop + 1])
        out.append((round((s + e) / 2), h - max(left_base, right_base)))
    return out


def spearman_exact(predicted, gold) -> float:
    """Spearman's rho in exact rational arithmetic (tie-free inputs).

    Ranks are computed by counting; with no ties the two rank variances
    are equal, so the correlation is an exact fraction.
    """

    def ranks(vals):
        return [Fraction(2 * sum(1 for u in vals if u < v)
                         + sum(1 for u in vals if u == v) + 1, 2) for v in vals]

    rx = ranks(list(predicted))
    ry = ranks(list(gold))
    n = len(rx)
    mx = sum(rx, Fraction(0)) / n
    my = sum(ry, Fraction(0)) / n
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sx = sum((a - mx) ** 2 for a in rx)
    sy = sum((b - my) ** 2 for b in ry)
    if sx == 0 or sy == 0:
        raise ValueError("zero rank variance")
    if sx == sy:
        return float(num / sx)
    return float(num) / math.sqrt(float(sx) * float(sy))


def rvalue_direct(precision_pct, recall_pct) -> float:
    """R-value recomputed from its defining geometry, in percent."""
    p = precision_pct / 100.0
    r = recall_pct / 100.0
    os_rate = r / p - 1.0
    r1 = math.sqrt((1.0 - r) ** 2 + os_rate ** 2)
    r2 = (-os_rate + r - 1.0) / math.sqrt(2.0)
    return 100.0 * (1.0 - (abs(r1) + abs(r2)) / 2.0)
