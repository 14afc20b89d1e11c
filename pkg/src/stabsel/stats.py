"""Statistical primitives for screen-and-clean.

Student-t tail probabilities via the regularized incomplete beta function,
OLS t-statistics with an intercept, and Benjamini-Hochberg adjustment that
leaves pseudo-p-values above 1 unclipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

RANK_TOL = 1e-10

_FPMIN = 1e-300
_EPS = 1e-16


class RankDeficientError(ValueError):
    """Predictor matrix does not have full column rank."""


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not (a > 0 and b > 0):
        raise ValueError("betainc needs a > 0 and b > 0")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"betainc needs 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # the fraction converges fast on this side of the mean; use symmetry otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if not df > 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(t):
        raise ValueError("t statistic is NaN")
    if math.isinf(t):
        return 0.0
    return betainc(0.5 * df, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    """Student-t cumulative distribution function."""
    if t == 0.0:
        return 0.5
    tail = 0.5 * t_sf2(t, df)
    return 1.0 - tail if t > 0 else tail


@dataclass(frozen=True)
class OlsResult:
    coefficients: np.ndarray
    tstats: np.ndarray
    pvalues: np.ndarray
    df_resid: int


def check_rank(A: np.ndarray, tol: float = RANK_TOL) -> bool:
    """True if the smallest singular value exceeds ``tol`` times the largest."""
    if A.shape[1] == 0:
        return True
    s = np.linalg.svd(A, compute_uv=False)
    return bool(s[-1] > tol * s[0])


def independent_columns(A: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Indices of a maximal set of linearly independent columns, in original order.

    Uses column-pivoted QR; the first column of ``A`` (an intercept, if present)
    is always considered first.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[1] == 0:
        return np.zeros(0, dtype=int)
    _, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(0, dtype=int)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


def ols_tstats(predictors: np.ndarray, response: np.ndarray, rank_tol: float = RANK_TOL) -> OlsResult:
    """Least squares with an intercept; t-statistics and two-sided p-values per predictor.

    The intercept's statistics are not reported. Residual variance uses the
    unbiased divisor ``n - p`` where ``p`` counts the intercept.
    """
    P = np.asarray(predictors, dtype=float)
    y = np.asarray(response, dtype=float).ravel()
    if P.ndim == 1:
        P = P[:, None]
    n, k = P.shape
    if y.shape[0] != n:
        raise ValueError(f"response has {y.shape[0]} rows, predictors have {n}")
    p = k + 1
    if n <= p:
        raise ValueError(f"need more rows than predictors + 1 (rows={n}, predictors={k})")
    A = np.column_stack([np.ones(n), P])
    if not check_rank(A, rank_tol):
        raise RankDeficientError(f"design with {k} predictors is rank deficient")
    Q, R = np.linalg.qr(A)
    coef = scipy.linalg.solve_triangular(R, Q.T @ y)
    resid = y - A @ coef
    df = n - p
    sigma2 = float(resid @ resid) / df
    Rinv = scipy.linalg.solve_triangular(R, np.eye(p))
    se = np.sqrt(sigma2 * np.sum(Rinv * Rinv, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.where(coef == 0, 0.0, np.inf * np.sign(coef)))
    pvals = np.array([t_sf2(float(v), df) for v in t[1:]])
    return OlsResult(coef[1:], t[1:], pvals, df)


def bh_fdr(pvalues: Sequence[float]) -> np.ndarray:
    """Benjamini-Hochberg step-up adjustment without clipping at 1.

    ``adjusted_(i) = min_{j >= i} p_(j) * m / j`` over the sorted values;
    output is in input order.
    """
    p = np.asarray(pvalues, dtype=float).ravel()
    if p.size == 0:
        return p.copy()
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError("p-values must be finite and non-negative")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = adj_sorted
    return out
