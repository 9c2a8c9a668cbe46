"""Compiled recursions shared by the filtering, likelihood, and estimation code.

Every kernel works on plain float64 arrays. Conventions:

* ``y`` holds the raw count sequence ``v_0 .. v_{n-1}`` as float64.
* ``regimes[t]`` is the 0/1 indicator produced by using ``v_t`` as the lagged
  observation (1 selects the first coefficient triple).
* ``lam[t]`` is the conditional mean implied after observing ``v_t``; it
  predicts the observation at ``t + 1``.  The last entry is the one-step-ahead
  forecast beyond the series.
* Log-likelihood, score, and information sums therefore pair ``y[t]`` with
  ``lam[t-1]`` (and ``grad[t-1]``) for ``t = 1 .. n-1``.
* ``coefs`` is ``(w1, a1, b1, w2, a2, b2)``.
"""

import math

import numpy as np
from numba import njit

__all__ = [
    "bpart_regimes",
    "hpart_regimes",
    "setpar_regimes",
    "intensity_from_regimes",
    "loglik_from_path",
    "loglik_and_score",
    "filter_with_gradient",
    "info_matrix_from_path",
]


@njit(cache=True)
def bpart_regimes(y, r, s, r0):
    n = y.shape[0]
    out = np.empty(n, dtype=np.int8)
    prev = r0
    for t in range(n):
        if y[t] <= r:
            e = 1
        elif y[t] > s:
            e = 0
        else:
            e = prev
        out[t] = e
        prev = e
    return out


@njit(cache=True)
def hpart_regimes(y, r, s, c, dy0):
    n = y.shape[0]
    out = np.empty(n, dtype=np.int8)
    for t in range(n):
        dy = y[t] - y[t - 1] if t > 0 else dy0
        if dy >= c:
            out[t] = 1 if y[t] <= s else 0
        else:
            out[t] = 1 if y[t] <= r else 0
    return out


@njit(cache=True)
def setpar_regimes(y, r):
    n = y.shape[0]
    out = np.empty(n, dtype=np.int8)
    for t in range(n):
        out[t] = 1 if y[t] <= r else 0
    return out


@njit(cache=True)
def intensity_from_regimes(y, regimes, coefs, lam0):
    n = y.shape[0]
    out = np.empty(n)
    w1, a1, b1 = coefs[0], coefs[1], coefs[2]
    w2, a2, b2 = coefs[3], coefs[4], coefs[5]
    lam = lam0
    for t in range(n):
        if regimes[t] == 1:
            lam = w1 + a1 * y[t] + b1 * lam
        else:
            lam = w2 + a2 * y[t] + b2 * lam
        out[t] = lam
    return out


@njit(cache=True)
def loglik_from_path(y, lam):
    n = y.shape[0]
    acc = 0.0
    for t in range(1, n):
        l = lam[t - 1]
        acc += -l + y[t] * math.log(l) - math.lgamma(y[t] + 1.0)
    return acc


@njit(cache=True)
def loglik_and_score(y, regimes, coefs, lam0):
    """Fused filter + log-likelihood + analytic score in a single pass."""
    n = y.shape[0]
    w1, a1, b1 = coefs[0], coefs[1], coefs[2]
    w2, a2, b2 = coefs[3], coefs[4], coefs[5]
    lam = lam0
    g = np.zeros(6)
    score = np.zeros(6)
    ll = 0.0
    for t in range(n):
        if t >= 1:
            ll += -lam + y[t] * math.log(lam) - math.lgamma(y[t] + 1.0)
            w = y[t] / lam - 1.0
            for j in range(6):
                score[j] += w * g[j]
        if regimes[t] == 1:
            lam_new = w1 + a1 * y[t] + b1 * lam
            g0 = 1.0 + b1 * g[0]
            g1 = y[t] + b1 * g[1]
            g2 = lam + b1 * g[2]
            g3 = b1 * g[3]
            g4 = b1 * g[4]
            g5 = b1 * g[5]
        else:
            lam_new = w2 + a2 * y[t] + b2 * lam
            g0 = b2 * g[0]
            g1 = b2 * g[1]
            g2 = b2 * g[2]
            g3 = 1.0 + b2 * g[3]
            g4 = y[t] + b2 * g[4]
            g5 = lam + b2 * g[5]
        g[0], g[1], g[2], g[3], g[4], g[5] = g0, g1, g2, g3, g4, g5
        lam = lam_new
    return ll, score


@njit(cache=True)
def filter_with_gradient(y, regimes, coefs, lam0):
    """Intensity path together with its coefficient gradient d(lam[t])/d(coefs)."""
    n = y.shape[0]
    w1, a1, b1 = coefs[0], coefs[1], coefs[2]
    w2, a2, b2 = coefs[3], coefs[4], coefs[5]
    lam_path = np.empty(n)
    grad = np.zeros((n, 6))
    lam = lam0
    g = np.zeros(6)
    for t in range(n):
        if regimes[t] == 1:
            lam_new = w1 + a1 * y[t] + b1 * lam
            grad[t, 0] = 1.0 + b1 * g[0]
            grad[t, 1] = y[t] + b1 * g[1]
            grad[t, 2] = lam + b1 * g[2]
            grad[t, 3] = b1 * g[3]
            grad[t, 4] = b1 * g[4]
            grad[t, 5] = b1 * g[5]
        else:
            lam_new = w2 + a2 * y[t] + b2 * lam
            grad[t, 0] = b2 * g[0]
            grad[t, 1] = b2 * g[1]
            grad[t, 2] = b2 * g[2]
            grad[t, 3] = 1.0 + b2 * g[3]
            grad[t, 4] = y[t] + b2 * g[4]
            grad[t, 5] = lam + b2 * g[5]
        for j in range(6):
            g[j] = grad[t, j]
        lam = lam_new
        lam_path[t] = lam
    return lam_path, grad


@njit(cache=True)
def info_matrix_from_path(y, lam, grad):
    """Plug-in information average over the scored steps (obs t vs state t-1)."""
    n = y.shape[0]
    G = np.zeros((6, 6))
    m = n - 1
    for t in range(1, n):
        l = lam[t - 1]
        for i in range(6):
            gi = grad[t - 1, i] / l
            for j in range(6):
                G[i, j] += gi * grad[t - 1, j]
    if m > 0:
        for i in range(6):
            for j in range(6):
                G[i, j] /= m
    return G
