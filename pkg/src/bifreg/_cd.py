"""Jitted inner loops for the penalized profile least-squares solver.

All functions work on the precomputed Gram form of a transformed design:
G = Z~' Z~, c = Z~' y~, yty = y~' y~. The solver is a local linear
approximation of the SCAD penalty (outer loop) around the current
iterate, with cyclic coordinate descent on the weighted-l1 surrogate
(inner loop), warm-started along a decreasing lambda path.

No fastmath and no parallel loops: results must be bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MAX_OUTER = 30


@njit(cache=True)
def scad_value(u: float, lam: float, a: float) -> float:
    """SCAD penalty at u >= 0."""
    if u < lam:
        return lam * u
    if u < a * lam:
        return ((a * a - 1.0) * lam * lam - (u - a * lam) ** 2) / (2.0 * (a - 1.0))
    return (a + 1.0) * lam * lam / 2.0


@njit(cache=True)
def scad_deriv(u: float, lam: float, a: float) -> float:
    """SCAD derivative at u >= 0 (right derivative at the kinks)."""
    if u < lam:
        return lam
    if u < a * lam:
        return (a * lam - u) / (a - 1.0)
    return 0.0


@njit(cache=True)
def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def _objective(G, c, yty, nsamp, sigma, lam, a, beta) -> float:
    k = beta.size
    Gb = G @ beta
    quad = 0.5 * (yty - 2.0 * np.dot(c, beta) + np.dot(beta, Gb))
    pen = 0.0
    for j in range(k):
        pen += scad_value(abs(beta[j]), lam * sigma[j], a)
    return quad + nsamp * pen


@njit(cache=True)
def lla_fit(G, c, yty, nsamp, sigma, lam, a, tol, max_sweeps, beta0, hist):
    """One LLA + coordinate-descent fit at a single lambda.

    Returns (beta, converged, n_hist, sweeps_used). hist receives the
    true penalized objective after every outer iteration.
    """
    k = G.shape[0]
    beta = beta0.copy()
    thr = np.empty(k)
    converged = False
    sweeps = 0
    n_hist = 0
    for _ in range(MAX_OUTER):
        for j in range(k):
            thr[j] = nsamp * scad_deriv(abs(beta[j]), lam * sigma[j], a)
        beta_prev = beta.copy()
        s = G @ beta
        while sweeps < max_sweeps:
            delta = 0.0
            for j in range(k):
                gjj = G[j, j]
                if gjj <= 0.0:
                    continue
                r = c[j] - (s[j] - gjj * beta[j])
                bj = _soft(r, thr[j]) / gjj
                db = bj - beta[j]
                if db != 0.0:
                    beta[j] = bj
                    for i in range(k):
                        s[i] += G[i, j] * db
                    ad = abs(db)
                    if ad > delta:
                        delta = ad
            sweeps += 1
            if delta < tol:
                break
        if n_hist < hist.size:
            hist[n_hist] = _objective(G, c, yty, nsamp, sigma, lam, a, beta)
            n_hist += 1
        move = 0.0
        for j in range(k):
            ad = abs(beta[j] - beta_prev[j])
            if ad > move:
                move = ad
        if move < tol:
            converged = True
            break
        if sweeps >= max_sweeps:
            break
    return beta, converged, n_hist, sweeps


@njit(cache=True)
def path_fit(G, c, yty, nsamp, sigma, lams, a, tol, max_sweeps):
    """Warm-started fits along a decreasing lambda path.

    Returns (betas, rss, objective, df, converged, hist, hist_len).
    """
    k = G.shape[0]
    nl = lams.size
    betas = np.zeros((nl, k))
    rss = np.empty(nl)
    obj = np.empty(nl)
    df = np.zeros(nl, dtype=np.int64)
    conv = np.zeros(nl, dtype=np.bool_)
    hist = np.full((nl, MAX_OUTER), np.nan)
    hist_len = np.zeros(nl, dtype=np.int64)
    beta = np.zeros(k)
    for li in range(nl):
        beta, ok, nh, _ = lla_fit(
            G, c, yty, nsamp, sigma, lams[li], a, tol, max_sweeps, beta, hist[li]
        )
        betas[li] = beta
        conv[li] = ok
        hist_len[li] = nh
        Gb = G @ beta
        r = yty - 2.0 * np.dot(c, beta) + np.dot(beta, Gb)
        if r < 0.0:
            r = 0.0
        rss[li] = r
        pen = 0.0
        nz = 0
        for j in range(k):
            if beta[j] != 0.0:
                nz += 1
            pen += scad_value(abs(beta[j]), lams[li] * sigma[j], a)
        df[li] = nz
        obj[li] = 0.5 * r + nsamp * pen
    return betas, rss, obj, df, conv, hist, hist_len
