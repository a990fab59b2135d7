"""Fused loops for the hot paths, compiled with numba when available.

These mirror ``engine.step`` and ``market_data._synth_caps_numpy`` line for
line but keep every per-day vector in preallocated scratch arrays. Ranking
is an insertion sort seeded with the previous day's order, which is O(d)
when only a few ranks move.
"""

import math

import numpy as np

from ._accel import njit

STATUS_OK = 0
STATUS_BAD_WEALTH = 1

ENTROPY = 0
QUADRATIC = 1


@njit
def _rank_insertion(caps, order):
    # order holds a permutation; sort by (cap desc, index asc)
    d = order.shape[0]
    for i in range(1, d):
        j = order[i]
        cj = caps[j]
        m = i - 1
        while m >= 0:
            o = order[m]
            co = caps[o]
            if co > cj or (co == cj and o < j):
                break
            order[m + 1] = o
            m -= 1
        order[m + 1] = j


@njit
def synth_caps(caps0, drift, vol, shocks):
    n, d = shocks.shape
    caps = np.empty((n + 1, d))
    caps[0, :] = caps0
    order = np.arange(d)
    for l in range(1, n + 1):
        prev = caps[l - 1]
        _rank_insertion(prev, order)
        for r in range(d):
            j = order[r]
            caps[l, j] = prev[j] * math.exp(drift[r] + vol[r] * shocks[l - 1, j])
    return caps


@njit
def _genfn(kind, c, x, k, grad):
    # fills grad[:k], returns G; both scaled by 1/c
    g = 0.0
    if kind == ENTROPY:
        for i in range(k):
            lx = math.log(x[i])
            g -= x[i] * lx
            grad[i] = (-lx - 1.0) / c
    else:
        for i in range(k):
            g += x[i] * x[i]
            grad[i] = -x[i] / c
        g = 1.0 - 0.5 * g
    return g / c


@njit
def genfn_raw(kind, x):
    scratch = np.empty(x.shape[0])
    return _genfn(kind, 1.0, x, x.shape[0], scratch)


@njit
def run_strategy_kernel(
    caps, rets, k, additive, kind, c,
    out_wealth, out_g, out_gamma, out_leak, out_changed, out_turnover, out_old_wealth,
):
    n, d = caps.shape
    order = np.arange(d)
    _rank_insertion(caps[0], order)

    names = order[:k].copy()
    list_caps = np.empty(k)
    mu = np.empty(k)
    theta = np.empty(k)
    shares = np.empty(k)
    s = 0.0
    for i in range(k):
        list_caps[i] = caps[0, names[i]]
        s += list_caps[i]
    for i in range(k):
        mu[i] = list_caps[i] / s
    g = _genfn(kind, c, mu, k, theta)
    wealth = g
    tm = 0.0
    for i in range(k):
        tm += theta[i] * mu[i]
    denom = g  # multiplicative: G, additive: V, equal at the start
    numerator = wealth * s
    for i in range(k):
        pi = mu[i] / denom * (theta[i] + denom - tm)
        shares[i] = pi * numerator / list_caps[i]
    out_wealth[0] = wealth
    out_old_wealth[0] = wealth
    out_g[0] = g
    out_gamma[0] = 0.0
    out_leak[0] = 0.0
    out_changed[0] = False
    out_turnover[0] = 0.0

    grown = np.empty(k)
    mu_hat = np.empty(k)
    theta_hat = np.empty(k)
    new_names = np.empty(k, dtype=np.int64)
    new_caps = np.empty(k)
    new_mu = np.empty(k)
    new_theta = np.empty(k)
    pi_new = np.empty(k)
    member = np.full(d, -1, dtype=np.int64)
    diff = np.zeros(d)
    gamma = 0.0
    leak = 0.0

    for l in range(1, n):
        day_caps = caps[l]
        day_rets = rets[l]
        _rank_insertion(day_caps, order)

        numerator = 0.0
        old_sum = 0.0
        for i in range(k):
            grown[i] = list_caps[i] * (1.0 + day_rets[names[i]])
            numerator += shares[i] * grown[i]
            old_sum += grown[i]
        new_sum = 0.0
        for i in range(k):
            new_names[i] = order[i]
            new_caps[i] = day_caps[order[i]]
            new_sum += new_caps[i]
        wealth = numerator / new_sum

        for i in range(k):
            mu_hat[i] = grown[i] / old_sum
        g_hat = _genfn(kind, c, mu_hat, k, theta_hat)
        d_gamma = g - g_hat
        for i in range(k):
            d_gamma += theta[i] * (mu_hat[i] - mu[i])
        gamma += d_gamma

        for i in range(k):
            new_mu[i] = new_caps[i] / new_sum
        g_new = _genfn(kind, c, new_mu, k, new_theta)

        for i in range(k):
            member[names[i]] = l
        changed = False
        for i in range(k):
            if member[new_names[i]] != l:
                changed = True
                break
        if changed:
            if additive:
                leak += g_hat - g_new
            else:
                leak += math.log(g_hat) - math.log(g_new)

        out_wealth[l] = wealth
        out_old_wealth[l] = numerator / old_sum
        out_g[l] = g_new
        out_gamma[l] = gamma
        out_leak[l] = leak
        out_changed[l] = changed
        if not wealth > 0.0:
            return STATUS_BAD_WEALTH, l

        tm = 0.0
        for i in range(k):
            tm += new_theta[i] * new_mu[i]
        denom = wealth if additive else g_new
        for i in range(k):
            pi_new[i] = new_mu[i] / denom * (new_theta[i] + denom - tm)

        for i in range(k):
            diff[names[i]] += shares[i] * grown[i] / numerator
        for i in range(k):
            diff[new_names[i]] -= pi_new[i]
        turnover = 0.0
        for i in range(k):
            turnover += abs(diff[names[i]])
            diff[names[i]] = 0.0
        for i in range(k):
            turnover += abs(diff[new_names[i]])
            diff[new_names[i]] = 0.0
        out_turnover[l] = 0.5 * turnover

        for i in range(k):
            shares[i] = pi_new[i] * numerator / new_caps[i]
            names[i] = new_names[i]
            list_caps[i] = new_caps[i]
            mu[i] = new_mu[i]
            theta[i] = new_theta[i]
        g = g_new

    return STATUS_OK, n
