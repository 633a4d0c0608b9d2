"""Compiled inner loops shared by the scalar and batched samplers.

Every kernel here consumes pre-drawn uniforms, so the caller owns all
stream bookkeeping. Item auxiliaries come from ``u[:n]`` by inverse
transform; the prior auxiliary ``z0`` is transformed by the caller (it
needs ``ndtri`` for the normal prior) and passed in. ``u[n + 1]`` is the
accept uniform. Pivot choices use a splitmix64 state that never touches
the auxiliary stream.
"""

import math

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old; skip it rather than warn on first parallel call
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

LOGISTIC = 0
NORMAL = 1

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT1_2 = 1.0 / math.sqrt(2.0)


@njit(cache=True)
def softplus(t):
    """log(1 + exp(t)) without overflow."""
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


@njit(cache=True)
def log_ndtr(x):
    """Log of the standard normal cdf."""
    if x > 5.0:
        return math.log1p(-0.5 * math.erfc(x * _SQRT1_2))
    if x > -37.0:
        return math.log(0.5 * math.erfc(-x * _SQRT1_2))
    # asymptotic series; erfc underflows below here
    x2 = x * x
    inv = 1.0 / x2
    series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)))
    return -0.5 * x2 - math.log(-x) - _HALF_LOG_2PI + math.log(series)


@njit(cache=True)
def prior_logpdf(kind, p0, p1, eta):
    if kind == LOGISTIC:
        t = p0 * eta + p1
        return math.log(p0) + t - 2.0 * softplus(t)
    z = (eta - p0) / p1
    return -0.5 * z * z - math.log(p1) - _HALF_LOG_2PI


@njit(cache=True)
def prior_logcdf(kind, p0, p1, eta):
    if kind == LOGISTIC:
        return -softplus(-(p0 * eta + p1))
    return log_ndtr((eta - p0) / p1)


@njit(cache=True)
def prior_logsf(kind, p0, p1, eta):
    if kind == LOGISTIC:
        return -softplus(p0 * eta + p1)
    return log_ndtr(-(eta - p0) / p1)


@njit(cache=True)
def splitmix64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def select_inplace(values, idx, k0, state):
    """Permute ``idx`` so that ``values[idx[k0]]`` is the (k0+1)th smallest.

    Random-pivot quickselect with a three-way partition, so runs of tied
    values terminate. Returns the advanced pivot state, the number of
    element-versus-pivot comparisons and the number of partition rounds.
    """
    lo = 0
    hi = idx.size - 1
    comparisons = 0
    depth = 0
    while lo < hi:
        state, r = splitmix64(state)
        p = lo + np.int64(r % np.uint64(hi - lo + 1))
        pivot = values[idx[p]]
        lt = lo
        i = lo
        gt = hi
        while i <= gt:
            v = values[idx[i]]
            comparisons += 1
            if v < pivot:
                tmp = idx[lt]
                idx[lt] = idx[i]
                idx[i] = tmp
                lt += 1
                i += 1
            elif v > pivot:
                tmp = idx[gt]
                idx[gt] = idx[i]
                idx[i] = tmp
                gt -= 1
            else:
                i += 1
        depth += 1
        if k0 < lt:
            hi = lt - 1
        elif k0 > gt:
            lo = gt + 1
        else:
            break
    return state, comparisons, depth


@njit(cache=True)
def propose(x, a, b, u, z0, state):
    """One SM-AB pass.

    Returns (j, eta_star, s_weighted, y0, y_count, weighted_x, state) where
    j indexes the auxiliary vector with the prior at slot 0 and item i at
    slot i (1-based), s_weighted sums a_i over generated ones excluding
    item j, and y_count is the generated raw score (the sum-match check).
    """
    n = a.size
    z = np.empty(n + 1)
    z[0] = z0
    xplus = 0
    wx = 0.0
    for i in range(n):
        ui = u[i]
        if ui <= 0.0:
            ui = 5e-324
        z[i + 1] = (math.log(ui) - math.log1p(-ui) - b[i]) / a[i]
        xplus += x[i]
        wx += a[i] * x[i]
    idx = np.arange(n + 1)
    state, _, _ = select_inplace(z, idx, xplus, state)
    j = idx[xplus]
    zj = z[j]
    s = 0.0
    count = 0
    for i in range(n):
        if i + 1 != j and z[i + 1] <= zj:
            s += a[i]
            count += 1
    y0 = 0
    if j != 0 and z0 <= zj:
        y0 = 1
        count += 1
    return j, zj, s, y0, count, wx, state


@njit(cache=True)
def log_alpha(eta_cur, eta_star, j, s, y0, xj, aj, bj, wx, kind, p0, p1):
    """Closed-form log acceptance ratio for a proposal from slot j."""
    d = eta_star - eta_cur
    if j == 0:
        return d * (wx - s)
    w_rest = wx - aj * xj
    if kind == LOGISTIC:
        # grouped so equivalent items against a matching prior cancel exactly
        coef = (w_rest - s) + (xj - 1) * aj + p0 * (1 - y0)
        return (
            d * coef
            + (softplus(aj * eta_star + bj) - softplus(p0 * eta_star + p1))
            - (softplus(aj * eta_cur + bj) - softplus(p0 * eta_cur + p1))
        )
    log_a = (
        (xj - 1) * aj * d
        + softplus(aj * eta_star + bj)
        - softplus(aj * eta_cur + bj)
        + prior_logpdf(kind, p0, p1, eta_star)
        - prior_logpdf(kind, p0, p1, eta_cur)
    )
    if y0 == 1:
        log_a += prior_logcdf(kind, p0, p1, eta_cur) - prior_logcdf(kind, p0, p1, eta_star)
    else:
        log_a += prior_logsf(kind, p0, p1, eta_cur) - prior_logsf(kind, p0, p1, eta_star)
    return log_a + d * (w_rest - s)


@njit(cache=True)
def mh_step(eta_cur, x, a, b, kind, p0, p1, u, z0, state):
    n = a.size
    j, zj, s, y0, _, wx, state = propose(x, a, b, u, z0, state)
    if j == 0:
        la = log_alpha(eta_cur, zj, 0, s, 0, 0, 0.0, 0.0, wx, kind, p0, p1)
    else:
        la = log_alpha(eta_cur, zj, j, s, y0, x[j - 1], a[j - 1], b[j - 1], wx, kind, p0, p1)
    accepted = la >= 0.0 or math.log(u[n + 1]) <= la
    if accepted:
        return zj, True, state
    return eta_cur, False, state


@njit(cache=True)
def run_steps(eta0, x, a, b, kind, p0, p1, U, Z0, state, out, accepted):
    eta = eta0
    for t in range(U.shape[0]):
        eta, acc, state = mh_step(eta, x, a, b, kind, p0, p1, U[t], Z0[t], state)
        out[t] = eta
        accepted[t] = acc
    return eta, state


@njit(cache=True, parallel=True)
def mh_rows(eta, X, a, b, kind, p0, p1, U, Z0, seeds, out, accepted):
    """Independent SM-MH steps, one per row of ``X`` against a shared bank."""
    for r in prange(X.shape[0]):
        e, acc, _ = mh_step(eta[r], X[r], a, b, kind, p0, p1, U[r], Z0[r], seeds[r])
        out[r] = e
        accepted[r] = acc


@njit(cache=True)
def select_kth(values, k0, state):
    idx = np.arange(values.size)
    state, comparisons, depth = select_inplace(values, idx, k0, state)
    return idx[k0], comparisons, depth, state
