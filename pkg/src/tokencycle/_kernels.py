"""Hot numeric kernels, in two interchangeable implementations.

Every kernel exists as a vectorised numpy function and as a numba ``@njit``
loop. The numba versions are used when numba imports and the environment
variable ``TOKENCYCLE_DISABLE_NUMBA`` is unset (or ``0``/``false``).

Both backends perform the same floating-point operations in the same order,
except ``exp`` inside :func:`gbm_paths`, where numba calls libm and numpy uses
its own vectorised routine; the two may disagree in the last bit. Outputs are
bit-stable for a given backend, which is recorded in every run manifest.
"""

from __future__ import annotations

import os

import numpy as np

TERMINAL = 0
SUM_OVER_GRID = 1

# Output columns of trajectory_batch.
NET_BENEFIT, RECYCLING_VOLUME, TOKEN_REVENUE, OP_COST, ENV_BENEFIT = range(5)


def _numba_disabled() -> bool:
    return os.environ.get("TOKENCYCLE_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


# --- numpy reference implementations ----------------------------------------


def gbm_paths_numpy(w0, step_drift, step_vol, z):
    """Exact log-space GBM stepping. ``z`` has shape (n_paths, n_steps)."""
    z = np.asarray(z, dtype=np.float64)
    n, m = z.shape
    out = np.empty((n, m + 1))
    out[:, 0] = w0
    incr = np.exp(step_drift + step_vol * z)
    for k in range(m):
        out[:, k + 1] = out[:, k] * incr[:, k]
    return out


def trajectory_batch_numpy(
    adoption, efficiency, eff_clamped, market_tv, social, subsidy, waste,
    p_max, base_cost, carbon_price, tv_override,
    alpha_fin, alpha_soc, unit_cost, env_alpha, q, how,
):
    n = p_max.shape[0]
    m = adoption.shape[0]
    out = np.zeros((n, 5))
    clamps = np.zeros(n, dtype=np.int64)
    neg_cost = np.zeros(n, dtype=np.int64)
    has_override = tv_override == tv_override
    for k in range(m):
        tv = np.where(has_override, tv_override, market_tv[k])
        u = alpha_fin * tv + alpha_soc * social[k]
        p_raw = p_max * adoption[k] * u
        p = np.minimum(np.maximum(p_raw, 0.0), 1.0)
        clamps += (p_raw < 0.0) | (p_raw > 1.0)
        if eff_clamped[k]:
            clamps += 1
        w = waste[:, k] if waste.shape[0] > 1 else waste[0, k]
        r = p * efficiency[k] * w
        cost = (base_cost + unit_cost * r) - subsidy[k]
        neg_cost += cost < 0.0
        env = env_alpha * r + carbon_price * (q * r)
        rev = r * tv
        nb = (rev + env) - cost
        if how == TERMINAL:
            if k == m - 1:
                out[:, NET_BENEFIT] = nb
                out[:, RECYCLING_VOLUME] = r
                out[:, TOKEN_REVENUE] = rev
                out[:, OP_COST] = cost
                out[:, ENV_BENEFIT] = env
        else:
            out[:, NET_BENEFIT] += nb
            out[:, RECYCLING_VOLUME] += r
            out[:, TOKEN_REVENUE] += rev
            out[:, OP_COST] += cost
            out[:, ENV_BENEFIT] += env
    return out, clamps, neg_cost


def histogram_counts_numpy(values, edges):
    """Count values into bins ``[edges[j], edges[j+1])``; the last bin is closed."""
    n_bins = edges.shape[0] - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.clip(idx, 0, n_bins - 1)
    return np.bincount(idx, minlength=n_bins).astype(np.int64)


# --- numba implementations ---------------------------------------------------

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

if numba is not None:
    _njit = numba.njit(cache=True)

    @_njit
    def gbm_paths_numba(w0, step_drift, step_vol, z):
        n, m = z.shape
        out = np.empty((n, m + 1))
        for i in range(n):
            w = w0
            out[i, 0] = w
            for k in range(m):
                w = w * np.exp(step_drift + step_vol * z[i, k])
                out[i, k + 1] = w
        return out

    @_njit
    def trajectory_batch_numba(
        adoption, efficiency, eff_clamped, market_tv, social, subsidy, waste,
        p_max, base_cost, carbon_price, tv_override,
        alpha_fin, alpha_soc, unit_cost, env_alpha, q, how,
    ):
        n = p_max.shape[0]
        m = adoption.shape[0]
        out = np.zeros((n, 5))
        clamps = np.zeros(n, dtype=np.int64)
        neg_cost = np.zeros(n, dtype=np.int64)
        shared_waste = waste.shape[0] == 1
        for i in range(n):
            override = tv_override[i]
            has_override = override == override
            row = 0 if shared_waste else i
            for k in range(m):
                tv = override if has_override else market_tv[k]
                u = alpha_fin * tv + alpha_soc * social[k]
                p_raw = p_max[i] * adoption[k] * u
                if p_raw < 0.0:
                    p = 0.0
                    clamps[i] += 1
                elif p_raw > 1.0:
                    p = 1.0
                    clamps[i] += 1
                else:
                    p = p_raw
                if eff_clamped[k]:
                    clamps[i] += 1
                r = p * efficiency[k] * waste[row, k]
                cost = (base_cost[i] + unit_cost * r) - subsidy[k]
                if cost < 0.0:
                    neg_cost[i] += 1
                env = env_alpha * r + carbon_price[i] * (q * r)
                rev = r * tv
                nb = (rev + env) - cost
                if how == 0:
                    if k == m - 1:
                        out[i, 0] = nb
                        out[i, 1] = r
                        out[i, 2] = rev
                        out[i, 3] = cost
                        out[i, 4] = env
                else:
                    out[i, 0] += nb
                    out[i, 1] += r
                    out[i, 2] += rev
                    out[i, 3] += cost
                    out[i, 4] += env
        return out, clamps, neg_cost

    @_njit
    def histogram_counts_numba(values, edges):
        n_bins = edges.shape[0] - 1
        counts = np.zeros(n_bins, dtype=np.int64)
        for x in values:
            lo = 0
            hi = edges.shape[0]
            # first index with edges[idx] > x
            while lo < hi:
                mid = (lo + hi) // 2
                if edges[mid] <= x:
                    lo = mid + 1
                else:
                    hi = mid
            j = lo - 1
            if j < 0:
                j = 0
            elif j > n_bins - 1:
                j = n_bins - 1
            counts[j] += 1
        return counts


BACKEND = "numba" if numba is not None and not _numba_disabled() else "numpy"

if BACKEND == "numba":
    gbm_paths = gbm_paths_numba
    trajectory_batch = trajectory_batch_numba
    histogram_counts = histogram_counts_numba
else:
    gbm_paths = gbm_paths_numpy
    trajectory_batch = trajectory_batch_numpy
    histogram_counts = histogram_counts_numpy


def warmup() -> None:
    """Trigger JIT compilation (a no-op on the numpy backend)."""
    if BACKEND != "numba":
        return
    z = np.zeros((1, 1))
    gbm_paths(1.0, 0.0, 0.0, z)
    one = np.ones(1)
    trajectory_batch(
        one, one, np.zeros(1, dtype=np.bool_), one, one, one, np.ones((1, 1)),
        one, one, one, np.full(1, np.nan), 1.0, 1.0, 1.0, 1.0, 1.0, 0,
    )
    histogram_counts(one, np.array([0.0, 2.0]))
