"""Inner loop of one min-plus convolution layer.

Two interchangeable implementations are provided: an explicit double loop
compiled with numba, and a vectorised numpy version that also serves arbitrary
(non-linear) cost callables. The numba path is used when numba imports and the
environment variable ``BULKPLAN_DISABLE_JIT`` is unset or "0".

Both return ``(cost, activations, backpointer, ops)`` for every target grid
point and agree bit-for-bit on linear costs.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
JIT_DISABLED = os.environ.get("BULKPLAN_DISABLE_JIT", "0").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = HAVE_NUMBA and not JIT_DISABLED

_NO_ACT = np.iinfo(np.int64).max // 4


def convolve_numpy(xs, prev_cost, prev_act, cs, cap, step, fresh, tol, cost_tol):
    """Vectorised layer. ``step`` maps an array of new-source bandwidths to cost."""
    ck = cs[:, None] - xs[None, :]
    window = (ck >= -tol) & (ck <= cap + tol)
    # a candidate giving the new source nothing just carries prev(c) forward
    ops = int(np.count_nonzero(window & (ck > tol)))
    ok = window & np.isfinite(prev_cost)[None, :]

    ck = np.minimum(np.maximum(ck, 0.0), cap)
    ck = np.where(ck <= tol, 0.0, np.where(ck >= cap - tol, cap, ck))
    total = prev_cost[None, :] + step(ck)
    total = np.where(ok, total, np.inf)
    act = prev_act[None, :] + ((ck > 0) & fresh).astype(np.int64)

    best = total.min(axis=1)
    tie = ok & (total <= best[:, None] + cost_tol)
    amin = np.where(tie, act, _NO_ACT).min(axis=1)
    sel = tie & (act == amin[:, None])
    has = sel.any(axis=1)
    back = np.where(has, sel.argmax(axis=1), -1).astype(np.int64)

    rows = np.arange(len(cs))
    pick = np.maximum(back, 0)
    out_cost = np.where(has, total[rows, pick], np.inf)
    out_act = np.where(has, act[rows, pick], 0).astype(np.int64)
    return out_cost, out_act, back, ops


def convolve_linear_numpy(xs, prev_cost, prev_act, cs, cap, setup, slope, fresh, tol, cost_tol):
    def step(ck):
        return np.where(ck > 0, setup + slope * ck, 0.0)

    return convolve_numpy(xs, prev_cost, prev_act, cs, cap, step, fresh, tol, cost_tol)


def _convolve_linear_loop(xs, prev_cost, prev_act, cs, cap, setup, slope, fresh, tol, cost_tol):
    p = cs.shape[0]
    m = xs.shape[0]
    out_cost = np.full(p, np.inf)
    out_act = np.zeros(p, dtype=np.int64)
    back = np.full(p, -1, dtype=np.int64)
    ops = 0
    for r in range(p):
        c = cs[r]
        best = np.inf
        for t in range(m):
            ck = c - xs[t]
            if ck < -tol:
                break
            if ck > cap + tol:
                continue
            if ck > tol:
                ops += 1
            if not np.isfinite(prev_cost[t]):
                continue
            ck = min(max(ck, 0.0), cap)
            if ck <= tol:
                ck = 0.0
            elif ck >= cap - tol:
                ck = cap
            v = prev_cost[t] + (setup + slope * ck if ck > 0 else 0.0)
            if v < best:
                best = v
        if best == np.inf:
            continue
        sel = -1
        sel_act = _NO_ACT
        sel_cost = np.inf
        for t in range(m):
            ck = c - xs[t]
            if ck < -tol:
                break
            if ck > cap + tol or not np.isfinite(prev_cost[t]):
                continue
            ck = min(max(ck, 0.0), cap)
            if ck <= tol:
                ck = 0.0
            elif ck >= cap - tol:
                ck = cap
            v = prev_cost[t] + (setup + slope * ck if ck > 0 else 0.0)
            if v <= best + cost_tol:
                a = prev_act[t] + (1 if (ck > 0 and fresh) else 0)
                if a < sel_act:
                    sel = t
                    sel_act = a
                    sel_cost = v
        back[r] = sel
        out_cost[r] = sel_cost
        out_act[r] = sel_act
    return out_cost, out_act, back, ops


if HAVE_NUMBA:
    convolve_linear_numba = numba.njit(cache=True)(_convolve_linear_loop)
else:  # pragma: no cover
    convolve_linear_numba = None


def convolve_linear(xs, prev_cost, prev_act, cs, cap, setup, slope, fresh, tol, cost_tol):
    fn = convolve_linear_numba if USE_NUMBA else convolve_linear_numpy
    return fn(xs, prev_cost, prev_act, cs, float(cap), float(setup), float(slope),
              bool(fresh), float(tol), float(cost_tol))
