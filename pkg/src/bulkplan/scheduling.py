"""Request ordering criteria.

Static criteria sort the request list once. Dynamic criteria re-score every
pending request against the current residual source bandwidth each cycle.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key

import numpy as np

from .minplus import NetworkState
from .model import Request, Scenario


@dataclass(frozen=True)
class Criterion:
    name: str  # CLI name
    kind: str
    symbol: str
    dynamic: bool
    descending: bool


CRITERIA = {
    c.name: c
    for c in (
        Criterion("d_desc", "size_desc", "D_d", False, True),
        Criterion("d_asc", "size_asc", "D_a", False, False),
        Criterion("cbw_desc", "reqbw_desc", "C~_d", False, True),
        Criterion("cbw_asc", "reqbw_asc", "C~_a", False, False),
        Criterion("rand", "random", "Rand", False, False),
        Criterion("n_desc", "nsrc_desc", "N_d", True, True),
        Criterion("n_asc", "nsrc_asc", "N_a", True, False),
        Criterion("c_desc", "srcbw_desc", "C_d", True, True),
        Criterion("c_asc", "srcbw_asc", "C_a", True, False),
        Criterion("cnorm_desc", "normbw_desc", "C^_d", True, True),
        Criterion("cnorm_asc", "normbw_asc", "C^_a", True, False),
    )
}
_BY_KIND = {c.kind: c for c in CRITERIA.values()}

SCHEDULER_NAMES = tuple(CRITERIA)


def get_criterion(name) -> Criterion:
    if isinstance(name, Criterion):
        return name
    crit = CRITERIA.get(name) or _BY_KIND.get(name)
    if crit is None:
        raise ValueError(f"unknown scheduler {name!r}; choose from {', '.join(SCHEDULER_NAMES)}")
    return crit


def _static_key(r: Request, kind: str) -> float:
    if kind.startswith("size"):
        return r.size
    return r.demand


def order_static(requests, criterion, seed: int = 0, counter: dict | None = None) -> list[Request]:
    crit = get_criterion(criterion)
    if crit.dynamic:
        raise ValueError(f"{crit.name} is a per-cycle selection, not a static order")
    base = sorted(requests, key=lambda r: (r.dest, r.item))
    if crit.kind == "random":
        perm = np.random.default_rng(seed).permutation(len(base))
        if counter is not None:
            counter["ops"] = counter.get("ops", 0) + len(base)
        return [base[k] for k in perm]

    sign = -1.0 if crit.descending else 1.0
    n_cmp = 0

    def cmp(a, b):
        nonlocal n_cmp
        n_cmp += 1
        ka = (sign * _static_key(a, crit.kind), a.dest, a.item)
        kb = (sign * _static_key(b, crit.kind), b.dest, b.item)
        return (ka > kb) - (ka < kb)

    out = sorted(base, key=cmp_to_key(cmp))
    if counter is not None:
        counter["ops"] = counter.get("ops", 0) + n_cmp
    return out


def selection_scores(pending, st: NetworkState, s: Scenario, criterion) -> np.ndarray:
    crit = get_criterion(criterion)
    items = np.array([r.item for r in pending], dtype=np.int64)
    pres = s.presence[:, items].T.astype(float)  # (P, K)
    res = st.src_residual
    if crit.kind.startswith("nsrc"):
        live = res > 1e-9 * np.maximum(1.0, st.src_initial)
        return pres @ live.astype(float)
    bw = pres @ res
    if crit.kind.startswith("normbw"):
        return bw / np.array([r.demand for r in pending])
    return bw


def select_dynamic(pending, st: NetworkState, s: Scenario, criterion,
                   counter: dict | None = None) -> Request:
    """Pending request with the extremal score; ties go to the lowest (dest, item)."""
    crit = get_criterion(criterion)
    if not crit.dynamic:
        raise ValueError(f"{crit.name} is a static order, not a per-cycle selection")
    if not pending:
        raise ValueError("no pending requests")
    pending = sorted(pending, key=lambda r: (r.dest, r.item))
    scores = selection_scores(pending, st, s, crit)
    if counter is not None:
        counter["ops"] = counter.get("ops", 0) + len(pending) * (s.K + 1)
    k = int(np.argmax(scores)) if crit.descending else int(np.argmin(scores))
    return pending[k]
