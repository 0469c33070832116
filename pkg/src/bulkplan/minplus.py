"""Optimal routing of a single request by iterated min-plus convolution.

Partial cost functions are indexed by the bandwidth *newly* allocated in the
current cycle and hold incremental costs ``f(c* + c) - f(c*)``; the minimiser
is the same as for the full per-cycle objective.

Grid of layer k (sources processed in order s_1..s_n)::

    lo_k = max(0, C~ - sum of caps after k)     hi_k = min(C~, sum of caps up to k)
    G_k  = {lo_k, lo_k + dc, ...} U {hi_k} U anchors

The anchors are the partial sums of allocations where every source but one
is idle or saturated. Concave costs reach their minimum at such allocations,
so the lattice always contains an exact optimum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .model import EPS, CostFunction, Request, Scenario

POLICIES = ("abort", "skip")


@dataclass
class SolverConfig:
    dc: float = 1.0
    eps: float = EPS
    policy: str = "abort"
    fast_path: bool = True
    count_ops: bool = True
    keep_log: bool = True
    seed: int = 0
    cost_tol: float = 1e-9

    def __post_init__(self):
        if not self.dc > 0:
            raise ValueError(f"grid step must be positive, got {self.dc}")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")


class InfeasibleRequestError(Exception):
    def __init__(self, request: Request, reason: str):
        super().__init__(f"request (dest={request.dest}, item={request.item}) infeasible: {reason}")
        self.request = request
        self.reason = reason


@dataclass
class NetworkState:
    src_residual: np.ndarray  # (K,)
    dst_residual: np.ndarray  # (N,)
    allocated: np.ndarray  # c*_ji, (K, N)
    vpn_cap: np.ndarray  # (K, N), original caps
    src_initial: np.ndarray
    dst_initial: np.ndarray

    @classmethod
    def fresh(cls, s: Scenario) -> "NetworkState":
        return cls(
            src_residual=np.array(s.src_access, dtype=float),
            dst_residual=np.array(s.dest_access, dtype=float),
            allocated=np.zeros((s.K, s.N)),
            vpn_cap=np.array(s.vpn_cap, dtype=float),
            src_initial=np.array(s.src_access, dtype=float),
            dst_initial=np.array(s.dest_access, dtype=float),
        )

    def copy(self) -> "NetworkState":
        return NetworkState(*(np.array(getattr(self, f)) for f in self.__dataclass_fields__))

    def caps_to(self, i: int) -> np.ndarray:
        """Allocatable bandwidth from every source towards destination ``i``."""
        cap = np.minimum(self.vpn_cap[:, i] - self.allocated[:, i], self.src_residual)
        cap = np.minimum(cap, self.dst_residual[i])
        return np.maximum(cap, 0.0)


def allocatable_cap(st: NetworkState, j: int, i: int) -> float:
    return float(st.caps_to(i)[j])


class Feasibility(NamedTuple):
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def _eligible(st: NetworkState, r: Request, eps: float = EPS):
    caps = st.caps_to(r.dest)
    tol = eps * max(1.0, r.demand)
    return [j for j in r.sources if caps[j] > tol], caps


def feasibility_check(st: NetworkState, r: Request, eps: float = EPS) -> Feasibility:
    demand = r.demand
    tol = eps * max(1.0, demand)
    if not r.sources:
        return Feasibility(False, "no source")
    if demand > st.dst_residual[r.dest] + tol:
        return Feasibility(False, f"destination access {st.dst_residual[r.dest]:.6f} < demand {demand:.6f}")
    elig, caps = _eligible(st, r, eps)
    reach = float(caps[elig].sum()) if elig else 0.0
    if demand > reach + tol:
        return Feasibility(False, f"reachable capacity {reach:.6f} < demand {demand:.6f}")
    return Feasibility(True)


@dataclass
class PartialCostFunction:
    grid: np.ndarray
    cost: np.ndarray
    activations: np.ndarray
    back: np.ndarray
    ops: int = 0

    @classmethod
    def base(cls) -> "PartialCostFunction":
        """Zero-demand starting layer: only c = 0, at no cost."""
        return cls(np.zeros(1), np.zeros(1), np.zeros(1, dtype=np.int64), np.full(1, -1, dtype=np.int64))

    def __call__(self, c: float, tol: float = 1e-9) -> float:
        k = int(np.argmin(np.abs(self.grid - c)))
        if abs(self.grid[k] - c) > tol * max(1.0, abs(c)):
            raise KeyError(f"{c} is not a grid point")
        return float(self.cost[k])


def _snap(x: float, cap: float, tol: float) -> float:
    x = min(max(x, 0.0), cap)
    if x <= tol:
        return 0.0
    if x >= cap - tol:
        return cap
    return x


def minplus_step(prev: PartialCostFunction, f: CostFunction, cap: float, c_star: float,
                 cfg: SolverConfig, grid: np.ndarray, tol: float | None = None) -> PartialCostFunction:
    """Convolve ``prev`` with the incremental cost of one more source.

    For each point c of ``grid`` keeps the cheapest ``prev(x) + f(c* + c - x) - f(c*)``
    over admissible x. Among cost-equal choices the one activating fewer new
    VPNs wins, then the one putting the most bandwidth on the new source.
    """
    grid = np.asarray(grid, dtype=float)
    if tol is None:
        tol = cfg.eps * max(1.0, float(grid.max()) if len(grid) else 1.0)
    fresh = not c_star > 0
    if f.is_linear:
        setup = f.setup if fresh else 0.0
        cost, act, back, ops = _kernels.convolve_linear(
            prev.grid, prev.cost, prev.activations, grid, cap, setup, f.slope, fresh, tol, cfg.cost_tol)
    else:
        cost, act, back, ops = _kernels.convolve_numpy(
            prev.grid, prev.cost, prev.activations, grid, cap,
            lambda ck: f.incremental(c_star, ck), fresh, tol, cfg.cost_tol)
    return PartialCostFunction(grid, cost, act, back, ops)


def _subset_sums(values: Sequence[float]) -> np.ndarray:
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


def _layer_grid(lo: float, hi: float, dc: float, anchors: np.ndarray, tol: float) -> np.ndarray:
    if hi - lo <= tol:
        return np.array([hi])
    m = int(np.floor((hi - lo) / dc)) + 1
    pts = lo + dc * np.arange(m)
    pts = pts[pts < hi - tol]
    anchors = anchors[(anchors >= lo - tol) & (anchors <= hi + tol)]
    pts = np.sort(np.concatenate([pts, np.clip(anchors, lo, hi), [hi]]))
    keep = np.concatenate([[True], np.diff(pts) > tol])
    pts = pts[keep]
    pts[-1] = hi
    return pts


class Route(NamedTuple):
    rates: np.ndarray  # (K,) new bandwidth per source
    cost_delta: float
    ops: int
    layers: int
    fast_path: bool


def _cycle_delta(st: NetworkState, i: int, rates: np.ndarray, costs: Sequence[CostFunction]) -> float:
    total = 0.0
    for j in np.flatnonzero(rates):
        total += float(costs[j].incremental(st.allocated[j, i], rates[j]))
    return total


def route_single_request(st: NetworkState, r: Request, costs: Sequence[CostFunction],
                         cfg: SolverConfig | None = None) -> Route:
    """Cheapest split of one request over its eligible sources.

    ``costs[j]`` is the cost function of the VPN from source j to ``r.dest``.
    Raises InfeasibleRequestError when the request cannot be placed.
    """
    cfg = cfg or SolverConfig()
    feas = feasibility_check(st, r, cfg.eps)
    if not feas:
        raise InfeasibleRequestError(r, feas.reason)
    demand = r.demand
    tol = cfg.eps * max(1.0, demand)
    elig, caps = _eligible(st, r, cfg.eps)
    # The last layer wins ties on bandwidth, so the preferred source (largest
    # cap, then lowest index) is processed last.
    order = sorted(elig, key=lambda j: (caps[j], -j))
    n = len(order)
    ocaps = [float(caps[j]) for j in order]
    rates = np.zeros(len(caps))

    if n == 1:
        rates[order[0]] = demand
        return Route(rates, _cycle_delta(st, r.dest, rates, costs), 1, 1, False)

    prefix = np.cumsum([0.0] + ocaps)
    layers = []
    layer = PartialCostFunction.base()
    ops = 0
    for k in range(n):
        if k == n - 1:
            grid = np.array([demand])
        else:
            suffix = prefix[n] - prefix[k + 1]
            lo = max(0.0, demand - suffix)
            hi = min(demand, prefix[k + 1])
            anchors = np.concatenate([_subset_sums(ocaps[: k + 1]),
                                      demand - _subset_sums(ocaps[k + 1:])])
            grid = _layer_grid(lo, hi, cfg.dc, anchors, tol)
        j = order[k]
        layer = minplus_step(layer, costs[j], ocaps[k], float(st.allocated[j, r.dest]), cfg, grid, tol)
        if k > 0:
            ops += layer.ops
        layers.append(layer)

    if layers[-1].back[0] < 0:
        raise InfeasibleRequestError(r, "no grid-representable split")

    idx = 0
    for k in range(n - 1, -1, -1):
        here = layers[k].grid[idx]
        prev_idx = int(layers[k].back[idx])
        there = layers[k - 1].grid[prev_idx] if k > 0 else 0.0
        rates[order[k]] = _snap(here - there, ocaps[k], tol)
        idx = prev_idx

    residue = demand - rates.sum()
    if residue != 0.0:
        big = int(np.argmax(rates))
        rates[big] += residue
    return Route(rates, _cycle_delta(st, r.dest, rates, costs), ops, n - 1, False)


def concave_fast_path(st: NetworkState, r: Request, costs: Sequence[CostFunction],
                      cfg: SolverConfig | None = None) -> Route | None:
    """Single-source shortcut valid when every eligible source could carry the whole request.

    For concave costs through the origin the convolution collapses to the
    pointwise minimum, so one comparison per source suffices. Returns None
    when the shortcut does not apply.
    """
    cfg = cfg or SolverConfig()
    demand = r.demand
    tol = cfg.eps * max(1.0, demand)
    elig, caps = _eligible(st, r, cfg.eps)
    if not elig or demand > min(caps[j] for j in elig) + tol:
        return None
    if demand > st.dst_residual[r.dest] + tol:
        return None
    incr = [float(costs[j].incremental(st.allocated[j, r.dest], demand)) for j in elig]
    best = min(incr)
    pick = next(j for j, v in zip(elig, incr) if v <= best + cfg.cost_tol)
    rates = np.zeros(len(caps))
    rates[pick] = demand
    return Route(rates, _cycle_delta(st, r.dest, rates, costs), len(elig), 0, True)
