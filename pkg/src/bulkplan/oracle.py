"""Ground truth: exhaustive lattice search, the closed-form homogeneous optimum,
search-space size estimates and an exact feasibility test (max-flow)."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .model import EPS, AllocationPlan, Scenario, fragment_sizes, vpn_cost


class BudgetExceeded(Exception):
    def __init__(self, estimate: float, log10_configurations: float):
        super().__init__(
            f"search space of ~{estimate:.3g} nodes exceeds the budget "
            f"(full joint problem ~10^{log10_configurations:.0f} configurations)")
        self.estimate = estimate
        self.log10_configurations = log10_configurations


@dataclass
class OracleResult:
    cost: float
    plan: AllocationPlan | None
    num_optimal: int
    min_vpns: int
    nodes: int

    @property
    def feasible(self) -> bool:
        return self.plan is not None


def request_lattice(demand: float, caps: dict, dc: float, eps: float = EPS) -> list[dict]:
    """Splits of ``demand`` over sources with per-source caps ``caps``.

    Every source takes a multiple of ``dc``, its cap, or the whole demand,
    except at most one source which absorbs the remainder.
    """
    tol = eps * max(1.0, demand)
    srcs = sorted(j for j, c in caps.items() if c > tol)
    values = {}
    for j in srcs:
        top = min(caps[j], demand)
        v = set(dc * np.arange(int(math.floor(top / dc + 1e-9)) + 1))
        v.add(top)
        values[j] = sorted(x for x in v if x <= top + tol)
    seen = {}
    for free in srcs:
        others = [j for j in srcs if j != free]
        for combo in itertools.product(*(values[j] for j in others)):
            rem = demand - sum(combo)
            if rem < -tol or rem > caps[free] + tol:
                continue
            rem = min(max(rem, 0.0), caps[free])
            alloc = dict(zip(others, combo))
            alloc[free] = 0.0 if rem <= tol else rem
            key = tuple(round(alloc[j] / tol) for j in srcs)
            seen.setdefault(key, {j: v for j, v in alloc.items() if v > 0})
    return [seen[k] for k in sorted(seen)]


def exhaustive_search(s: Scenario, dc: float = 1.0, budget: float = 1e8, costs=None,
                      eps: float = EPS, cost_tol: float = 1e-9) -> OracleResult:
    """Global minimum of the total VPN cost over the joint allocation lattice.

    Depth-first over requests with pruning on the running cost (costs are
    non-decreasing, so a partial plan dearer than the incumbent cannot improve).
    """
    fs = s.cost_functions() if costs is None else costs
    reqs = s.request_list()
    lattices = []
    for r in reqs:
        caps = {j: float(min(s.vpn_cap[j, r.dest], s.src_access[j], s.dest_access[r.dest]))
                for j in r.sources}
        lattices.append(request_lattice(r.demand, caps, dc, eps))
    estimate = float(np.prod([max(len(L), 1) for L in lattices], dtype=float))
    if estimate > budget:
        raise BudgetExceeded(estimate, search_space_size(s, dc))

    K, N = s.K, s.N
    src_used = [0.0] * K
    dst_used = [0.0] * N
    vpn = [[0.0] * N for _ in range(K)]
    chosen = [None] * len(reqs)
    best = {"cost": math.inf, "count": 0, "vpns": 0, "pick": None}
    nodes = 0

    def cost_of(j, i, c):
        return vpn_cost(fs[j][i], c)

    def dfs(k, cost):
        nonlocal nodes
        if k == len(reqs):
            n_vpn = sum(1 for j in range(K) for i in range(N) if vpn[j][i] > 0)
            if cost < best["cost"] - cost_tol:
                best.update(cost=cost, count=1, vpns=n_vpn, pick=list(chosen))
            elif cost <= best["cost"] + cost_tol:
                best["count"] += 1
                if n_vpn < best["vpns"]:
                    best.update(vpns=n_vpn, pick=list(chosen))
            return
        r = reqs[k]
        i = r.dest
        demand = r.demand
        if dst_used[i] + demand > s.dest_access[i] + eps * max(1.0, s.dest_access[i]):
            return
        for alloc in lattices[k]:
            nodes += 1
            ok = True
            delta = 0.0
            for j, c in alloc.items():
                if (src_used[j] + c > s.src_access[j] + eps * max(1.0, s.src_access[j])
                        or vpn[j][i] + c > s.vpn_cap[j, i] + eps * max(1.0, s.vpn_cap[j, i])):
                    ok = False
                    break
                delta += cost_of(j, i, vpn[j][i] + c) - cost_of(j, i, vpn[j][i])
            if not ok or cost + delta > best["cost"] + cost_tol:
                continue
            for j, c in alloc.items():
                src_used[j] += c
                vpn[j][i] += c
            dst_used[i] += demand
            chosen[k] = alloc
            dfs(k + 1, cost + delta)
            dst_used[i] -= demand
            for j, c in alloc.items():
                src_used[j] -= c
                vpn[j][i] -= c

    dfs(0, 0.0)
    if best["pick"] is None:
        return OracleResult(math.inf, None, 0, 0, nodes)
    rates = np.zeros((s.K, s.N, s.H))
    for r, alloc in zip(reqs, best["pick"]):
        for j, c in alloc.items():
            rates[j, r.dest, r.item] = c
    plan = AllocationPlan(rates, fragment_sizes(s, rates), best["cost"])
    return OracleResult(best["cost"], plan, best["count"], best["vpns"], nodes)


def homogeneous_optimum(K, N, src_mbps, dst_mbps, vpn_mbps, size, tau, a, b):
    """(VPN count, cost) of the optimal plan for the identical-request family, or None if infeasible.

    ``size`` in Mbit and ``tau`` in seconds; one request per destination.
    """
    demand = size / tau
    tol = EPS * max(1.0, demand)
    if demand > min(vpn_mbps, dst_mbps) + tol or K * src_mbps < N * demand - EPS * max(1.0, N * demand):
        return None
    per_src = int(math.floor(src_mbps / demand + 1e-9))
    if K * per_src >= N:
        n_vpn = N
    else:
        left = N - K * per_src
        residual = [src_mbps - per_src * demand] * K
        n_vpn = K * per_src
        for _ in range(left):
            need = demand
            while need > tol:
                j = max(range(K), key=lambda x: (residual[x], -x))
                if residual[j] <= tol:
                    return None
                take = min(residual[j], need)
                residual[j] -= take
                need -= take
                n_vpn += 1
    return n_vpn, a * n_vpn + b * N * demand


def homogeneous_optimum_for(s: Scenario):
    """Closed-form optimum of a scenario that must belong to the homogeneous family."""
    reqs = s.request_list()
    checks = [
        np.all(s.src_access == s.src_access[0]),
        np.all(s.dest_access == s.dest_access[0]),
        np.all(s.vpn_cap == s.vpn_cap.flat[0]),
        np.all(s.cost_setup == s.cost_setup.flat[0]),
        np.all(s.cost_slope == s.cost_slope.flat[0]),
        np.all(s.presence == 1),
        np.all(s.requests.sum(axis=1) == 1),
        len({(r.size, r.deadline) for r in reqs}) == 1,
    ]
    if not all(checks):
        raise ValueError("scenario is not homogeneous")
    r = reqs[0]
    return homogeneous_optimum(s.K, s.N, s.src_access[0], s.dest_access[0], s.vpn_cap[0, 0],
                               r.size, r.deadline, s.cost_setup[0, 0], s.cost_slope[0, 0])


def log10_binomial(n: float, k: float) -> float:
    if k < 0 or k > n:
        return -math.inf
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(10)


def search_space_size_params(K, src_mbps, num_requests, mean_size, mean_tau, dc=1.0) -> float:
    """log10 of the brute-force configuration count from scenario averages."""
    top = round(K * src_mbps / dc)
    if num_requests == 0:
        return 0.0
    per_request = math.ceil(mean_size / (dc * mean_tau) - 1e-9)
    return log10_binomial(top, per_request * num_requests)


def search_space_size(s: Scenario, dc: float = 1.0) -> float:
    reqs = s.request_list()
    if not reqs:
        return 0.0
    mean_size = float(np.mean([r.size for r in reqs]))
    mean_tau = float(np.mean([r.deadline for r in reqs]))
    return search_space_size_params(s.K, float(np.mean(s.src_access)), len(reqs), mean_size, mean_tau, dc)


def flow_network(s: Scenario) -> nx.DiGraph:
    g = nx.DiGraph()
    for j in range(s.K):
        g.add_edge("S", ("src", j), capacity=float(s.src_access[j]))
    for r in s.request_list():
        i, l = r.dest, r.item
        for j in r.sources:
            g.add_edge(("src", j), ("vpn", j, i), capacity=float(s.vpn_cap[j, i]))
            g.add_edge(("vpn", j, i), ("req", i, l))
        g.add_edge(("req", i, l), ("dst", i), capacity=r.demand)
        g.add_edge(("dst", i), "T", capacity=float(s.dest_access[i]))
    return g


def is_feasible(s: Scenario, eps: float = EPS) -> bool:
    """Exact test: can every request be met simultaneously (ignoring cost)?"""
    d = s.demands()
    want = float(d.sum())
    if want == 0.0:
        return True
    if np.any(d.sum(axis=1) > s.dest_access * (1 + eps)):
        return False
    value = nx.maximum_flow_value(flow_network(s), "S", "T")
    return value >= want - eps * max(1.0, want)
