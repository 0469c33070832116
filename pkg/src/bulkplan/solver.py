"""Greedy cycle loop: pick a request, route it, update the network, repeat."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .minplus import (
    InfeasibleRequestError,
    NetworkState,
    Route,
    SolverConfig,
    concave_fast_path,
    feasibility_check,
    route_single_request,
)
from .model import AllocationPlan, Scenario, check_plan_constraints
from .scheduling import get_criterion, order_static, select_dynamic


@dataclass
class CycleRecord:
    dest: int
    item: int
    served: bool
    cost_delta: float = 0.0
    ops: int = 0
    layers: int = 0
    fast_path: bool = False
    reason: str = ""


@dataclass
class SolveReport:
    plan: AllocationPlan = field(compare=False)
    scheduler: str
    num_requests: int  # Q
    cycles: list
    total_ops: int
    sched_ops: int
    infeasible: list
    wall_time: float = field(default=0.0, compare=False)

    @property
    def total_cost(self) -> float:
        return self.plan.total_cost

    @property
    def num_vpns(self) -> int:
        return self.plan.num_vpns

    def to_dict(self, include_timing: bool = True) -> dict:
        out = self.plan.to_dict()
        rep = {
            "scheduler": self.scheduler,
            "Q": self.num_requests,
            "convolution_ops": self.total_ops,
            "scheduling_ops": self.sched_ops,
            "infeasible": [{"dest": d, "item": l, "reason": why} for d, l, why in self.infeasible],
            "cycles": [
                {"dest": c.dest, "item": c.item, "served": c.served,
                 "cost_delta": round(c.cost_delta, 6), "ops": c.ops, "fast_path": c.fast_path}
                for c in self.cycles
            ],
        }
        if include_timing:
            rep["wall_time_s"] = self.wall_time
        out["report"] = rep
        return out


def apply_allocation(st: NetworkState, alloc, i: int, eps: float = 1e-9) -> NetworkState:
    """Commit one routed request to the state in place and return it."""
    alloc = np.asarray(alloc, dtype=float)
    if np.any(alloc < 0):
        raise ValueError("negative allocation")
    new_src = st.src_residual - alloc
    new_dst = st.dst_residual[i] - alloc.sum()
    new_alloc = st.allocated[:, i] + alloc
    tol_src = eps * np.maximum(1.0, st.src_initial)
    tol_dst = eps * max(1.0, st.dst_initial[i])
    tol_cap = eps * np.maximum(1.0, st.vpn_cap[:, i])
    if np.any(new_src < -tol_src) or new_dst < -tol_dst or np.any(new_alloc > st.vpn_cap[:, i] + tol_cap):
        raise RuntimeError(f"allocation to destination {i} overdraws the network")
    st.src_residual = np.maximum(new_src, 0.0)
    st.dst_residual[i] = max(new_dst, 0.0)
    st.allocated[:, i] = new_alloc
    return st


def route(st: NetworkState, r, costs, cfg: SolverConfig) -> Route:
    if cfg.fast_path:
        quick = concave_fast_path(st, r, costs, cfg)
        if quick is not None:
            return quick
    return route_single_request(st, r, costs, cfg)


def solve(s: Scenario, scheduler="n_asc", cfg: SolverConfig | None = None, costs=None) -> SolveReport:
    """Serve every request of ``s`` one per cycle in the order chosen by ``scheduler``.

    Under the ``abort`` policy an unplaceable request raises
    InfeasibleRequestError; under ``skip`` it is logged and left out of the plan.
    """
    cfg = cfg or SolverConfig()
    crit = get_criterion(scheduler)
    costs = s.cost_functions() if costs is None else costs
    t0 = time.perf_counter()

    reqs = s.request_list()
    st = NetworkState.fresh(s)
    rates = np.zeros((s.K, s.N, s.H))
    counter = {"ops": 0}
    cycles: list[CycleRecord] = []
    skipped = []
    total_ops = 0

    if crit.dynamic:
        pending = list(reqs)
        queue = None
    else:
        queue = order_static(reqs, crit, cfg.seed, counter)

    for step in range(len(reqs)):
        if queue is not None:
            r = queue[step]
        else:
            r = select_dynamic(pending, st, s, crit, counter)
            pending.remove(r)
        dest_costs = [costs[j][r.dest] for j in range(s.K)]
        feas = feasibility_check(st, r, cfg.eps)
        if not feas:
            if cfg.policy == "abort":
                raise InfeasibleRequestError(r, feas.reason)
            skipped.append((r.dest, r.item, feas.reason))
            cycles.append(CycleRecord(r.dest, r.item, False, reason=feas.reason))
            continue
        rt = route(st, r, dest_costs, cfg)
        apply_allocation(st, rt.rates, r.dest, cfg.eps)
        rates[:, r.dest, r.item] = rt.rates
        total_ops += rt.ops
        cycles.append(CycleRecord(r.dest, r.item, True, rt.cost_delta,
                                  rt.ops if cfg.count_ops else 0, rt.layers, rt.fast_path))

    served = s.without_requests((d, l) for d, l, _ in skipped) if skipped else s
    plan = AllocationPlan.from_rates(served, rates, costs)
    bad = check_plan_constraints(served, plan, cfg.eps)
    if bad:
        raise RuntimeError("solver produced an invalid plan: " + "; ".join(map(str, bad[:5])))

    return SolveReport(
        plan=plan,
        scheduler=crit.name,
        num_requests=len(reqs),
        cycles=cycles if cfg.keep_log else [],
        total_ops=total_ops if cfg.count_ops else 0,
        sched_ops=counter["ops"],
        infeasible=skipped,
        wall_time=time.perf_counter() - t0,
    )


def op_bound(s: Scenario, cfg: SolverConfig | None = None) -> float:
    """K * Z^2 with Z the largest request demand measured in grid steps."""
    cfg = cfg or SolverConfig()
    d = s.demands()
    z = float(d.max()) / cfg.dc if d.size else 0.0
    return s.K * z * z


def op_bound_check(report: SolveReport, s: Scenario, cfg: SolverConfig | None = None) -> list[tuple[int, int, bool]]:
    """Per served cycle: (cycle index, ops, within bound)."""
    bound = op_bound(s, cfg)
    return [(k, c.ops, c.ops <= bound) for k, c in enumerate(report.cycles) if c.served]
