"""Scenario generators and the Monte-Carlo scheduler benchmark."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .minplus import InfeasibleRequestError, SolverConfig
from .model import GB_TO_MBIT, Scenario
from .scheduling import get_criterion
from .solver import solve

HOUR = 3600.0


@dataclass
class HomogeneousParams:
    K: int = 4
    N: int = 20
    H: int = 16
    size_gb: float = 200.0
    src_mbps: float = 1000.0
    dst_mbps: float = 150.0
    vpn_mbps: float = 150.0
    tau_h: float = 3.0
    a: float = 1.0
    b: float = 0.01

    def __post_init__(self):
        for name in ("K", "N", "H"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive count")
        for name in ("size_gb", "src_mbps", "dst_mbps", "vpn_mbps", "tau_h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class HeterogeneousParams:
    K: int = 4
    N: int = 20
    H: int = 40
    size_gb: tuple = (130.0, 270.0)
    copies: int = 3
    per_dest: int = 2
    tau_h: tuple = (6, 12)
    src_mbps: float = 1000.0
    dst_mbps: float = 150.0
    vpn_mbps: float = 150.0
    cheap: tuple = (1.0, 0.01)
    expensive: tuple = (3.0, 0.03)

    def __post_init__(self):
        if not 1 <= self.copies <= self.K:
            raise ValueError("copies must lie in [1, K]")
        if not 1 <= self.per_dest <= self.H:
            raise ValueError("per_dest must lie in [1, H]")


def gen_homogeneous(params: HomogeneousParams | None = None, seed: int = 0) -> Scenario:
    p = params or HomogeneousParams()
    rng = np.random.default_rng(seed)
    u = np.zeros((p.N, p.H), dtype=np.int64)
    u[np.arange(p.N), rng.integers(0, p.H, size=p.N)] = 1
    tau = np.where(u > 0, p.tau_h * HOUR, 0.0)
    return Scenario(
        item_sizes=np.full(p.H, p.size_gb * GB_TO_MBIT),
        dest_access=np.full(p.N, p.dst_mbps),
        src_access=np.full(p.K, p.src_mbps),
        vpn_cap=np.full((p.K, p.N), p.vpn_mbps),
        deadlines=tau,
        requests=u,
        presence=np.ones((p.K, p.H), dtype=np.int64),
        cost_setup=np.full((p.K, p.N), p.a),
        cost_slope=np.full((p.K, p.N), p.b),
    )


@dataclass
class Catalogue:
    sizes: np.ndarray  # Mbit
    presence: np.ndarray  # (K, H)


def make_catalogue(p: HeterogeneousParams, rng) -> Catalogue:
    sizes = rng.uniform(*p.size_gb, size=p.H) * GB_TO_MBIT
    presence = np.zeros((p.K, p.H), dtype=np.int64)
    for l in range(p.H):
        presence[rng.choice(p.K, size=p.copies, replace=False), l] = 1
    return Catalogue(sizes, presence)


def draw_demand(p: HeterogeneousParams, rng) -> tuple[np.ndarray, np.ndarray]:
    """Each destination asks for ``per_dest`` distinct items sharing one integer-hour deadline."""
    u = np.zeros((p.N, p.H), dtype=np.int64)
    tau = np.zeros((p.N, p.H))
    for i in range(p.N):
        items = rng.choice(p.H, size=p.per_dest, replace=False)
        hours = rng.integers(p.tau_h[0], p.tau_h[1] + 1)
        u[i, items] = 1
        tau[i, items] = hours * HOUR
    return u, tau


def cost_matrix(variant: int, p: HeterogeneousParams) -> tuple[np.ndarray, np.ndarray]:
    if variant not in (1, 2, 3):
        raise ValueError(f"cost variant must be 1, 2 or 3, got {variant!r}")
    expensive = np.zeros((p.K, p.N), dtype=bool)
    if variant == 2:
        expensive[0, :] = True
    elif variant == 3:
        src_group = np.arange(p.K) >= p.K // 2
        dst_group = np.arange(p.N) >= p.N // 2
        expensive = src_group[:, None] != dst_group[None, :]
    a = np.where(expensive, p.expensive[0], p.cheap[0])
    b = np.where(expensive, p.expensive[1], p.cheap[1])
    return a, b


def _streams(seed: int):
    cat = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    return cat, (lambda k: np.random.default_rng(np.random.SeedSequence([seed, 1, k])))


def heterogeneous_from(variant: int, p: HeterogeneousParams, cat: Catalogue, u, tau) -> Scenario:
    a, b = cost_matrix(variant, p)
    return Scenario(
        item_sizes=cat.sizes,
        dest_access=np.full(p.N, p.dst_mbps),
        src_access=np.full(p.K, p.src_mbps),
        vpn_cap=np.full((p.K, p.N), p.vpn_mbps),
        deadlines=tau,
        requests=u,
        presence=cat.presence,
        cost_setup=a,
        cost_slope=b,
    )


def _feasible_draw(variant, p, cat, rng, max_draws):
    """First demand draw from ``rng`` admitting a plan, and how many were rejected before it."""
    from .oracle import is_feasible

    for rejected in range(max_draws):
        u, tau = draw_demand(p, rng)
        s = heterogeneous_from(variant, p, cat, u, tau)
        if is_feasible(s):
            return s, rejected
    return None, max_draws


def gen_heterogeneous(variant: int, seed: int = 0, params: HeterogeneousParams | None = None,
                      sample: int = 0, feasible: bool = True, max_draws: int = 1000) -> Scenario:
    """Heterogeneous scenario equal to sample ``sample`` of ``monte_carlo`` with the same seed.

    With ``feasible`` (the default) demand is redrawn until every request can be
    met simultaneously; otherwise the first raw draw is returned as is.
    """
    p = params or HeterogeneousParams()
    cost_matrix(variant, p)
    cat_rng, sample_rng = _streams(seed)
    cat = make_catalogue(p, cat_rng)
    rng = sample_rng(sample)
    if not feasible:
        return heterogeneous_from(variant, p, cat, *draw_demand(p, rng))
    s, _ = _feasible_draw(variant, p, cat, rng, max_draws)
    if s is None:
        raise ValueError(f"no feasible demand within {max_draws} draws")
    return s


def cdf_estimate(samples) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CDF as (distinct sorted values, P(X <= value))."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("cdf of an empty sample")
    vals, counts = np.unique(x, return_counts=True)
    return vals, np.cumsum(counts) / x.size


@dataclass
class BenchStats:
    variant: int
    schedulers: list
    costs: dict  # name -> (n_samples,) array, NaN where MPH failed
    vpns: dict
    n_samples: int  # feasible samples evaluated
    n_infeasible: int  # draws rejected as infeasible
    failures: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.n_samples + self.n_infeasible

    def _ok(self, name):
        c = self.costs[name]
        return c[np.isfinite(c)]

    def cdf(self, name):
        return cdf_estimate(self._ok(name))

    def mean_cost(self, name) -> float:
        return float(np.mean(self._ok(name)))

    def std_cost(self, name) -> float:
        c = self._ok(name)
        return float(np.std(c, ddof=1)) if c.size > 1 else 0.0

    def cv(self, name) -> float:
        m = self.mean_cost(name)
        return self.std_cost(name) / m if m > 0 else 0.0

    def mean_vpns(self, name) -> float:
        v = self.vpns[name]
        return float(np.mean(v[np.isfinite(v)]))

    def _paired(self, a, b):
        ca, cb = self.costs[a], self.costs[b]
        both = np.isfinite(ca) & np.isfinite(cb)
        return ca[both], cb[both]

    def win_rate(self, a, b, tol: float = 1e-9) -> float:
        """Share of samples where ``a`` is strictly cheaper than ``b``."""
        ca, cb = self._paired(a, b)
        return float(np.mean(ca < cb - tol)) if ca.size else float("nan")

    def tie_rate(self, a, b, tol: float = 1e-9) -> float:
        ca, cb = self._paired(a, b)
        return float(np.mean(np.abs(ca - cb) <= tol)) if ca.size else float("nan")

    def mean_gain(self, a, ref="rand") -> tuple[float, float]:
        """Mean relative (cost, vpn count) reduction of ``a`` against ``ref``."""
        ca, cr = self._paired(a, ref)
        va, vr = self.vpns[a], self.vpns[ref]
        both = np.isfinite(va) & np.isfinite(vr)
        return float(np.mean((cr - ca) / cr)), float(np.mean((vr[both] - va[both]) / vr[both]))

    def summary_rows(self):
        rows = []
        for name in self.schedulers:
            win = self.win_rate(name, "rand") if "rand" in self.costs else float("nan")
            rows.append({
                "scheduler": name,
                "mean_cost": self.mean_cost(name),
                "cv": self.cv(name),
                "mean_vpns": self.mean_vpns(name),
                "win_rate_vs_rand": win,
            })
        return rows

    def write_csv(self, out_dir) -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        cdf_path = os.path.join(out_dir, f"cdf_het{self.variant}.csv")
        sum_path = os.path.join(out_dir, f"summary_het{self.variant}.csv")
        with open(cdf_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scheduler", "cost", "prob"])
            for name in self.schedulers:
                vals, probs = self.cdf(name)
                for v, pr in zip(vals, probs):
                    w.writerow([name, f"{v:.6f}", f"{pr:.6f}"])
        with open(sum_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scheduler", "mean_cost", "cv", "mean_vpns", "win_rate_vs_rand"])
            for row in self.summary_rows():
                w.writerow([row["scheduler"], f"{row['mean_cost']:.6f}", f"{row['cv']:.6f}",
                            f"{row['mean_vpns']:.6f}", f"{row['win_rate_vs_rand']:.6f}"])
        return cdf_path, sum_path


def monte_carlo(variant: int, n_samples: int, schedulers, cfg: SolverConfig | None = None,
                seed: int = 0, params: HeterogeneousParams | None = None,
                resample: bool = True, max_draws: int = 1000) -> BenchStats:
    """Solve ``n_samples`` demand draws over one fixed catalogue with every scheduler.

    A draw with no feasible allocation at all is tallied in ``n_infeasible``;
    with ``resample`` it is replaced by a fresh draw from the same per-sample
    stream, otherwise it is dropped. A scheduler failing on a feasible draw is
    recorded as a failure (NaN cost).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    p = params or HeterogeneousParams()
    cfg = cfg or SolverConfig(keep_log=False)
    names = [get_criterion(s).name for s in schedulers]
    cat_rng, sample_rng = _streams(seed)
    cat = make_catalogue(p, cat_rng)

    costs = {n: [] for n in names}
    vpns = {n: [] for n in names}
    failures = {n: 0 for n in names}
    infeasible = 0
    for k in range(n_samples):
        s, rejected = _feasible_draw(variant, p, cat, sample_rng(k), max_draws if resample else 1)
        infeasible += rejected
        if s is None:
            continue
        sample_cfg = replace(cfg, seed=cfg.seed + k)
        for name in names:
            try:
                rep = solve(s, name, sample_cfg)
            except InfeasibleRequestError:
                failures[name] += 1
                costs[name].append(np.nan)
                vpns[name].append(np.nan)
                continue
            costs[name].append(rep.total_cost)
            vpns[name].append(rep.num_vpns)

    n_done = len(costs[names[0]]) if names else 0
    return BenchStats(
        variant=variant,
        schedulers=names,
        costs={n: np.array(v, dtype=float) for n, v in costs.items()},
        vpns={n: np.array(v, dtype=float) for n, v in vpns.items()},
        n_samples=n_done,
        n_infeasible=infeasible,
        failures=failures,
    )
