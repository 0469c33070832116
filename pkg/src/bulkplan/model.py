"""Problem data, constraint checking and cost evaluation.

Units are fixed throughout the package: bandwidth in Mb/s, time in seconds,
data volume in Mbit. Item sizes arrive in (decimal) GB and are converted
with ``GB_TO_MBIT``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

GB_TO_MBIT = 8000.0
EPS = 1e-9


def _tol(x: float, eps: float = EPS) -> float:
    return eps * max(1.0, abs(x))


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CostFunction:
    """VPN cost: zero when idle, ``setup + variable(c)`` once any bandwidth is bought.

    ``variable`` defaults to the linear family ``slope * c``. A custom callable
    must be concave, non-decreasing, zero at zero and accept numpy arrays.
    """

    setup: float
    slope: float = 0.0
    variable: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def is_linear(self) -> bool:
        return self.variable is None

    def g(self, c):
        if self.variable is None:
            return self.slope * np.asarray(c, dtype=float)
        return self.variable(np.asarray(c, dtype=float))

    def __call__(self, c: float) -> float:
        return vpn_cost(self, c)

    def incremental(self, c_star: float, c):
        """Extra cost of adding ``c`` on top of an allocation ``c_star``."""
        c = np.asarray(c, dtype=float)
        if c_star > 0:
            out = self.g(c_star + c) - float(self.g(c_star))
        else:
            out = np.where(c > 0, self.setup + self.g(c), 0.0)
        return np.where(c > 0, out, 0.0)


def vpn_cost(f: CostFunction, c: float) -> float:
    if c < 0:
        raise ValueError(f"bandwidth must be non-negative, got {c}")
    if c == 0:
        return 0.0
    return float(f.setup + f.g(c))


class Request(NamedTuple):
    dest: int
    item: int
    size: float  # Mbit
    deadline: float  # s
    sources: tuple  # sources storing the item

    @property
    def demand(self) -> float:
        return self.size / self.deadline


@dataclass(frozen=True, eq=False)
class Scenario:
    item_sizes: np.ndarray  # (H,) Mbit
    dest_access: np.ndarray  # (N,) Mb/s
    src_access: np.ndarray  # (K,) Mb/s
    vpn_cap: np.ndarray  # (K, N) Mb/s
    deadlines: np.ndarray  # (N, H) s, 0 where nothing is requested
    requests: np.ndarray  # (N, H) u
    presence: np.ndarray  # (K, H) v
    cost_setup: np.ndarray  # (K, N)
    cost_slope: np.ndarray  # (K, N)

    def __post_init__(self):
        for name in ("item_sizes", "dest_access", "src_access", "vpn_cap",
                     "deadlines", "cost_setup", "cost_slope"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("requests", "presence"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=np.int64))
        K, N, H = self.K, self.N, self.H
        expected = {
            "dest_access": (N,), "src_access": (K,), "vpn_cap": (K, N),
            "deadlines": (N, H), "requests": (N, H), "presence": (K, H),
            "cost_setup": (K, N), "cost_slope": (K, N),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def K(self) -> int:
        return len(self.src_access)

    @property
    def N(self) -> int:
        return len(self.dest_access)

    @property
    def H(self) -> int:
        return len(self.item_sizes)

    @property
    def num_requests(self) -> int:
        return int(self.requests.sum())

    def request_list(self) -> list[Request]:
        """All requests ordered by (destination, item)."""
        out = []
        for i, l in zip(*np.nonzero(self.requests)):
            srcs = tuple(int(j) for j in np.flatnonzero(self.presence[:, l]))
            out.append(Request(int(i), int(l), float(self.item_sizes[l]),
                               float(self.deadlines[i, l]), srcs))
        return out

    def demands(self) -> np.ndarray:
        """Requested bandwidth per (i, l), zero where u_il = 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(self.requests > 0, self.item_sizes[None, :] / self.deadlines, 0.0)
        return d

    def cost_function(self, j: int, i: int) -> CostFunction:
        return CostFunction(float(self.cost_setup[j, i]), float(self.cost_slope[j, i]))

    def cost_functions(self) -> list[list[CostFunction]]:
        return [[self.cost_function(j, i) for i in range(self.N)] for j in range(self.K)]

    def replace(self, **changes) -> "Scenario":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return Scenario(**fields)

    def without_requests(self, pairs: Iterable[tuple[int, int]]) -> "Scenario":
        u = np.array(self.requests)
        tau = np.array(self.deadlines)
        for i, l in pairs:
            u[i, l] = 0
            tau[i, l] = 0.0
        return self.replace(requests=u, deadlines=tau)

    # serialization

    def to_dict(self) -> dict:
        reqs = [
            {"dest": r.dest, "item": r.item, "deadline_s": r.deadline}
            for r in self.request_list()
        ]
        return {
            "sources": [{"access_mbps": float(x)} for x in self.src_access],
            "destinations": [{"access_mbps": float(x)} for x in self.dest_access],
            "items": [{"size_gb": float(x) / GB_TO_MBIT} for x in self.item_sizes],
            "presence": self.presence.tolist(),
            "requests": reqs,
            "vpn_cap_mbps": self.vpn_cap.tolist(),
            "cost": [
                [{"a": float(self.cost_setup[j, i]), "b": float(self.cost_slope[j, i])}
                 for i in range(self.N)]
                for j in range(self.K)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            src = [float(x["access_mbps"]) for x in d["sources"]]
            dst = [float(x["access_mbps"]) for x in d["destinations"]]
            sizes = [float(x["size_gb"]) * GB_TO_MBIT for x in d["items"]]
            K, N, H = len(src), len(dst), len(sizes)
            u = np.zeros((N, H), dtype=np.int64)
            tau = np.zeros((N, H))
            for r in d["requests"]:
                i, l = int(r["dest"]), int(r["item"])
                if u[i, l]:
                    raise ValueError(f"duplicate request for destination {i}, item {l}")
                u[i, l] = 1
                tau[i, l] = float(r["deadline_s"])
            cost = d["cost"]
            a = [[float(cost[j][i]["a"]) for i in range(N)] for j in range(K)]
            b = [[float(cost[j][i]["b"]) for i in range(N)] for j in range(K)]
            return cls(
                item_sizes=sizes, dest_access=dst, src_access=src,
                vpn_cap=d["vpn_cap_mbps"], deadlines=tau, requests=u,
                presence=d["presence"], cost_setup=a, cost_slope=b,
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ValueError(f"malformed scenario: {exc!r}") from exc


class Issue(NamedTuple):
    rule: str
    index: tuple


def validate_scenario(s: Scenario) -> list[Issue]:
    """Every violated input invariant; an empty list means the scenario is valid."""
    issues: list[Issue] = []

    def positive(name, arr):
        for idx in zip(*np.nonzero(~(arr > 0))):
            issues.append(Issue(f"non-positive {name}", tuple(int(x) for x in idx)))

    positive("item size", s.item_sizes)
    positive("destination access", s.dest_access)
    positive("source access", s.src_access)
    positive("vpn cap", s.vpn_cap)
    for name, arr in (("request matrix", s.requests), ("presence matrix", s.presence)):
        for idx in zip(*np.nonzero((arr != 0) & (arr != 1))):
            issues.append(Issue(f"non-binary {name}", tuple(int(x) for x in idx)))
    for name, arr in (("setup cost", s.cost_setup), ("cost slope", s.cost_slope)):
        for idx in zip(*np.nonzero(arr < 0)):
            issues.append(Issue(f"negative {name}", tuple(int(x) for x in idx)))

    for i, l in zip(*np.nonzero(s.requests)):
        i, l = int(i), int(l)
        tau = s.deadlines[i, l]
        if not tau > 0:
            issues.append(Issue("non-positive deadline", (i, l)))
        elif tau * s.dest_access[i] < s.item_sizes[l] * (1 - EPS):
            issues.append(Issue("deadline below access-link lower bound", (i, l)))
        if s.presence[:, l].sum() < 1:
            issues.append(Issue("requested item without source", (i, l)))
    return issues


@dataclass(frozen=True, eq=False)
class AllocationPlan:
    rates: np.ndarray  # c_jil, (K, N, H)
    fragments: np.ndarray  # D_jil, (K, N, H)
    total_cost: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rates", _frozen(self.rates))
        object.__setattr__(self, "fragments", _frozen(self.fragments))
        if self.rates.shape != self.fragments.shape or self.rates.ndim != 3:
            raise ValueError("rates and fragments must both be (K, N, H) arrays")

    @property
    def vpn_rates(self) -> np.ndarray:
        return self.rates.sum(axis=2)

    @property
    def num_vpns(self) -> int:
        return int(np.count_nonzero(self.vpn_rates > 0))

    @classmethod
    def zeros(cls, s: Scenario) -> "AllocationPlan":
        z = np.zeros((s.K, s.N, s.H))
        return cls(z, z, 0.0)

    @classmethod
    def from_rates(cls, s: Scenario, rates, costs=None) -> "AllocationPlan":
        rates = np.asarray(rates, dtype=float)
        frags = fragment_sizes(s, rates)
        return cls(rates, frags, total_cost(s, rates, costs))

    def to_dict(self) -> dict:
        allocs = []
        for j, i, l in zip(*np.nonzero(self.rates)):
            allocs.append({
                "src": int(j), "dest": int(i), "item": int(l),
                "mbps": float(self.rates[j, i, l]),
                "fragment_mbit": float(self.fragments[j, i, l]),
            })
        return {
            "allocations": allocs,
            "total_cost": round(float(self.total_cost), 6),
            "num_vpns": self.num_vpns,
        }

    @classmethod
    def from_dict(cls, d: dict, s: Scenario) -> "AllocationPlan":
        rates = np.zeros((s.K, s.N, s.H))
        frags = np.zeros((s.K, s.N, s.H))
        for a in d["allocations"]:
            rates[a["src"], a["dest"], a["item"]] = a["mbps"]
            frags[a["src"], a["dest"], a["item"]] = a["fragment_mbit"]
        return cls(rates, frags, float(d.get("total_cost", 0.0)))


class Violation(NamedTuple):
    constraint: int  # 1..7, see check_plan_constraints
    index: tuple
    detail: str

    def __str__(self):
        return f"constraint ({self.constraint}) {self.detail}"


def _check_shape(s: Scenario, arr: np.ndarray, what: str):
    if arr.shape != (s.K, s.N, s.H):
        raise ValueError(f"{what} shape {arr.shape} does not match scenario {(s.K, s.N, s.H)}")


def check_plan_constraints(s: Scenario, p: AllocationPlan, eps: float = EPS) -> list[Violation]:
    """All violated plan constraints, numbered as follows.

    1. source access: total rate leaving source j is at most C_j^M
    2. destination access: total rate entering destination i is at most C_i^T
    3. integrity: fragments of every requested item add up to its size
    4. deadline: each fragment fits in tau_il at its rate
    5. VPN cap: rate on pair (j, i) is at most its cap
    6. rate bounds: rates are non-negative and zero unless j stores l and i requests it
    7. fragment bounds: likewise for fragment volumes

    Each check uses a relative tolerance ``eps``.
    """
    c, D = p.rates, p.fragments
    _check_shape(s, c, "plan")
    out: list[Violation] = []
    cji = c.sum(axis=2)
    u = s.requests
    v = s.presence

    for j, tot in enumerate(cji.sum(axis=1)):
        if tot > s.src_access[j] + _tol(s.src_access[j], eps):
            out.append(Violation(1, (j,), f"source {j}: {tot:.6f} > {s.src_access[j]:.6f}"))
    for i, tot in enumerate(cji.sum(axis=0)):
        if tot > s.dest_access[i] + _tol(s.dest_access[i], eps):
            out.append(Violation(2, (i,), f"destination {i}: {tot:.6f} > {s.dest_access[i]:.6f}"))

    got = D.sum(axis=0)
    want = s.item_sizes[None, :] * u
    for i, l in zip(*np.nonzero(np.abs(got - want) > eps * np.maximum(1.0, want))):
        out.append(Violation(3, (int(i), int(l)),
                             f"integrity, destination {i} item {l}: {got[i, l]:.6f} != {want[i, l]:.6f}"))

    cap_D = s.deadlines[None, :, :] * c
    bad4 = (u[None, :, :] > 0) & (D > cap_D + eps * np.maximum(1.0, cap_D))
    for j, i, l in zip(*np.nonzero(bad4)):
        out.append(Violation(4, (int(j), int(i), int(l)), f"deadline, triple ({j},{i},{l})"))

    for j, i in zip(*np.nonzero(cji > s.vpn_cap + eps * np.maximum(1.0, s.vpn_cap))):
        out.append(Violation(5, (int(j), int(i)), f"vpn cap, pair ({j},{i})"))

    allowed = v[:, None, :] * u[None, :, :]
    ub6 = allowed * s.vpn_cap[:, :, None]
    bad6 = (c < 0) | (c > ub6 + eps * np.maximum(1.0, ub6))
    for j, i, l in zip(*np.nonzero(bad6)):
        out.append(Violation(6, (int(j), int(i), int(l)), f"rate bounds, triple ({j},{i},{l})"))

    ub7 = allowed * s.item_sizes[None, None, :]
    bad7 = (D < 0) | (D > ub7 + eps * np.maximum(1.0, ub7))
    for j, i, l in zip(*np.nonzero(bad7)):
        out.append(Violation(7, (int(j), int(i), int(l)), f"fragment bounds, triple ({j},{i},{l})"))
    return out


def _cost_grid(s: Scenario, costs) -> Sequence[Sequence[CostFunction]]:
    return s.cost_functions() if costs is None else costs


def total_cost(s: Scenario, p, costs=None) -> float:
    """Sum of VPN costs at the per-pair bandwidths implied by ``p``.

    ``p`` is an AllocationPlan or a raw (K, N, H) rate array.
    """
    rates = p.rates if isinstance(p, AllocationPlan) else np.asarray(p, dtype=float)
    _check_shape(s, rates, "plan")
    cji = rates.sum(axis=2)
    if costs is None:
        active = cji > 0
        return float(np.sum(np.where(active, s.cost_setup + s.cost_slope * cji, 0.0)))
    fs = _cost_grid(s, costs)
    return float(sum(vpn_cost(fs[j][i], cji[j, i]) for j in range(s.K) for i in range(s.N)))


def fragment_sizes(s: Scenario, p, eps: float = EPS) -> np.ndarray:
    """Fragment volumes that finish exactly at each deadline.

    The rounding residue of each request goes to its largest fragment so the
    fragments add up to the item size exactly.
    """
    rates = p.rates if isinstance(p, AllocationPlan) else np.asarray(p, dtype=float)
    _check_shape(s, rates, "plan")
    D = s.deadlines[None, :, :] * rates
    for i, l in zip(*np.nonzero(s.requests)):
        want = s.item_sizes[l] / s.deadlines[i, l]
        got = rates[:, i, l].sum()
        if abs(got - want) > eps * max(1.0, want):
            raise ValueError(f"request ({i},{l}) receives {got!r} Mb/s, needs {want!r}")
        residue = s.item_sizes[l] - D[:, i, l].sum()
        D[int(np.argmax(D[:, i, l])), i, l] += residue
    unrequested = s.requests[None, :, :] == 0
    D[np.broadcast_to(unrequested, D.shape)] = 0.0
    return D


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
