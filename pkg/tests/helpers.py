"""Small scenario builders shared by the test modules."""
import numpy as np

from bulkplan.model import Scenario

HOUR = 3600.0


def build(K, N, H, *, src, dst, vpn, sizes, requests, presence=None, a=1.0, b=0.01):
    """Scenario from compact arguments.

    ``requests`` maps (dest, item) to a deadline in seconds. Scalars broadcast.
    """
    u = np.zeros((N, H), dtype=np.int64)
    tau = np.zeros((N, H))
    for (i, l), t in requests.items():
        u[i, l] = 1
        tau[i, l] = t
    return Scenario(
        item_sizes=np.broadcast_to(np.asarray(sizes, dtype=float), (H,)),
        dest_access=np.broadcast_to(np.asarray(dst, dtype=float), (N,)),
        src_access=np.broadcast_to(np.asarray(src, dtype=float), (K,)),
        vpn_cap=np.broadcast_to(np.asarray(vpn, dtype=float), (K, N)),
        deadlines=tau,
        requests=u,
        presence=np.ones((K, H), dtype=np.int64) if presence is None else presence,
        cost_setup=np.broadcast_to(np.asarray(a, dtype=float), (K, N)),
        cost_slope=np.broadcast_to(np.asarray(b, dtype=float), (K, N)),
    )


def single_request(demands_caps, demand, a, b, tau=100.0):
    """One destination, one item, K sources whose VPN caps are ``demands_caps``."""
    K = len(demands_caps)
    return build(K, 1, 1, src=1e6, dst=1e6, vpn=np.asarray(demands_caps, dtype=float)[:, None],
                 sizes=demand * tau, requests={(0, 0): tau}, a=np.asarray(a)[:, None],
                 b=np.asarray(b)[:, None])


def random_aligned(rng, dc, max_k=3, max_n=3, max_req=3, max_units=5):
    """Tiny multi-request instance whose demands and capacities are multiples of ``dc``."""
    K = int(rng.integers(1, max_k + 1))
    N = int(rng.integers(1, max_n + 1))
    Q = int(rng.integers(1, max_req + 1))
    H = Q
    tau = 100.0
    pairs = set()
    while len(pairs) < Q:
        pairs.add((int(rng.integers(N)), int(rng.integers(H))))
    demand = dc * rng.integers(1, max_units + 1, size=H)
    presence = (rng.random((K, H)) < 0.7).astype(np.int64)
    presence[rng.integers(K, size=H), np.arange(H)] = 1
    return build(
        K, N, H,
        src=dc * rng.integers(2, 2 * max_units + 1, size=K),
        dst=dc * rng.integers(max_units, 2 * max_units + 1, size=N),
        vpn=dc * rng.integers(1, max_units + 1, size=(K, N)),
        sizes=demand * tau,
        requests={p: tau for p in sorted(pairs)},
        presence=presence,
        a=rng.uniform(0.5, 3.0, size=(K, N)),
        b=rng.uniform(0.0, 0.05, size=(K, N)),
    )
