import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bulkplan import _kernels
from bulkplan.minplus import (
    InfeasibleRequestError,
    NetworkState,
    PartialCostFunction,
    SolverConfig,
    allocatable_cap,
    concave_fast_path,
    feasibility_check,
    minplus_step,
    route_single_request,
)
from bulkplan.model import CostFunction
from bulkplan.oracle import exhaustive_search
from bulkplan.scenarios import gen_homogeneous
from bulkplan.solver import apply_allocation
from helpers import build, single_request


def _req(s):
    (r,) = s.request_list()
    return r


def _costs(s, i=0):
    return [s.cost_function(j, i) for j in range(s.K)]


class TestAllocatableCap:
    def test_fresh_reference_values(self):
        st_ = NetworkState.fresh(gen_homogeneous(seed=0))
        assert allocatable_cap(st_, 0, 0) == 150.0

    def test_exhausted_pair(self):
        st_ = NetworkState.fresh(gen_homogeneous(seed=0))
        alloc = np.zeros(4)
        alloc[0] = 150.0
        apply_allocation(st_, alloc, 0)
        assert allocatable_cap(st_, 0, 0) == 0.0

    def test_source_residual_binds(self):
        s = build(1, 1, 1, src=40, dst=150, vpn=150, sizes=1e4, requests={(0, 0): 1000.0})
        assert allocatable_cap(NetworkState.fresh(s), 0, 0) == 40.0


class TestFeasibility:
    def test_boundary_demand_equal_to_access(self):
        s = build(2, 1, 1, src=1000, dst=100, vpn=150, sizes=1e5, requests={(0, 0): 1000.0})
        assert feasibility_check(NetworkState.fresh(s), _req(s)).ok

    def test_no_source(self):
        s = build(2, 1, 1, src=1000, dst=150, vpn=150, sizes=1e5, requests={(0, 0): 1000.0},
                  presence=np.zeros((2, 1), dtype=np.int64))
        assert feasibility_check(NetworkState.fresh(s), _req(s)) == (False, "no source")

    def test_caps_too_small(self):
        s = single_request([150, 150], 400.0, [1, 1], [0.01, 0.01])
        f = feasibility_check(NetworkState.fresh(s), _req(s))
        assert not f and "reachable capacity" in f.reason
        with pytest.raises(InfeasibleRequestError) as exc:
            route_single_request(NetworkState.fresh(s), _req(s), _costs(s))
        assert exc.value.request == _req(s)


class TestRouteExamples:
    def test_single_vpn_beats_split(self):
        s = single_request([150, 150], 100.0, [1, 1], [0.01, 0.01])
        rt = route_single_request(NetworkState.fresh(s), _req(s), _costs(s))
        np.testing.assert_allclose(rt.rates, [100.0, 0.0])
        assert rt.cost_delta == pytest.approx(2.0, abs=1e-12)

    def test_plateau_saturates_one_vpn(self):
        s = single_request([150, 150], 200.0, [1, 1], [0.01, 0.01])
        rt = route_single_request(NetworkState.fresh(s), _req(s), _costs(s))
        np.testing.assert_allclose(rt.rates, [150.0, 50.0])
        assert rt.cost_delta == pytest.approx(4.0, abs=1e-12)

    def test_single_eligible_source(self):
        s = single_request([150, 150], 80.0, [1, 1], [0.01, 0.01])
        s = s.replace(presence=np.array([[0], [1]]))
        rt = route_single_request(NetworkState.fresh(s), _req(s), _costs(s))
        np.testing.assert_allclose(rt.rates, [0.0, 80.0])
        assert rt.ops == 1 and rt.layers == 1

    def test_existing_vpn_is_reused(self):
        # 50 Mb/s already flow on source 2, so extending it avoids a new setup fee
        s = single_request([150, 150, 150], 100.0, [1, 1, 1], [0.01, 0.01, 0.01])
        st_ = NetworkState.fresh(s)
        st_.allocated[2, 0] = 50.0
        rt = route_single_request(st_, _req(s), _costs(s))
        np.testing.assert_allclose(rt.rates, [0, 0, 100.0])
        assert rt.cost_delta == pytest.approx(1.0)

    def test_matches_oracle_on_uneven_caps(self):
        s = single_request([37.5, 81.25, 23.0], 120.0, [1.0, 2.5, 0.5], [0.02, 0.001, 0.04])
        rt = route_single_request(NetworkState.fresh(s), _req(s), _costs(s), SolverConfig(dc=10.0))
        ref = exhaustive_search(s, dc=10.0)
        assert rt.cost_delta == pytest.approx(ref.cost, abs=1e-9)
        assert rt.rates.sum() == pytest.approx(120.0, abs=1e-12)

    def test_custom_concave_cost(self):
        s = single_request([100, 100], 120.0, [1, 1], [0, 0])
        costs = [CostFunction(1.0, variable=np.sqrt), CostFunction(1.0, variable=lambda c: 2 * np.sqrt(c))]
        rt = route_single_request(NetworkState.fresh(s), _req(s), costs, SolverConfig(dc=5.0))
        ref = exhaustive_search(s, dc=5.0, costs=[[costs[0]], [costs[1]]])
        assert rt.cost_delta == pytest.approx(ref.cost, abs=1e-9)


class TestMinplusStep:
    cfg = SolverConfig(dc=10.0)

    def test_base_layer_reproduces_cost_function(self):
        f = CostFunction(0.0, 0.01)
        grid = np.arange(0.0, 110.0, 10.0)
        out = minplus_step(PartialCostFunction.base(), f, 150.0, 0.0, self.cfg, grid)
        np.testing.assert_allclose(out.cost, 0.01 * grid, atol=1e-12)
        assert out(50.0) == pytest.approx(0.5)

    def test_two_linear_through_origin_gives_the_cheaper_slope(self):
        grid = np.arange(0.0, 110.0, 10.0)
        one = minplus_step(PartialCostFunction.base(), CostFunction(0.0, 0.02), 150.0, 0.0, self.cfg, grid)
        two = minplus_step(one, CostFunction(0.0, 0.01), 150.0, 0.0, self.cfg, grid)
        np.testing.assert_allclose(two.cost, 0.01 * grid, atol=1e-12)

    def test_plateau_backpointer_takes_max_on_new_source(self):
        f = CostFunction(1.0, 0.01)
        g1 = np.arange(50.0, 160.0, 10.0)
        one = minplus_step(PartialCostFunction.base(), f, 150.0, 0.0, self.cfg, g1)
        two = minplus_step(one, f, 150.0, 0.0, self.cfg, np.array([200.0]))
        assert two.cost[0] == pytest.approx(4.0)
        assert one.grid[two.back[0]] == 50.0  # the new source carries its full 150

    def test_off_grid_lookup_raises(self):
        layer = minplus_step(PartialCostFunction.base(), CostFunction(1, 0.01), 10.0, 0.0,
                             self.cfg, np.array([0.0, 10.0]))
        with pytest.raises(KeyError):
            layer(5.0)

    @settings(max_examples=60, deadline=None)
    @given(slopes=st.lists(st.floats(0, 0.05), min_size=2, max_size=4),
           setups=st.lists(st.floats(0, 3), min_size=4, max_size=4))
    def test_adding_a_source_never_raises_the_minimum(self, slopes, setups):
        grid = np.arange(0.0, 101.0, 10.0)
        layer = PartialCostFunction.base()
        prev = None
        for k, b in enumerate(slopes):
            layer = minplus_step(layer, CostFunction(setups[k], b), 100.0, 0.0, self.cfg, grid)
            if prev is not None:
                assert np.all(layer.cost <= prev + 1e-12)
            prev = layer.cost


class TestFastPath:
    def test_identical_sources_pick_lowest_index(self):
        s = single_request([150] * 3, 100.0, [1] * 3, [0.01] * 3)
        rt = concave_fast_path(NetworkState.fresh(s), _req(s), _costs(s))
        np.testing.assert_allclose(rt.rates, [100, 0, 0])
        assert rt.fast_path and rt.ops <= s.K

    def test_prefers_already_active_vpn(self):
        s = single_request([150] * 3, 100.0, [1] * 3, [0.01] * 3)
        st_ = NetworkState.fresh(s)
        st_.allocated[2, 0] = 50.0
        rt = concave_fast_path(st_, _req(s), _costs(s))
        assert int(np.argmax(rt.rates)) == 2
        assert rt.cost_delta == pytest.approx(1.0)

    def test_not_applicable_when_demand_exceeds_a_cap(self):
        s = single_request([150, 90], 100.0, [1, 1], [0.01, 0.01])
        assert concave_fast_path(NetworkState.fresh(s), _req(s), _costs(s)) is None


class TestKernelParity:
    """The compiled loop and the numpy path must agree exactly."""

    @pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
    @pytest.mark.parametrize("seed", range(25))
    def test_linear_kernels_agree(self, seed):
        rng = np.random.default_rng(seed)
        xs = np.unique(np.round(rng.uniform(0, 200, size=rng.integers(1, 40)), 1))
        prev_cost = rng.uniform(0, 5, size=xs.size)
        prev_act = rng.integers(0, 3, size=xs.size).astype(np.int64)
        cs = np.unique(np.round(rng.uniform(0, 300, size=rng.integers(1, 40)), 1))
        args = (xs, prev_cost, prev_act, cs, float(rng.uniform(10, 200)), float(rng.uniform(0, 3)),
                float(rng.uniform(0, 0.05)), bool(rng.integers(2)), 1e-9, 1e-9)
        a = _kernels.convolve_linear_numba(*args)
        b = _kernels.convolve_linear_numpy(*args)
        for x, y in zip(a[:3], b[:3]):
            np.testing.assert_array_equal(x, y)
        assert a[3] == b[3]
