import numpy as np
import pytest

from asisnet import (
    AsisParams,
    Graph,
    SimulationBudgetError,
    ValidationError,
    derive_seed,
    gen_erdos_renyi,
    homogeneous,
    homogeneous_bound,
    linear_bound,
    load_edge_list,
    mc_transients,
    run,
    sweep,
    twin_metastable,
)
from asisnet import _kernels as K
from asisnet.simulate import SimState, _advance, _twin_metric, coherence_gap


def k3():
    return Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])


class TestRun:
    def test_single_node_extinction_time(self):
        # one infected node, no edges: y_integral is the Exp(delta) lifetime
        g = Graph(n=1, edges=())
        p = AsisParams(beta=np.array([0.3]), delta=np.array([1.0]),
                       phi=np.zeros(0), psi=np.zeros(0))
        trials = 20_000
        total = 0.0
        for r in range(trials):
            total += run(g, p, horizon=60.0, seed=derive_seed(11, r)).stats.y_integral
        se = 1.0 / np.sqrt(trials)  # Exp(1) has unit standard deviation
        assert abs(total / trials - 1.0) < 3 * se

    def test_no_infection_when_beta_zero(self):
        g = load_edge_list("0 1\n1 2")
        p = AsisParams(beta=np.zeros(3), delta=np.ones(3),
                       phi=np.ones(4), psi=np.ones(2))
        res = run(g, p, horizon=25.0, seed=3, infected=[])
        assert res.stats.y == 0.0
        assert res.stats.y_integral == 0.0

    def test_bad_horizon(self):
        with pytest.raises(ValidationError):
            run(k3(), homogeneous(k3(), 1, 1, 1, 1), horizon=0.0, seed=1)

    def test_absent_edges_reconnect(self):
        # start with every edge cut and nobody infected: the only possible
        # events are reconnections, so the edge count can only climb toward m
        g = k3()
        p = homogeneous(g, 1.0, 1.0, 1.0, 5.0)
        res = run(g, p, horizon=10.0, seed=2, infected=[],
                  present_edges=np.zeros(3, dtype=bool), collect_log=True)
        assert res.state.edges_present == 3
        assert np.all(res.log.kind == K.EV_RECONNECT)
        assert len(res.log) == 3

    def test_bad_present_edges_shape(self):
        with pytest.raises(ValidationError):
            run(k3(), homogeneous(k3(), 1, 1, 1, 1), horizon=1.0, seed=1,
                present_edges=np.zeros(2, dtype=bool))

    def test_budget_exceeded_carries_partial(self):
        p = homogeneous(k3(), 2, 1, 1, 1)
        with pytest.raises(SimulationBudgetError) as exc:
            run(k3(), p, horizon=1e7, seed=5, reinfect_count=1, event_cap=5000)
        assert exc.value.partial.stats.event_count == 5000

    def test_reproducible_event_log(self):
        p = homogeneous(k3(), 1.5, 1, 1, 1)
        a = run(k3(), p, horizon=20.0, seed=99, collect_log=True)
        b = run(k3(), p, horizon=20.0, seed=99, collect_log=True)
        assert np.array_equal(a.log.t, b.log.t)
        assert np.array_equal(a.log.kind, b.log.kind)
        assert np.array_equal(a.log.i, b.log.i)
        assert np.array_equal(a.log.j, b.log.j)

    def test_pause_points_do_not_change_the_path(self):
        # advancing in many small slices must replay the identical trajectory
        g = gen_erdos_renyi(10, 0.4, 0)
        p = homogeneous(g, 0.8, 1, 1, 1)
        one = run(g, p, horizon=30.0, seed=42)
        state = SimState.create(g, p, seed=42)
        for t in np.linspace(0.5, 30.0, 60):
            _advance(state, float(t), 10**9, 0)
        assert state.event_count == one.stats.event_count
        assert state.f64s[K.F_YINT] == pytest.approx(one.stats.y_integral, rel=1e-12)


class TestSamplePathLegality:
    def test_replay_log(self):
        g = gen_erdos_renyi(12, 0.3, 0)
        p = homogeneous(g, 1.2, 1.0, 0.8, 0.6)
        res = run(g, p, horizon=80.0, seed=7, reinfect_count=1, collect_log=True)
        x = np.ones(g.n, dtype=int)
        a = np.ones(g.m, dtype=int)
        pos = g.edge_position
        for t, kind, i, j in zip(res.log.t, res.log.kind, res.log.i, res.log.j):
            if kind == K.EV_INFECT:
                assert x[i] == 0
                infected_present = sum(
                    a[pos[(min(i, w), max(i, w))]] * x[w] for w in g.neighbors[i])
                assert infected_present >= 1
                x[i] = 1
            elif kind == K.EV_RECOVER:
                assert x[i] == 1
                x[i] = 0
            elif kind == K.EV_CUT:
                e = pos[(min(i, j), max(i, j))]
                assert a[e] == 1
                assert x[i] == 1 or x[j] == 1
                a[e] = 0
            elif kind == K.EV_RECONNECT:
                e = pos[(min(i, j), max(i, j))]
                assert a[e] == 0
                a[e] = 1
            else:
                assert kind == K.EV_REINFECT
                assert x.sum() == 0
                x[i] = 1
        assert x.sum() == res.state.infected_count
        assert a.sum() == res.state.edges_present


class TestRateCacheCoherence:
    def test_stepwise_recount(self):
        g = gen_erdos_renyi(14, 0.3, 3)
        rng = np.random.default_rng(8)
        p = AsisParams(beta=rng.uniform(0.2, 2, g.n), delta=rng.uniform(0.2, 2, g.n),
                       phi=rng.uniform(0.2, 2, 2 * g.m), psi=rng.uniform(0.2, 2, g.m))
        state = SimState.create(g, p, seed=21)
        for step in range(300):
            status = _advance(state, 1e9, state.event_count + 1, 1)
            if status == K.STATUS_REACHED:
                break
            assert coherence_gap(state) < 1e-9


class TestHeterogeneousOracleEquivalence:
    # strongly asymmetric rates so that mixing up a single orientation or
    # rate family would shift the transient mean by tens of standard errors

    def test_single_edge_asymmetric_cutting(self):
        g = Graph.from_edges(2, [(0, 1)])
        # phi at pair (0, 1) = 5.0: the edge cuts fast while node 0 is infected
        p = AsisParams(beta=np.array([0.2, 3.0]), delta=np.array([1.0, 0.6]),
                       phi=np.array([5.0, 0.05]), psi=np.array([0.7]))
        times = [0.3, 0.8]
        from asisnet import transient_mean_infected

        x0 = np.array([1, 0], dtype=np.uint8)
        a0 = np.ones(1, dtype=np.uint8)
        mc = mc_transients(g, p, times, 60_000, seed=5150, infected=[0])
        for k, t in enumerate(times):
            exact = transient_mean_infected(g, p, (x0, a0), t)
            assert abs(mc.mean_total[k] - exact) <= 3 * mc.sem_total[k]

    def test_path3_heterogeneous(self):
        g = load_edge_list("0 1\n1 2")
        rng = np.random.default_rng(77)
        p = AsisParams(beta=rng.uniform(0.2, 3.0, 3), delta=rng.uniform(0.3, 2.0, 3),
                       phi=rng.uniform(0.05, 4.0, 4), psi=rng.uniform(0.3, 2.0, 2))
        times = [0.5, 1.5]
        from asisnet import transient_mean_infected

        x0 = np.array([0, 1, 0], dtype=np.uint8)
        a0 = np.ones(2, dtype=np.uint8)
        mc = mc_transients(g, p, times, 60_000, seed=314, infected=[1])
        for k, t in enumerate(times):
            exact = transient_mean_infected(g, p, (x0, a0), t)
            assert abs(mc.mean_total[k] - exact) <= 3 * mc.sem_total[k]


class TestMcDomination:
    def test_single_edge_marginals_below_linear_bound(self):
        g = Graph.from_edges(2, [(0, 1)])
        p = AsisParams(beta=np.array([0.9, 1.4]), delta=np.array([1.0, 0.7]),
                       phi=np.array([1.2, 0.5]), psi=np.array([0.8]))
        times = [0.5, 1.0, 2.0]
        mc = mc_transients(g, p, times, 40_000, seed=17)
        p0 = np.ones(2)
        q0 = np.ones(2)
        for kk, t in enumerate(times):
            bound = linear_bound(g, p, p0, q0, t)[:2]
            means = mc.node_means[kk]
            sems = np.sqrt(means * (1 - means) / mc.totals.shape[0])
            assert np.all(means <= bound + 3 * sems)


class TestTwinMetastable:
    def test_stopping_metric_definition(self):
        assert _twin_metric(5.0, 5.0, 3.0, 3.0) == 0.0
        assert _twin_metric(1.0, 2.0, 1.0, 1.0) == pytest.approx(1 / 3)
        assert _twin_metric(0.0, 0.0, 0.0, 0.0) == 0.0

    def test_y_star_compensates_reinfection(self):
        g = gen_erdos_renyi(12, 0.35, 0)
        p = homogeneous(g, 0.05, 1, 1, 1)
        res = twin_metastable(g, p, seed=4, event_budget=3_000_000,
                              raise_on_timeout=False)
        assert res.y_star == pytest.approx(res.y1 - 1.0)

    def test_extinction_regime_low_y_star(self):
        g = gen_erdos_renyi(40, 0.1, 1)
        bstar = homogeneous_bound(g, 1.0, 1.0, 1.0)
        p = homogeneous(g, 0.5 * bstar, 1.0, 1.0, 1.0)
        res = twin_metastable(g, p, seed=1, event_budget=20_000_000,
                              raise_on_timeout=False)
        assert res.y_star <= 1.0

    def test_deterministic(self):
        g = gen_erdos_renyi(12, 0.35, 0)
        p = homogeneous(g, 0.4, 1, 1, 1)
        a = twin_metastable(g, p, seed=13, event_budget=2_000_000,
                            raise_on_timeout=False)
        b = twin_metastable(g, p, seed=13, event_budget=2_000_000,
                            raise_on_timeout=False)
        assert a == b

    def test_timeout_raises_with_partial(self):
        g = gen_erdos_renyi(12, 0.35, 0)
        p = homogeneous(g, 2.0, 1, 1, 1)
        with pytest.raises(SimulationBudgetError) as exc:
            twin_metastable(g, p, seed=4, event_budget=20_000)
        assert exc.value.partial.converged is False
        assert exc.value.partial.events <= 20_000

    def test_disconnected_rejected(self):
        g = Graph(n=2, edges=())
        p = AsisParams(beta=np.ones(2), delta=np.ones(2),
                       phi=np.zeros(0), psi=np.zeros(0))
        with pytest.raises(ValidationError):
            twin_metastable(g, p, seed=0)


class TestSweep:
    def test_single_cell_matches_twin(self):
        g = gen_erdos_renyi(12, 0.35, 0)
        base = homogeneous(g, 1, 1, 1, 1)
        rows = sweep(g, base, [0.3], [1.0], seed=5, event_budget=2_000_000)
        cell = twin_metastable(g, homogeneous(g, 0.3, 1, 1, 1), derive_seed(5, 0),
                               event_budget=2_000_000, raise_on_timeout=False)
        assert rows[0].y_star == pytest.approx(cell.y_star)
        assert rows[0].converged == cell.converged

    def test_zero_beta_column(self):
        g = gen_erdos_renyi(12, 0.35, 0)
        base = homogeneous(g, 1, 1, 1, 1)
        rows = sweep(g, base, [0.0], [0.5, 1.0], seed=2, event_budget=2_000_000)
        for row in rows:
            assert abs(row.y_star) < 0.5

    def test_deterministic_order_and_values(self):
        g = gen_erdos_renyi(12, 0.35, 0)
        base = homogeneous(g, 1, 1, 1, 1)
        a = sweep(g, base, [0.2, 0.4], [0.5, 1.5], seed=9, event_budget=400_000)
        b = sweep(g, base, [0.2, 0.4], [0.5, 1.5], seed=9, event_budget=400_000)
        assert a == b
        assert [(r.beta, r.phi) for r in a] == [(0.2, 0.5), (0.2, 1.5), (0.4, 0.5), (0.4, 1.5)]

    def test_empty_grid_rejected(self):
        g = gen_erdos_renyi(12, 0.35, 0)
        with pytest.raises(ValidationError):
            sweep(g, homogeneous(g, 1, 1, 1, 1), [], [1.0], seed=1)
