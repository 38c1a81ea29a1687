"""Tests for the exact dynamics, hand-traced oracles and invariants."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fleetmaint.config import SystemConfig, case1_config
from fleetmaint import sysmodel as sm


def make_cfg(n=1, T=4, D=2, s_init=1, **kw):
    base = dict(n=n, T=T, D=D, s_init=s_init, C_F=10000.0, C_P=50.0,
                C_C=200.0, weibull_shape=3.0, weibull_scale=10.0)
    base.update(kw)
    return SystemConfig(**base)


# ---------------------------------------------------------------------------
# failure law


def test_failure_probability_reference_values():
    # hand-computed: 1 - exp(-(1/10)^3) and 1 - exp(1 - 1.1^3)
    assert sm.failure_probability(3, 10, 0.0, 1.0) == pytest.approx(
        9.9950016662e-4, rel=1e-9)
    assert sm.failure_probability(3, 10, 10.0, 1.0) == pytest.approx(
        1.0 - math.exp(-0.331), rel=1e-12)


def test_failure_probability_monotone_and_bounded():
    ages = np.linspace(0, 60, 200)
    p = sm.failure_probability(3, 10, ages, 1.0)
    assert np.all(np.diff(p) > 0)
    assert np.all((p >= 0) & (p <= 1))


def test_failure_probability_degenerate_tail():
    # far in the tail 1 - F(age) underflows; the conditional law returns 1
    assert sm.failure_probability(3, 10, 1e6, 1.0) == 1.0


def test_failure_probability_negative_age_rejected():
    with pytest.raises(ValueError):
        sm.failure_probability(3, 10, -0.5, 1.0)


def test_failure_probability_derivative_matches_fd():
    for age in [0.5, 3.0, 9.0, 15.0]:
        h = 1e-6
        fd = (sm.failure_probability(3, 10, age + h, 1.0)
              - sm.failure_probability(3, 10, age - h, 1.0)) / (2 * h)
        assert sm.failure_probability_derivative(3, 10, age, 1.0) == \
            pytest.approx(fd, rel=1e-6)


def test_weibull_mttf_closed_form():
    assert sm.weibull_mttf(3, 10) == pytest.approx(10 * math.gamma(4 / 3),
                                                   rel=1e-12)
    # reference value for the short-lived component law
    assert sm.weibull_mttf(3, 10) == pytest.approx(8.9298, abs=1e-4)


def test_sampled_mttf_matches_closed_form():
    times = sm.sample_time_to_first_failure(3, 10, draws=200_000, seed=7)
    assert times.mean() == pytest.approx(sm.weibull_mttf(3, 10), abs=0.05)


# ---------------------------------------------------------------------------
# hand-traced trajectories


def test_failure_then_repair_trace():
    cfg = make_cfg()
    u = sm.Strategy(np.zeros((1, 4)))
    w = sm.Scenario(np.array([[0.0, 1.0, 1.0, 1.0]]))
    traj = sm.simulate(u, w, cfg)

    def comp(t):
        c = traj.states[t].components[0]
        return (c.regime, c.age, tuple(c.last_failures))

    assert comp(0) == (1.0, 0.0, (-1.0, -1.0))
    assert comp(1) == (0.0, 0.0, (0.0, -1.0))   # failed, order placed
    assert comp(2) == (1.0, 1.0, (1.0, -1.0))   # repaired from stock
    assert comp(3) == (1.0, 2.0, (2.0, -1.0))
    assert comp(4) == (1.0, 3.0, (3.0, -1.0))
    assert traj.stock_series().tolist() == [1.0, 1.0, 0.0, 1.0, 1.0]
    assert traj.failure[0].tolist() == [False, True, False, False, False]
    assert traj.cm_performed[0].tolist() == [False, True, False, False]
    assert not traj.forced_outage.any()

    cost = sm.total_cost(traj, u, cfg)
    assert cost["pm"] == 0.0
    assert cost["cm"] == pytest.approx(200.0 / 1.08, rel=1e-12)
    assert cost["fo"] == 0.0
    assert cost["total"] == cost["cm"]


def test_pm_cost_and_age_reset():
    cfg = make_cfg()
    controls = np.zeros((1, 4))
    controls[0, 1] = 1.0
    u = sm.Strategy(controls)
    w = sm.Scenario(np.ones((1, 4)))
    traj = sm.simulate(u, w, cfg)
    ages = [traj.states[t].components[0].age for t in range(5)]
    assert ages == [0.0, 1.0, 1.0, 2.0, 3.0]    # full PM resets the age
    cost = sm.total_cost(traj, u, cfg)
    assert cost["pm"] == pytest.approx(50.0 / 1.08, rel=1e-12)
    assert cost["total"] == cost["pm"]
    assert traj.pm_performed[0].tolist() == [False, True, False, False]


def test_partial_pm_rejuvenates():
    cfg = make_cfg(T=3)
    controls = np.zeros((1, 3))
    controls[0, 2] = 0.9
    traj = sm.simulate(sm.Strategy(controls), sm.Scenario(np.ones((1, 3))), cfg)
    # age 2 before the PM, (1 - 0.9) * 2 + 1 = 1.2 after
    assert traj.states[3].components[0].age == pytest.approx(1.2)


def test_pm_threshold_is_inclusive():
    cfg = make_cfg(T=1)
    controls = np.full((1, 1), cfg.nu)
    w = sm.Scenario(np.zeros((1, 1)))    # would fail without the PM
    traj = sm.simulate(sm.Strategy(controls), w, cfg)
    assert traj.pm_performed[0, 0]
    assert traj.states[1].components[0].regime == 1.0


def test_noise_equal_to_hazard_means_no_failure():
    cfg = make_cfg(T=1)
    p = sm.failure_probability(3, 10, 0.0, cfg.dt)
    traj = sm.simulate(sm.Strategy(np.zeros((1, 1))),
                       sm.Scenario(np.array([[p]])), cfg)
    assert traj.states[1].components[0].regime == 1.0


def test_forced_outage_when_no_spares():
    cfg = make_cfg(n=2, T=3, s_init=0)
    u = sm.Strategy(np.zeros((2, 3)))
    w = sm.Scenario(np.array([[0.0, 1.0, 1.0], [0.0, 1.0, 1.0]]))
    traj = sm.simulate(u, w, cfg)
    assert traj.forced_outage.tolist() == [False, False, True, True]
    assert traj.stock_series().tolist() == [0.0, 0.0, 0.0, 2.0]
    cost = sm.total_cost(traj, u, cfg)
    beta = cfg.discount(np.arange(4))
    assert cost["cm"] == pytest.approx(2 * 200.0 * beta[1], rel=1e-12)
    # one lump penalty per step with any component waiting, not per component
    assert cost["fo"] == pytest.approx(10000.0 * (beta[2] + beta[3]),
                                       rel=1e-12)


def test_spares_served_in_index_order():
    # one spare, both components broken: only the lower index is repaired
    cfg = make_cfg(n=2, T=2, s_init=1)
    w = sm.Scenario(np.array([[0.0, 1.0], [0.0, 1.0]]))
    traj = sm.simulate(sm.Strategy(np.zeros((2, 2))), w, cfg)
    c1, c2 = traj.states[2].components
    assert (c1.regime, c1.age) == (1.0, 1.0)
    assert (c2.regime, c2.age) == (0.0, 1.0)


def test_full_failure_record_discards_oldest():
    cfg = make_cfg(T=3, s_init=0, D=2)
    # fail every step; with no spares the component stays broken, so force
    # repeated failures via a fresh state instead
    st0 = [sm.ComponentState(1.0, 0.0, np.array([1.0, 3.0]))]
    nxt = sm.step_component(st0, 0.0, 0.0, 0.0, cfg)
    assert nxt.last_failures.tolist() == [4.0, 0.0]


def test_failure_insert_uses_first_free_slot():
    cfg = make_cfg(D=3)
    st0 = [sm.ComponentState(1.0, 5.0, np.array([2.0, -1.0, -1.0]))]
    nxt = sm.step_component(st0, 0.0, 0.0, 0.0, cfg)
    assert nxt.last_failures.tolist() == [3.0, 0.0, -1.0]


# ---------------------------------------------------------------------------
# batch engine agrees with the scalar path


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_batch_matches_scalar_simulation(seed):
    rng = np.random.default_rng(seed)
    cfg = make_cfg(n=4, T=8, s_init=rng.integers(0, 3), D=int(rng.integers(1, 4)))
    u = sm.Strategy(rng.random((4, 8)))
    noises = rng.random((3, 4, 8))
    stats = sm.simulate_batch(u, noises, cfg, record_states=True)
    for q in range(3):
        traj = sm.simulate(u, sm.Scenario(noises[q]), cfg)
        cost = sm.total_cost(traj, u, cfg)
        assert stats.total_cost[q] == pytest.approx(cost["total"], rel=1e-12)
        assert stats.pm_cost[q] == pytest.approx(cost["pm"], rel=1e-12)
        assert stats.cm_cost[q] == pytest.approx(cost["cm"], rel=1e-12)
        assert stats.fo_cost[q] == pytest.approx(cost["fo"], rel=1e-12)
        for t in range(cfg.T + 1):
            stq = traj.states[t]
            assert stats.stock[t, q] == stq.stock
            for i, c in enumerate(stq.components):
                assert stats.regimes[t, i, q] == c.regime
                assert stats.ages[t, i, q] == c.age
                assert stats.last_failures[t, i, :, q].tolist() == \
                    c.last_failures.tolist()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_conservation_of_parts(seed):
    rng = np.random.default_rng(seed)
    cfg = make_cfg(n=5, T=12, s_init=int(rng.integers(0, 4)),
                   D=int(rng.integers(1, 4)))
    u = sm.Strategy((rng.random((5, 12)) > 0.8) * 1.0)
    traj = sm.simulate(u, sm.Scenario(rng.random((5, 12))), cfg)
    for t, state in enumerate(traj.states):
        broken = sum(1 for c in state.components if c.regime == 0.0)
        assert state.stock + sm.in_flight_orders(state, cfg) - broken == \
            cfg.s_init, f"conservation broken at t={t}"


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_state_invariants(seed):
    rng = np.random.default_rng(seed)
    cfg = make_cfg(n=3, T=10, s_init=2)
    u = sm.Strategy(rng.random((3, 10)))
    traj = sm.simulate(u, sm.Scenario(rng.random((3, 10))), cfg)
    for state in traj.states:
        assert state.stock >= 0
        for c in state.components:
            assert c.regime in (0.0, 1.0)
            assert c.age >= 0
            recorded = c.last_failures[c.last_failures != cfg.delta_default]
            # elapsed times since distinct failures strictly decrease in d
            assert np.all(np.diff(recorded) < 0) or recorded.size <= 1


def test_simulate_is_deterministic():
    cfg = case1_config(n=8, s_init=2)
    rng = np.random.default_rng(0)
    u = sm.Strategy(rng.random((8, 40)))
    noises = rng.random((5, 8, 40))
    a = sm.simulate_batch(u, noises, cfg)
    b = sm.simulate_batch(u, noises, cfg)
    assert np.array_equal(a.total_cost, b.total_cost)
    assert np.array_equal(a.pm_cumulative, b.pm_cumulative)


def test_dimension_mismatch_raises():
    cfg = make_cfg()
    with pytest.raises(sm.DimensionError):
        sm.simulate(sm.Strategy(np.zeros((2, 4))),
                    sm.Scenario(np.zeros((1, 4))), cfg)
    with pytest.raises(sm.DimensionError):
        sm.simulate_batch(sm.Strategy(np.zeros((1, 4))),
                          np.zeros((3, 1, 5)), cfg)


def test_trajectory_csv_roundtrip(tmp_path):
    cfg = make_cfg(n=2, T=3, s_init=1)
    rng = np.random.default_rng(3)
    traj = sm.simulate(sm.Strategy(rng.random((2, 3))),
                       sm.Scenario(rng.random((2, 3))), cfg)
    path = tmp_path / "traj.csv"
    sm.trajectory_to_csv(traj, cfg, path)
    lines = path.read_text().strip().split("\n")
    assert len(lines) == cfg.T + 2
    header = lines[0].split(",")
    assert header[0] == "t" and header[1] == "stock"
    assert header[-1] == "forced_outage"
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[1]) == 1.0
