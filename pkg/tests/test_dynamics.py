"""Model building blocks, the Euler integrator, and stability classification."""

import math

import numpy as np
import pytest

from actdyn import (
    ActivityState,
    DynamicsParams,
    InputError,
    PeerInfluenceParams,
    classify_stability,
    derivative,
    dimensional_influence,
    euler_integrate,
    find_active_fixed_point,
    influence_growth_rate,
    largest_eigenvalue,
    linearized_coefficient_decay,
    peer_influence,
    random_initial_activity,
)

from conftest import isolated_node, k2, random_connected_graph


# -- peer influence -------------------------------------------------------------


def test_peer_influence_anchors():
    assert peer_influence(0.0) == 0.0
    assert peer_influence(5.0) == pytest.approx(5.0 / math.sqrt(26.0), abs=1e-12)
    assert peer_influence(0.1) == pytest.approx(0.1 / math.sqrt(1.01), abs=1e-12)


def test_peer_influence_odd_and_bounded():
    xs = np.linspace(-50, 50, 401)
    values = peer_influence(xs)
    assert np.allclose(values, -peer_influence(-xs), atol=1e-15)
    assert np.all(np.abs(values) < 1.0)
    assert np.all(np.diff(values) > 0)  # monotonically increasing


def test_influence_growth_rate_at_zero_is_exact():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = PeerInfluenceParams(q=float(rng.uniform(0.1, 10)), a_c=float(rng.uniform(0.1, 10)))
        assert influence_growth_rate(0.0, p) == p.mu


def test_influence_growth_rate_examples():
    p = PeerInfluenceParams(q=2.0, a_c=1.0)
    assert influence_growth_rate(0.0, p) == 2.0
    assert influence_growth_rate(1e9, p) == pytest.approx(0.0, abs=1e-12)


def test_influence_growth_rate_matches_finite_difference():
    # central difference of the dimensional influence as the independent oracle
    rng = np.random.default_rng(17)
    for _ in range(100):
        p = PeerInfluenceParams(q=float(rng.uniform(0.5, 5)), a_c=float(rng.uniform(0.5, 5)))
        a = float(rng.uniform(-10, 10))
        h = 1e-6 * max(1.0, abs(a))
        fd = (dimensional_influence(a + h, p) - dimensional_influence(a - h, p)) / (2 * h)
        analytic = influence_growth_rate(a, p)
        assert abs(analytic - fd) <= 1e-6 * max(1.0, abs(fd))


# -- derivative -------------------------------------------------------------------


def test_derivative_zero_fixed_point():
    net = k2()
    state = ActivityState(np.zeros(2), 0.0)
    assert np.array_equal(derivative(net, state, 1.7), np.zeros(2))


def test_derivative_isolated_decay():
    net = isolated_node()
    state = ActivityState(np.array([0.8]), 0.0)
    assert np.allclose(derivative(net, state, 2.5), [-2.0], atol=1e-15)


def test_derivative_k2_hand_value():
    # -ratio*x + A g(x) at x=(1,0), ratio=1: (-1 + g(0), 0 + g(1)) = (-1, 1/sqrt(2))
    state = ActivityState(np.array([1.0, 0.0]), 0.0)
    expected = np.array([-1.0, 1.0 / math.sqrt(2.0)])
    assert np.allclose(derivative(k2(), state, 1.0), expected, atol=1e-15)


# -- integrator --------------------------------------------------------------------


def test_euler_zero_stays_zero(karate):
    trace = euler_integrate(karate, np.zeros(karate.n), DynamicsParams(ratio=2.0), 10)
    for state in trace.states:
        assert np.array_equal(state.x, np.zeros(karate.n))
    assert not trace.diverged
    assert trace.negativity_events == 0


@pytest.mark.parametrize("ratio", [0.5, 1.0, 2.0])
def test_euler_isolated_decay_first_order(ratio):
    net = isolated_node()
    errors = []
    for dtau in (0.01, 0.005):
        params = DynamicsParams(ratio=ratio, dtau=dtau, tau_per_step=1.0)
        trace = euler_integrate(net, np.array([1.0]), params, n_steps=5)
        errors.append(abs(trace.final_state.x[0] - math.exp(-ratio * 5.0)))
    assert 1.8 <= errors[0] / errors[1] <= 2.2


def test_euler_trace_aggregate_identity(karate):
    x0 = random_initial_activity(karate, seed=3)
    trace = euler_integrate(karate, x0, DynamicsParams(ratio=5.0), 20)
    for state, agg in zip(trace.states, trace.aggregate):
        assert agg == state.x.sum()
    assert trace.states[0].tau == 0.0
    assert trace.states[-1].tau == pytest.approx(20.0)


def test_euler_negative_activity_recorded_not_clamped():
    net = isolated_node()
    trace = euler_integrate(net, np.array([-1.0]), DynamicsParams(ratio=1.0), 3)
    assert all(state.x[0] < 0 for state in trace.states)
    assert trace.negativity_events == len(trace.states)


def test_euler_divergence_halts():
    # dtau=1 with ratio=3 gives x <- -2x per sub-step: oscillating blow-up
    net = isolated_node()
    params = DynamicsParams(ratio=3.0, dtau=1.0, tau_per_step=1.0)
    trace = euler_integrate(net, np.array([1.0]), params, n_steps=100)
    assert trace.diverged
    assert trace.step_diverged[-1]
    assert len(trace.states) < 101  # halted early
    assert trace.negativity_events > 0  # oscillation goes negative on the way


def test_euler_stability_dichotomy_karate(karate, karate_kappa1):
    x0 = random_initial_activity(karate, 0.0, 0.1, seed=2)
    stable = euler_integrate(karate, x0, DynamicsParams(ratio=1.1 * karate_kappa1), 200)
    unstable = euler_integrate(karate, x0, DynamicsParams(ratio=0.9 * karate_kappa1), 200)
    assert stable.aggregate[-1] < 1e-6
    assert unstable.aggregate[-1] > 1e-3


def test_euler_linear_regime_matches_modal_exponent(karate, karate_kappa1):
    # start along the dominant eigenvector; the aggregate must follow
    # exp((-ratio + kappa1) * tau) while the state stays tiny
    vector = largest_eigenvalue(karate, tol=1e-12).vector
    x0 = 1e-6 * vector / np.abs(vector).max()
    for ratio in (karate_kappa1 - 1.0, karate_kappa1 + 1.0):
        trace = euler_integrate(karate, x0, DynamicsParams(ratio=ratio), 1)
        rate = math.log(trace.aggregate[-1] / trace.aggregate[0])
        expected = -ratio + karate_kappa1
        assert abs(rate - expected) <= 0.05 * abs(expected)


@pytest.mark.parametrize("seed", range(20))
def test_stability_dichotomy_random_graphs(seed):
    rng = np.random.default_rng(900 + seed)
    net = random_connected_graph(int(rng.integers(5, 51)), rng)
    kappa1 = largest_eigenvalue(net).kappa1
    x0 = rng.uniform(0.0, 0.1, net.n) + 1e-6
    stable = euler_integrate(net, x0, DynamicsParams(ratio=1.05 * kappa1), 200)
    unstable = euler_integrate(net, x0, DynamicsParams(ratio=0.95 * kappa1), 200)
    assert stable.aggregate[-1] < 1e-6
    assert unstable.aggregate[-1] > 1e-3


def test_euler_validation(karate):
    with pytest.raises(InputError):
        euler_integrate(karate, np.zeros(karate.n), DynamicsParams(ratio=1.0), 0)
    with pytest.raises(InputError):
        euler_integrate(karate, np.zeros(3), DynamicsParams(ratio=1.0), 1)
    with pytest.raises(InputError):
        DynamicsParams(ratio=-1.0)
    with pytest.raises(InputError):
        DynamicsParams(ratio=1.0, dtau=0.5, tau_per_step=0.1)


# -- stability classification -----------------------------------------------------


def test_classify_stability_cases():
    assert classify_stability(6.726, 7.0).stable
    assert not classify_stability(6.726, 6.0).stable
    boundary = classify_stability(5.0, 5.0)
    assert not boundary.stable
    assert boundary.marginal
    assert not classify_stability(6.726, 7.0).marginal


def test_classify_stability_validation():
    with pytest.raises(InputError):
        classify_stability(float("nan"), 1.0)
    with pytest.raises(InputError):
        classify_stability(1.0, -2.0)


# -- active fixed point -------------------------------------------------------------


def test_active_fixed_point_found(karate, karate_kappa1):
    fp = find_active_fixed_point(
        karate, 0.5 * karate_kappa1, np.full(karate.n, 0.05), tol=1e-8
    )
    assert fp is not None
    assert np.all(fp > 0)
    residual = derivative(karate, ActivityState(fp, 0.0), 0.5 * karate_kappa1)
    assert np.max(np.abs(residual)) < 1e-8


def test_active_fixed_point_not_found_when_stable(karate, karate_kappa1):
    assert (
        find_active_fixed_point(karate, 2.0 * karate_kappa1, np.full(karate.n, 0.05))
        is None
    )


def test_active_fixed_point_isolated_node():
    assert find_active_fixed_point(isolated_node(), 0.7, np.array([0.5])) is None


def test_active_fixed_point_rejects_nonpositive_init(karate):
    with pytest.raises(InputError):
        find_active_fixed_point(karate, 1.0, np.zeros(karate.n))


# -- linearized coefficient law ------------------------------------------------------


def test_linearized_coefficient_decay_values():
    assert linearized_coefficient_decay(2.0, 2.0, 5.0, c0=3.5) == 3.5
    assert linearized_coefficient_decay(1.0, 2.0, 1.0, c0=1.0) == pytest.approx(
        math.exp(-1.0), abs=1e-12
    )
    assert linearized_coefficient_decay(4.2, 1.1, 0.0, c0=0.77) == 0.77
