import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbas_ddp.cost import (
    PenaltyCost,
    QuadraticCost,
    TrackingReference,
    as_weight,
    figure_eight_phase,
    figure_eight_reference,
    tracking_weight,
)
from dbas_ddp.dynamics import PointRobot2D
from dbas_ddp.safety import DBaSSpec, SphericalObstacle, augment
from dbas_ddp.solver import rollout
from oracles import central_jacobian


def test_control_cost_example():
    c = QuadraticCost(3, 2, R=0.005)
    assert c.stage_cost(np.zeros(3), np.array([1.0, 1.0])) == pytest.approx(0.01, abs=1e-15)


def test_barrier_state_cost_example():
    c = QuadraticCost(3, 2, R=0.005, q_w=1e-3)
    assert c.stage_cost(np.array([0.0, 0.0, 0.0, 2.0]), np.zeros(2)) == pytest.approx(0.004, abs=1e-15)


def test_terminal_weight_defaults_to_stage_weight():
    c = QuadraticCost(2, 1, S=1.0, q_w=0.3)
    assert c.s_w == 0.3
    assert c.terminal_cost(np.array([1.0, 0.0, 2.0])) == pytest.approx(1.0 + 0.3 * 4)


def test_weight_shapes_and_validation():
    np.testing.assert_array_equal(as_weight(2.0, 3), 2 * np.eye(3))
    np.testing.assert_array_equal(as_weight([1, 2], 2), np.diag([1.0, 2.0]))
    with pytest.raises(ValueError):
        as_weight([1, 2, 3], 2)
    with pytest.raises(ValueError):
        QuadraticCost(2, 1, R=0.0)
    with pytest.raises(ValueError):
        QuadraticCost(2, 1, q_w=-1.0)


def test_control_hessian_is_twice_r():
    R = np.array([[0.3, 0.1], [0.1, 0.2]])
    c = QuadraticCost(4, 2, Q=1.0, R=R, q_w=1e-3)
    ex = c.quad_expand(np.ones(5), np.array([0.4, -1.0]))
    np.testing.assert_array_equal(ex.l_uu, 2 * R)


def _cost_case():
    rng = np.random.default_rng(11)
    Q = rng.normal(size=(4, 4))
    R = rng.normal(size=(2, 2))
    return QuadraticCost(4, 2, Q=Q @ Q.T, R=R @ R.T + np.eye(2), S=np.eye(4), q_w=0.7,
                         target=np.array([3.0, 3.0, 0.0, 0.0]), u_ref=np.array([0.1, -0.2]))


@settings(max_examples=40)
@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5), st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_stage_derivatives_match_differences(xs, us):
    c = _cost_case()
    xh, u = np.array(xs), np.array(us)
    ex = c.quad_expand(xh, u)
    gx = central_jacobian(lambda z: np.atleast_1d(c.stage_cost(z, u)), xh)[0]
    gu = central_jacobian(lambda v: np.atleast_1d(c.stage_cost(xh, v)), u)[0]
    np.testing.assert_allclose(ex.l_x, gx, atol=1e-6 * max(1, np.abs(gx).max()))
    np.testing.assert_allclose(ex.l_u, gu, atol=1e-6 * max(1, np.abs(gu).max()))
    Hxx = central_jacobian(lambda z: c.quad_expand(z, u).l_x, xh)
    np.testing.assert_allclose(ex.l_xx, Hxx, atol=1e-7)
    Hux = central_jacobian(lambda z: c.quad_expand(z, u).l_u, xh)
    np.testing.assert_allclose(ex.l_ux, Hux, atol=1e-7)


def test_trajectory_expansion_matches_pointwise():
    c = _cost_case()
    rng = np.random.default_rng(12)
    X = rng.normal(size=(6, 5))
    U = rng.normal(size=(5, 2))
    stage, lf_x, lf_xx = c.expand_trajectory(X, U)
    for k in range(5):
        ex = c.quad_expand(X[k], U[k], k)
        np.testing.assert_allclose(stage.l[k], ex.l, rtol=1e-13)
        np.testing.assert_allclose(stage.l_x[k], ex.l_x, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(stage.l_u[k], ex.l_u, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(stage.l_xx[k], ex.l_xx)
    g = central_jacobian(lambda z: np.atleast_1d(c.terminal_cost(z)), X[5])[0]
    np.testing.assert_allclose(lf_x, g, atol=1e-6)
    np.testing.assert_allclose(lf_xx[:4, :4], 2 * np.eye(4))
    assert c.trajectory_cost(X, U) == pytest.approx(sum(c.stage_cost(X[k], U[k], k) for k in range(5))
                                                   + c.terminal_cost(X[5]), rel=1e-13)


def test_figure_eight_start_and_phase():
    np.testing.assert_allclose(figure_eight_reference(0.0), [0.0, 1.0, 0.0], atol=1e-15)
    t = np.linspace(0, 30, 500)
    s = figure_eight_phase(t)
    assert s[0] == 0.0 and np.all(np.diff(s) > 0)
    assert np.all(figure_eight_reference(t)[:, 2] == 0.0)
    with pytest.raises(ValueError):
        figure_eight_reference(-1.0)


def test_tracking_targets_and_weight():
    ref = TrackingReference()
    T = ref.state_targets(12, 10, 0.02)
    assert T.shape == (11, 12)
    np.testing.assert_allclose(T[:, :3], figure_eight_reference(0.02 * np.arange(11)))
    assert np.all(T[:, 3:] == 0)
    Q = tracking_weight(12, (0, 1, 2), 10.0)
    assert np.count_nonzero(Q) == 3 and Q[2, 2] == 10.0
    c = QuadraticCost(12, 4, Q=Q, target=T)
    np.testing.assert_array_equal(c.target_at(3), T[3])
    np.testing.assert_array_equal(c.target_at(None), T[-1])
    with pytest.raises(ValueError):
        c.stage_costs(np.zeros((20, 12)), np.zeros((19, 4)))


def _scene():
    goal = np.array([3.0, 3.0, 0.0, 0.0])
    spec = DBaSSpec([SphericalObstacle([1.0, 1.2], 0.5), SphericalObstacle([2.2, 2.0], 0.4)], desired=goal)
    base = QuadraticCost(4, 2, Q=0.0, R=0.005, S=100.0, q_w=1e-3, target=goal)
    return PointRobot2D(), spec, base, goal


def test_penalty_cost_equals_dbas_cost_on_same_trajectory():
    model, spec, base, _ = _scene()
    rng = np.random.default_rng(4)
    U = 0.5 + 0.3 * rng.normal(size=(80, 2))
    X = rollout(model, np.zeros(4), U)
    Xh = rollout(augment(model, spec), augment(model, spec).initial_state(np.zeros(4)), U)
    np.testing.assert_array_equal(Xh[:, :4], X)
    penalty = PenaltyCost(base, spec)
    assert penalty.trajectory_cost(X, U) == pytest.approx(base.trajectory_cost(Xh, U), rel=1e-9)


def test_penalty_cost_infinite_when_unsafe():
    model, spec, base, _ = _scene()
    penalty = PenaltyCost(base, spec)
    X = np.zeros((3, 4))
    X[1, :2] = [1.0, 1.2]
    assert penalty.trajectory_cost(X, np.zeros((2, 2))) == np.inf
    assert penalty.stage_cost(X[1], np.zeros(2)) == np.inf


def test_penalty_derivatives_match_differences():
    _, spec, base, _ = _scene()
    penalty = PenaltyCost(base, spec)
    rng = np.random.default_rng(8)
    for _ in range(20):
        x = rng.uniform(-0.5, 3.5, 4)
        if spec.h_values(x).min() < 0.1:
            continue
        u = rng.normal(size=2)
        ex = penalty.quad_expand(x, u)
        g = central_jacobian(lambda z: np.atleast_1d(penalty.stage_cost(z, u)), x, eps=1e-7)[0]
        np.testing.assert_allclose(ex.l_x, g, rtol=1e-5, atol=1e-6)
        H = central_jacobian(lambda z: penalty.quad_expand(z, u).l_x, x, eps=1e-7)
        np.testing.assert_allclose(ex.l_xx, H, rtol=1e-4, atol=1e-5)
