import math

import numpy as np
import pytest

from codesign.dynamics import (
    GRAVITY,
    Terrain,
    bias_forces,
    box_inertia,
    contact_kinematics,
    forward_dynamics,
    forward_kinematics,
    inverse_dynamics,
    mass_matrix,
)
from codesign.serialization import parse_robot_spec

from conftest import robot


def arr(m):
    return np.asarray(m, dtype=float)


def pendulum(length=1.0, mass=2.0):
    """Point mass on a massless rod, pivoting about world y; q = 0 hangs down."""
    return parse_robot_spec(
        {
            "parameters": [{"name": "l", "lower": 0.1, "upper": 2.0, "initial": length}],
            "links": [{"name": "bob", "mass": mass, "com": [0, 0, "-l"], "inertia": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}],
            "joints": [{"name": "pivot", "type": "revolute", "child": "bob", "axis": [0, 1, 0]}],
            "actuators": [{"name": "pivot", "joint": "pivot", "limit": 10.0}],
            "contacts": [{"name": "tip", "link": "bob", "position": [0, 0, "-l"]}],
        }
    )


def two_link_arm():
    return parse_robot_spec(
        {
            "parameters": [{"name": "l1", "lower": 0.1, "upper": 1.0, "initial": 0.4}],
            "links": [
                {"name": "upper", "mass": 1.3, "com": [0, 0, "-0.5 * l1"], "box": [0.05, 0.04, "l1"]},
                {"name": "lower", "mass": 0.7, "com": [0, 0, -0.15], "box": [0.03, 0.03, 0.3]},
            ],
            "joints": [
                {"name": "shoulder", "type": "revolute", "child": "upper", "axis": [0, 1, 0]},
                {"name": "elbow", "type": "revolute", "parent": "upper", "child": "lower", "origin": [0, 0, "-l1"], "axis": [0, 1, 0]},
            ],
        }
    )


def point_mass(mass=1.5, joint="prismatic"):
    return parse_robot_spec(
        {
            "links": [{"name": "m", "mass": mass, "inertia": [[0.01, 0, 0], [0, 0.01, 0], [0, 0, 0.01]]}],
            "joints": [{"name": "j", "type": joint, "child": "m", "axis": [0, 0, 1]}],
            "actuators": [{"name": "thrust", "kind": "thruster", "link": "m", "limit": 50.0}],
            "contacts": [{"name": "c", "link": "m"}],
        }
    )


def unit_column_mass_matrix(model, q, rho):
    n = model.n
    cols = [inverse_dynamics(model, q, [0.0] * n, list(np.eye(n)[j]), rho, gravity=0.0) for j in range(n)]
    return arr(cols).T


# -- box inertia -------------------------------------------------------------------
def test_box_inertia_unit_cube():
    assert np.allclose(arr(box_inertia(1.0, 1.0, 1.0, 1.0)), np.diag([1 / 6] * 3))


def test_box_inertia_zero_mass():
    assert np.all(arr(box_inertia(0.0, 0.3, 0.2, 0.1)) == 0.0)


def test_box_inertia_leg_values():
    I = arr(box_inertia(0.08, 0.15, 0.04, 0.04))
    assert np.allclose(np.diag(I), [2.1333e-5, 1.6067e-4, 1.6067e-4], rtol=1e-4)
    assert np.all(I - np.diag(np.diag(I)) == 0.0)


# -- forward kinematics --------------------------------------------------------------
def test_free_body_at_identity_pose_sits_at_origin():
    model = parse_robot_spec({"links": [{"name": "b", "mass": 1.0, "box": [1, 1, 1]}],
                              "joints": [{"name": "f", "type": "floating", "child": "b"}]})
    assert model.n == 6 and model.m == 0 and model.l == 0
    kin = forward_kinematics(model, [0.0] * 6, [])
    assert np.allclose(arr(kin.point(0, (0.0, 0.0, 0.0))), 0.0)
    assert np.allclose(arr(kin.link_rotation[0]), np.eye(3))


def test_pendulum_tip_position_matches_trigonometry():
    model = pendulum(length=1.0)
    for qv in (math.pi / 2, 0.3, -1.1):
        tip = arr(forward_kinematics(model, [qv], [1.0]).point(0, (0.0, 0.0, -1.0)))
        # rotation about +y takes -z toward -x
        assert np.allclose(tip, [-math.sin(qv), 0.0, -math.cos(qv)], atol=1e-15)


def test_hexapod_foot_moves_by_leg_length_delta_along_leg_axis():
    model = robot("hexapod.json")
    rng = np.random.default_rng(3)
    q = list(rng.uniform(-0.4, 0.4, model.n))
    rho = np.array(model.rho0, dtype=float)
    rho2 = rho.copy()
    k = [p.name for p in model.parameters].index("leg_length")
    rho2[k] += 0.05
    s1 = contact_kinematics(model, Terrain(), q, [0.0] * model.n, list(rho))
    s2 = contact_kinematics(model, Terrain(), q, [0.0] * model.n, list(rho2))
    kin = forward_kinematics(model, q, list(rho))
    for c, a, b in zip(model.contacts, s1, s2):
        R = arr(kin.link_rotation[model.link_index[c.link]])
        delta = arr(b.position) - arr(a.position)
        assert np.allclose(delta, R @ [0.0, 0.0, -0.05], atol=1e-14)


# -- mass matrix ----------------------------------------------------------------------
def test_prismatic_point_mass_matrix():
    assert np.allclose(arr(mass_matrix(point_mass(1.5), [0.2], [])), [[1.5]])


def test_pendulum_mass_matrix():
    model = pendulum(length=0.7, mass=2.0)
    assert np.allclose(arr(mass_matrix(model, [0.4], [0.7])), [[2.0 * 0.7**2]])


def test_two_link_mass_matrix_matches_unit_acceleration_columns():
    model = two_link_arm()
    rng = np.random.default_rng(0)
    for _ in range(10):
        q = list(rng.uniform(-np.pi, np.pi, 2))
        rho = [rng.uniform(0.2, 0.8)]
        assert np.allclose(arr(mass_matrix(model, q, rho)), unit_column_mass_matrix(model, q, rho), atol=1e-10, rtol=0)


@pytest.mark.parametrize("name", ["hexapod.json", "biped.json", "quadruped.json", "quadcopter.json", "hopper.json"])
def test_mass_matrix_symmetric_positive_definite(name):
    model = robot(name)
    rng = np.random.default_rng(1)
    lo = np.array([p.lower for p in model.parameters])
    hi = np.array([p.upper for p in model.parameters])
    for _ in range(50):
        q = list(rng.uniform(-1.0, 1.0, model.n))
        rho = list(rng.uniform(lo, hi))
        H = arr(mass_matrix(model, q, rho))
        assert np.abs(H - H.T).max() <= 1e-12
        np.linalg.cholesky(H)


# -- bias forces ------------------------------------------------------------------------
def test_bias_zero_at_rest_without_gravity():
    model = robot("biped.json")
    rng = np.random.default_rng(2)
    q = list(rng.uniform(-0.5, 0.5, model.n))
    assert np.all(arr(bias_forces(model, q, [0.0] * model.n, model.rho0, gravity=0.0)) == 0.0)


def test_pendulum_gravity_torque():
    m, l = 2.0, 0.8
    model = pendulum(l, m)
    for qv in (0.0, 0.5, -1.2):
        b = bias_forces(model, [qv], [0.0], [l])
        assert b[0] == pytest.approx(m * GRAVITY * l * math.sin(qv), abs=1e-12)


def test_two_link_bias_matches_momentum_bookkeeping():
    # with gravity off and qdd = 0: bias = dH/dt qd - d/dq (qd^T H qd / 2)
    model = two_link_arm()
    rho = [0.5]
    rng = np.random.default_rng(4)
    h = 1e-6
    for _ in range(10):
        q = rng.uniform(-np.pi, np.pi, 2)
        qd = rng.uniform(-2, 2, 2)

        def H(qq):
            return arr(mass_matrix(model, list(qq), rho))

        Hdot = (H(q + h * qd) - H(q - h * qd)) / (2 * h)
        dT = np.array([(qd @ H(q + h * e) @ qd - qd @ H(q - h * e) @ qd) / (4 * h) for e in np.eye(2)])
        expected = Hdot @ qd - dT
        got = arr(bias_forces(model, list(q), list(qd), rho, gravity=0.0))
        assert np.allclose(got, expected, atol=1e-6)


# -- contact kinematics --------------------------------------------------------------------
def test_signed_distance_over_flat_ground():
    model = parse_robot_spec(
        {"links": [{"name": "b", "mass": 1.0, "box": [0.1, 0.1, 0.1]}],
         "joints": [{"name": "f", "type": "floating", "child": "b"}],
         "contacts": [{"name": "c", "link": "b"}]}
    )
    st = contact_kinematics(model, Terrain(), [0.3, -0.1, 0.2, 0, 0, 0], [1.0, 0.0, -0.5, 0, 0, 0], [])[0]
    assert st.phi == pytest.approx(0.2)
    assert st.psi[0] == pytest.approx(1.0) and st.psi[1] == pytest.approx(0.0)


def test_grid_terrain_signed_distance_and_tie_break():
    t = Terrain(kind="grid", heights=[[0.0], [0.1]], origin=(-1.0, -5.0), cell=(1.0, 10.0))
    assert t.height(-0.5, 0.0) == 0.0
    assert t.height(0.5, 0.0) == 0.1
    assert t.height(0.0, 0.0) == 0.0  # boundary belongs to the lower-index cell
    assert t.height(50.0, 0.0) == 0.1  # outer cells extend outward


def test_contact_jacobian_matches_fd_motion():
    model = robot("hexapod.json")
    rng = np.random.default_rng(5)
    lo = np.array([p.lower for p in model.parameters])
    hi = np.array([p.upper for p in model.parameters])
    h = 1e-6
    for _ in range(20):
        q = rng.uniform(-0.5, 0.5, model.n)
        qd = rng.uniform(-1, 1, model.n)
        rho = list(rng.uniform(lo, hi))
        states = contact_kinematics(model, Terrain(), list(q), list(qd), rho)
        plus = contact_kinematics(model, Terrain(), list(q + h * qd), list(qd), rho)
        minus = contact_kinematics(model, Terrain(), list(q - h * qd), list(qd), rho)
        for s, a, b in zip(states, plus, minus):
            v_fd = (arr(a.position) - arr(b.position)) / (2 * h)
            assert np.allclose(arr(s.jacobian) @ qd, v_fd, atol=1e-6)
            assert np.allclose(s.psi, v_fd[:2], atol=1e-6)


# -- forward dynamics ----------------------------------------------------------------------
def test_free_point_mass_thrust():
    m = 1.5
    model = point_mass(m)
    _, qdd = forward_dynamics(model, [0.0], [0.0], [20.0], [0.0] * 6, [])
    assert qdd[0] == pytest.approx(20.0 / m - GRAVITY)


def test_pendulum_at_rest_in_equilibrium():
    _, qdd = forward_dynamics(pendulum(), [0.0], [0.0], [0.0], [0.0] * 6, [1.0])
    assert qdd[0] == pytest.approx(0.0, abs=1e-14)


def test_point_mass_resting_on_ground():
    m = 1.5
    model = point_mass(m)
    lam = [m * GRAVITY, 0, 0, 0, 0, 0]
    _, qdd = forward_dynamics(model, [0.0], [0.0], [0.0], lam, [], terrain=Terrain())
    assert qdd[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name", ["hexapod.json", "biped.json", "quadruped.json", "hopper.json"])
def test_forward_dynamics_satisfies_manipulator_equation(name):
    from codesign.dynamics import generalized_forces
    from codesign.dynamics.rbd import _fk

    model = robot(name)
    rng = np.random.default_rng(6)
    for _ in range(5):
        q = list(rng.uniform(-0.5, 0.5, model.n))
        qd = list(rng.uniform(-1, 1, model.n))
        u = list(rng.uniform(-1, 1, model.m))
        lam = list(rng.uniform(0, 2, 6 * model.l))
        rho = list(model.rho0)
        _, qdd = forward_dynamics(model, q, qd, u, lam, rho, terrain=Terrain())
        env = model.param_env(rho)
        tau = arr(generalized_forces(model, _fk(model, q, env), env, u, lam, Terrain()))
        residual = arr(inverse_dynamics(model, q, qd, qdd, rho)) - tau
        assert np.abs(residual).max() <= 1e-9
