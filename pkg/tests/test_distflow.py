import numpy as np
import pytest
from scipy.optimize import brentq

from phca.distflow import (
    TOL,
    batch_feasible,
    check_limits,
    distflow_residuals,
    solve_batch,
    solve_distflow,
)
from phca.network import injection_vectors

from conftest import random_radial, two_node


def scalar_oracle(r, x, v0, p, q):
    """Two-node DistFlow reduced to one equation in the loss variable l.

    With P = r l - p and Q = x l - q, l v0 = P^2 + Q^2 is a quadratic whose
    smaller root is the physical branch; brentq finds it on [0, vertex].
    """
    g = lambda l: (r * l - p) ** 2 + (x * l - q) ** 2 - v0 * l
    vertex = (2 * r * p + 2 * x * q + v0) / (2 * (r * r + x * x))
    l = brentq(g, 0.0, vertex, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    P, Q = r * l - p, x * l - q
    v1 = v0 - 2 * (r * P + x * Q) - (r * r + x * x) * l
    return P, Q, v1, l


@pytest.mark.parametrize("p, q", [(-0.1, -0.03), (0.4, 0.0), (-0.8, 0.2), (1.5, 0.5)])
def test_two_node_matches_scalar_oracle(p, q):
    r, x, v0 = 0.01, 0.02, 1.0
    sol = solve_distflow(two_node(r, x, v0=v0), [p], [q])
    assert sol.converged
    P, Q, v1, l = scalar_oracle(r, x, v0, p, q)
    assert abs(sol.P[0] - P) <= 1e-9
    assert abs(sol.Q[0] - Q) <= 1e-9
    assert abs(sol.v[1] - v1) <= 1e-9
    assert abs(sol.l[0] - l) <= 1e-9
    assert sol.v[0] == v0


def test_zero_injection_is_flat():
    sol = solve_distflow(two_node(), [0.0], [0.0])
    assert sol.converged
    assert sol.v[1] == 1.0 and sol.P[0] == 0.0 and sol.l[0] == 0.0


def test_overload_reports_nonconvergence():
    sol = solve_distflow(two_node(), [-100.0], [0.0])
    assert not sol.converged
    rep = check_limits(two_node(), sol)
    assert not rep.feasible


def test_random_radial_residuals():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        n = int(rng.integers(5, 57))
        net = random_radial(rng, n)
        p = rng.uniform(-0.05, 0.03, n - 1)
        q = rng.uniform(-0.02, 0.01, n - 1)
        sol = solve_distflow(net, p, q)
        assert sol.converged
        assert distflow_residuals(net, sol, p, q) <= 1e-8


def test_batch_rows_independent(net6, scen6):
    day = scen6.days[4]
    p, q = injection_vectors(net6, [1.0, 1.5], day.alpha, day.d, day.e)
    bf = solve_batch(net6, p, q)
    for t in (0, 11, 23):
        single = solve_batch(net6, p[t : t + 1], q[t : t + 1])
        np.testing.assert_array_equal(bf.v[t], single.v[0])
        np.testing.assert_array_equal(bf.P[t], single.P[0])
        assert bf.iterations[t] == single.iterations[0]


def test_residual_tolerance_reached(net6):
    p = np.array([-0.02, -0.02, 0.8, -0.02, 1.2])
    q = -0.3 * np.abs(p)
    sol = solve_distflow(net6, p, q)
    assert sol.converged and sol.residual <= TOL
    assert distflow_residuals(net6, sol, p, q) <= 1e-9


def test_check_limits_flags_overvoltage(net6):
    p = np.array([0.0, 0.0, 0.0, 0.0, 3.0])
    sol = solve_distflow(net6, p, np.zeros(5))
    rep = check_limits(net6, sol)
    assert sol.converged
    assert not rep.feasible
    assert any(j == 5 for j, _, _ in rep.voltage_violations)
    # s^2 = 9 > s_max^2 = 4 on the line into node 5
    assert rep.line_violations


def test_batch_feasible_agrees_with_check_limits(net6, scen6):
    day = scen6.days[0]
    for psi in ([0.2, 0.5], [1.2, 2.0], [0.8, 1.4]):
        p, q = injection_vectors(net6, psi, day.alpha, day.d, day.e)
        flags = batch_feasible(net6, solve_batch(net6, p, q))
        for t in range(day.T):
            assert flags[t] == check_limits(net6, solve_distflow(net6, p[t], q[t])).feasible


def test_limits_are_inclusive():
    net = two_node(r=0.0, x=0.01, s_max=0.5)
    sol = solve_distflow(net, [0.5], [0.0])
    # line flow magnitude equals the rating exactly only if losses vanish; use the report
    s = np.hypot(sol.P[0], sol.Q[0])
    net_exact = two_node(r=0.0, x=0.01, s_max=float(s))
    assert check_limits(net_exact, sol).line_violations == []


def test_to_dict_round_trip(net6):
    sol = solve_distflow(net6, -0.01 * np.ones(5), np.zeros(5))
    d = sol.to_dict()
    assert d["converged"] is True and len(d["v"]) == 6 and len(d["P"]) == 5
