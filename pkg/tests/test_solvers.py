import json

import numpy as np
import pytest

from phca import solvers
from phca.risk import penalized_objective
from phca.solvers import (
    DUPLICATE_TOL,
    SolveConfig,
    SolveTrace,
    grid_search,
    solve,
    solve_bayesopt,
    solve_pattern,
)


@pytest.fixture(scope="module")
def small(net6, scen6):
    return net6, scen6.subset(range(1, 9))


def _check_trace(trace, net, budget=None):
    hi = np.asarray(net.psi_max)
    for q in trace.queries:
        assert np.all(q.psi >= 0) and np.all(q.psi <= hi)
    assert np.all(np.diff(trace.best_obj) >= 0)
    assert trace.best_obj == list(np.maximum.accumulate([q.objective for q in trace.queries]))
    if budget is not None:
        assert trace.nfuncall == budget


def test_bayesopt_budget_and_invariants(small):
    net, scen = small
    tr = solve_bayesopt(net, scen, SolveConfig(budget=10, seed=3))
    _check_trace(tr, net, 10)
    U = np.array([q.psi for q in tr.queries]) / np.asarray(net.psi_max)
    d = np.abs(U[:, None, :] - U[None, :, :]).max(axis=2) + np.eye(len(U))
    assert d.min() > DUPLICATE_TOL


def test_bayesopt_one_step_fits_once(small, monkeypatch):
    net, scen = small
    calls = []
    real_fit = solvers.fit
    monkeypatch.setattr(solvers, "fit", lambda *a, **k: calls.append(1) or real_fit(*a, **k))
    tr = solve_bayesopt(net, scen, SolveConfig(budget=5, n_initial=4, seed=0))
    assert tr.nfuncall == 5 and len(calls) == 1


def test_bayesopt_is_deterministic(small):
    net, scen = small
    cfg = SolveConfig(budget=9, seed=11)
    a = solve_bayesopt(net, scen, cfg).to_dict()
    b = solve_bayesopt(net, scen, cfg).to_dict()
    assert json.dumps(a) == json.dumps(b)


def test_best_point_reproduces(small):
    net, scen = small
    tr = solve_bayesopt(net, scen, SolveConfig(budget=8, seed=1))
    res = penalized_objective(net, scen, tr.best_psi, 0.05)
    assert res.objective == tr.best
    if tr.best == float(np.sum(tr.best_psi)):
        assert res.eps_hat <= 0.05


def test_pattern_converges_on_unconstrained_box(net6, scen6):
    # a tiny box is feasible everywhere, so c = 1'psi and the optimum is the corner
    from dataclasses import replace

    net = replace(net6, psi_max=(0.2, 0.3))
    tr = solve_pattern(net, scen6.subset([1, 2]), SolveConfig(method="pattern", budget=200, x0=(0.05, 0.05)))
    _check_trace(tr, net)
    np.testing.assert_allclose(tr.best_psi, [0.2, 0.3], atol=1e-3 * 0.3)


def test_pattern_starts_at_x0_and_respects_budget(small):
    net, scen = small
    tr = solve_pattern(net, scen, SolveConfig(method="pattern", budget=7, x0=(0.1, 0.2)))
    np.testing.assert_array_equal(tr.queries[0].psi, [0.1, 0.2])
    _check_trace(tr, net, 7)


def test_grid_counts_and_generous_box(net6, scen6):
    from dataclasses import replace

    tr = grid_search(net6, scen6.subset([1]), SolveConfig(method="grid"), points_per_dim=2)
    assert tr.nfuncall == 4
    gen = replace(net6, psi_max=(0.1, 0.1))
    g = grid_search(gen, scen6.subset([1, 2]), SolveConfig(method="grid"), points_per_dim=3)
    assert g.best == pytest.approx(0.2) and np.allclose(g.best_psi, [0.1, 0.1])


def test_grid_dimension_guard(net6, scen6):
    from dataclasses import replace

    from phca.network import Node

    wide = replace(net6, candidates=(2, 3, 4, 5), psi_max=(1.0,) * 4, eta=(0.0,) * 4)
    with pytest.raises(ValueError, match="limited to 3"):
        grid_search(wide, scen6, SolveConfig(method="grid"), 2)


def test_config_checks(small):
    net, scen = small
    with pytest.raises(ValueError):
        solve_bayesopt(net, scen, SolveConfig(budget=4))
    with pytest.raises(ValueError):
        solve(net, scen, SolveConfig(method="nope"))
    with pytest.raises(ValueError):
        solve_pattern(net, scen, SolveConfig(method="pattern", eps_bar=1.5))


def test_trace_round_trip(tmp_path, small):
    net, scen = small
    tr = solve_pattern(net, scen, SolveConfig(method="pattern", budget=5, seed=2))
    path = tmp_path / "t.json"
    tr.save(path)
    data = json.loads(path.read_text())
    assert all(q["elapsed_ms"] is None for q in data["queries"])
    assert data["summary"]["nfuncall"] == 5
    back = SolveTrace.load(path)
    assert back.best_obj == tr.best_obj
    tr.save(path, timing=True)
    assert all(q["elapsed_ms"] >= 0 for q in json.loads(path.read_text())["queries"])


def test_trace_rejects_garbage():
    with pytest.raises(ValueError):
        SolveTrace.from_dict({"queries": [{"psi": [1]}]})
    with pytest.raises(ValueError):
        SolveTrace.from_dict({"queries": []})
