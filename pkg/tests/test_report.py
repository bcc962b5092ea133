import numpy as np
import pytest

from phca.report import bestobj_improvement, comparison_rows, format_table, history_rows, nfuncall_improvement
from phca.solvers import Query, SolveTrace


def _trace(objs, method="x"):
    tr = SolveTrace(method)
    for k, o in enumerate(objs):
        tr.record(Query(np.array([float(k)]), 0.0, o, float(k), None))
    return tr


def test_improvement_arithmetic():
    # a BayesOpt best of 8.2693 against a baseline of 8.4539 is a 2.18 % loss
    assert bestobj_improvement(8.2693, 8.4539) == pytest.approx(-2.1836, abs=1e-4)
    assert bestobj_improvement(9.2312, 3.0) == pytest.approx(207.7067, abs=1e-4)
    assert nfuncall_improvement(30, 100) == 70.0
    assert bestobj_improvement(0.0, 0.0) == 0.0


def test_negative_baseline_uses_magnitude():
    assert bestobj_improvement(1.0, -1.0) == 200.0


def test_rows_and_history():
    a, b = _trace([1.0, 3.0, 2.0], "bo"), _trace([0.5, 1.5, 1.0, 1.5], "pat")
    assert history_rows(a) == [(1, 1.0, 0.0), (2, 3.0, 0.0), (3, 3.0, 0.0)]
    (row,) = comparison_rows(a, {"pat": b})
    assert row["improvement_bestobj_pct"] == 100.0
    assert row["improvement_nfuncall_pct"] == 25.0


def test_format_table_aligns():
    text = format_table(["a", "bb"], [[1.0, "x"], [22, "yyy"]])
    lines = text.splitlines()
    assert len({len(l) for l in lines}) == 1
    assert "1.0000" in lines[2]
