"""Comparison arithmetic and convergence histories for solver traces."""

from __future__ import annotations

import csv
import os

from .solvers import SolveTrace

__all__ = ["bestobj_improvement", "nfuncall_improvement", "history_rows", "write_history_csv", "comparison_rows", "format_table"]


def bestobj_improvement(ours: float, theirs: float) -> float:
    """Percent by which ``ours`` beats ``theirs`` (negative when worse)."""
    if theirs == 0:
        return 0.0 if ours == 0 else float("inf") * (1 if ours > 0 else -1)
    return 100.0 * (ours - theirs) / abs(theirs)


def nfuncall_improvement(ours: int, theirs: int) -> float:
    """Percent fewer objective evaluations used by ``ours``."""
    return 100.0 * (theirs - ours) / theirs


def history_rows(trace: SolveTrace) -> list[tuple]:
    return [(i + 1, b, q.eps_hat) for i, (q, b) in enumerate(zip(trace.queries, trace.best_obj))]


def write_history_csv(trace: SolveTrace, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "best_obj", "eps_hat"])
        for row in history_rows(trace):
            w.writerow([row[0], repr(row[1]), repr(row[2])])
    os.replace(tmp, path)


def comparison_rows(reference: SolveTrace, others: dict) -> list[dict]:
    rows = []
    for name, tr in others.items():
        rows.append(
            {
                "versus": name,
                "bestobj_ref": reference.best,
                "bestobj_other": tr.best,
                "improvement_bestobj_pct": bestobj_improvement(reference.best, tr.best),
                "nfuncall_ref": reference.nfuncall,
                "nfuncall_other": tr.nfuncall,
                "improvement_nfuncall_pct": nfuncall_improvement(reference.nfuncall, tr.nfuncall),
            }
        )
    return rows


def format_table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)
