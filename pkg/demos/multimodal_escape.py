"""Global versus local search on an L-shaped feasible region.

The multimodal fixture has two laterals. One clear day limits DER 1 and
another limits DER 2, so the admissible region is an "L": either DER 1
stays small, or DER 2 stays below its own limit. Pattern search that starts
in the narrow arm climbs to the end of that arm and stops. Bayesian
optimization explores the whole box and finds the wide arm.

Run:  python demos/multimodal_escape.py
"""

import numpy as np

from phca.fixtures import MULTIMODAL_EPS_BAR, MULTIMODAL_START, multimodal
from phca.solvers import SolveConfig, grid_search, solve_bayesopt, solve_pattern

BUDGET = 40


def ascii_map(trace, lattice, hi, width=41):
    """Feasibility map of the lattice, with the query points overlaid."""
    obj = {tuple(np.round(q.psi, 6)): q.objective for q in lattice.queries}
    ppd = int(round(len(lattice.queries) ** 0.5))
    axis = np.linspace(0, hi[1], ppd)
    rows = []
    for y in axis[::-1][:: max(1, ppd // 20)]:
        line = ""
        for x in axis[:: max(1, ppd // width)]:
            line += "." if obj[(round(x, 6), round(y, 6))] == x + y else " "
        rows.append(line)
    grid = [list(r) for r in rows]
    ny, nx = len(grid), len(grid[0])
    for q in trace.queries:
        i = ny - 1 - int(round(q.psi[1] / hi[1] * (ny - 1)))
        j = int(round(q.psi[0] / hi[0] * (nx - 1)))
        grid[i][j] = "o"
    return "\n".join("".join(r) for r in grid)


def main():
    net, scen = multimodal()
    eps = MULTIMODAL_EPS_BAR
    lattice = grid_search(net, scen, SolveConfig(method="grid", eps_bar=eps), points_per_dim=51)
    pat = solve_pattern(net, scen, SolveConfig(method="pattern", budget=BUDGET, x0=MULTIMODAL_START, eps_bar=eps))
    bo = solve_bayesopt(net, scen, SolveConfig(budget=BUDGET, seed=7, eps_bar=eps))

    print(f"lattice optimum   c = {lattice.best:.4f} at {np.round(lattice.best_psi, 3)}")
    print(f"pattern search    c = {pat.best:.4f} at {np.round(pat.best_psi, 3)} "
          f"(stopped after {pat.nfuncall} of {BUDGET} evaluations)")
    print(f"bayesopt          c = {bo.best:.4f} at {np.round(bo.best_psi, 3)}")
    print("\nfeasible lattice points ('.') and pattern-search queries ('o'); x = psi_1, y = psi_2")
    print(ascii_map(pat, lattice, net.psi_max))
    print("\nsame map with the bayesopt queries")
    print(ascii_map(bo, lattice, net.psi_max))


if __name__ == "__main__":
    main()
