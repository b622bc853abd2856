"""
Energy window and closeness budget
==================================

With the exponential profile eps * exp(-t / eps^2), the worst-case energy
residual is negative on an initial interval [0, T_w]. The same eps sets the
size of the perturbation through the choice of the initial profile value.
"""

import numpy as np

from wildeuler.admissibility import budget_report, first_nonempty_eps, wild_window
from wildeuler.ansatz import EnergyProfile, build_ansatz
from wildeuler.fields import FlowState, TorusGrid
from wildeuler.pressure import gamma_law
from wildeuler.solver import SolverConfig, solve_smooth

law = gamma_law(1.0, 2.0)
grid = TorusGrid(2, 64)
r2 = np.sum(grid.x ** 2, axis=0)
data = FlowState(grid, 1 + 0.5 * np.exp(-r2 / (2 * 0.25 ** 2)), np.zeros((2,) + grid.shape))
sol = solve_smooth(data, law, SolverConfig(t_end=0.1))


def window(eps):
    prof = EnergyProfile.exponential(eps)
    return wild_window(sol, build_ansatz(sol, prof), law, prof)


eps, win, tried = first_nonempty_eps(window, eps0=0.2)
print("first eps with a nonempty window:", eps, "T_w =", win.T_w)
for e in (0.1, 0.05):
    print(f"eps={e}: T_w = {window(e).T_w}")

rep = budget_report(0.1, sol.state(0), (1, 0), (0, 1), (2, 4, 8, 16))
print("Lambda(0) =", rep.lambda0, "predicted ||v||_2 =", rep.predicted_l2)
print("measured:", {N: round(v, 6) for N, v in rep.measured.items()}, "N0 =", rep.N0)
