"""
Subsolutions around a smooth flow
=================================

The zero field is a strict subsolution whenever the energy profile is
positive. Modulated plane waves with a compensating flux give nontrivial
ones; their admissible amplitude is found by a verified line search.
"""

import numpy as np

from wildeuler.ansatz import EnergyProfile, build_ansatz
from wildeuler.fields import FlowState, TorusGrid
from wildeuler.pressure import gamma_law
from wildeuler.solver import SolverConfig, solve_smooth
from wildeuler.subsolution import (SubsolutionCandidate, max_amplitude_search,
                                   plane_wave_candidate, subsolution_margin)

law = gamma_law(1.0, 2.0)
grid = TorusGrid(2, 32)
r2 = np.sum(grid.x ** 2, axis=0)
data = FlowState(grid, 1 + 0.3 * np.exp(-r2 / (2 * 0.25 ** 2)), np.zeros((2,) + grid.shape))
sol = solve_smooth(data, law, SolverConfig(t_end=0.05))

ans = build_ansatz(sol, EnergyProfile.constant(0.2))
zero = subsolution_margin(SubsolutionCandidate.zero(grid, sol.times), ans, sol)
print("zero candidate margin:", zero.margin_min, zero.to_dict()["verdict"])

for N in (2, 4, 8):
    search = max_amplitude_search((1, 1), (1.0, -1.0), N, ans, sol, 0.5, samples=8)
    cand = plane_wave_candidate((1, 1), (1.0, -1.0), N, search.A_star, grid, sol.times)
    rep = subsolution_margin(cand, ans, sol)
    print(f"N={N}: A* = {search.A_star:.4f}, margin {rep.margin_min:.4f}, "
          f"sup|v| {rep.sup_v:.4f} <= {rep.bound:.4f}")
