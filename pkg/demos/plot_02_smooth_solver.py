"""
Smooth solutions and their diagnostics
======================================

A small acoustic pulse is compared against the linear wave solution, and a
steepening shear-free flow is run until the blow-up proxies trigger.
"""

import numpy as np

from wildeuler.fields import FlowState, TorusGrid
from wildeuler.pressure import gamma_law
from wildeuler.solver import SolverConfig, solve_smooth, total_energy_profile

law = gamma_law(1.0, 2.0)  # p = rho^2, sound speed sqrt(2) at rho = 1
grid = TorusGrid(2, 64)
x1 = grid.x[0]

amp = 1e-4
rho0 = 1 + amp * np.cos(np.pi * x1)
sol = solve_smooth(FlowState(grid, rho0, np.zeros((2,) + grid.shape)), law, SolverConfig(t_end=0.2))

c = np.sqrt(2.0)
rho_lin = 1 + amp * np.cos(np.pi * x1) * np.cos(c * np.pi * 0.2)
print("snapshots:", len(sol), "t_reached:", sol.t_reached)
print("error vs linear wave:", np.max(np.abs(sol.rho[-1] - rho_lin)))
print("energy drift:", total_energy_profile(sol, law).drift)

# a compressive velocity profile steepens; the solver stops and says why
m = np.stack([0.5 * np.sin(np.pi * x1), np.zeros(grid.shape)])
sol = solve_smooth(FlowState(grid, np.ones(grid.shape), m), law, SolverConfig(t_end=3.0))
print("blow-up:", sol.blowup_flag, sol.blowup_reason, "at t =", sol.t_reached)
