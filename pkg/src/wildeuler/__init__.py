"""
wildeuler
=========

Desk-scale numerics for convex-integration constructions on the barotropic
Euler system on the torus [-1, 1]^d:

 fields         -- torus grids, spectral calculus, Lp and Sobolev norms
 pressure       -- barotropic pressure laws and their potentials
 wef            -- WEF1 field snapshot files
 solver         -- pseudo-spectral RK4 smooth solutions, weak residuals
 ansatz         -- traceless flux H, energy target e, energy profiles
 eigen          -- closed-form largest eigenvalues (d = 2, 3)
 subsolution    -- subsolution margins and plane-wave candidates
 admissibility  -- energy residual, wild window, L^p budget
 pipeline, cli  -- reproducible runs from a config file
"""
__version__ = "0.1.0"
