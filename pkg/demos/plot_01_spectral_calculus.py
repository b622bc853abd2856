"""
Spectral calculus on the torus
==============================

Fields live on a uniform grid over [-1, 1]^d and are differentiated in
Fourier space. This script checks a few identities numerically.
"""

import numpy as np

from wildeuler.fields import TorusGrid, lp_norm, sobolev_norm

grid = TorusGrid(2, 32)
x1, x2 = grid.x

# derivatives of trigonometric data are exact up to roundoff
f = np.sin(np.pi * x1) * np.cos(2 * np.pi * x2)
df = grid.diff(f, 0)
print("max |d1 f - exact| =", np.max(np.abs(df - np.pi * np.cos(np.pi * x1) * np.cos(2 * np.pi * x2))))

# div(grad f) and the spectral Laplacian agree
print("max |div grad f - lap f| =", np.max(np.abs(grid.div(grid.grad(f)) - grid.laplacian(f))))

# a single Fourier mode has L2 norm sqrt(|T^2| / 2) = sqrt(2)
print("||cos(pi x1)||_2 =", lp_norm(np.cos(np.pi * x1), grid), "vs", np.sqrt(2))

# Sobolev norms weigh high frequencies more
for k in (0, 1, 2):
    print(f"||f||_H{k} =", sobolev_norm(f, grid, k))
