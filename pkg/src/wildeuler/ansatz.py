"""
Convex-integration data built from a smooth solution (rho~, m~):

    H = m~⊗m~/rho~ - (1/d)|m~|²/rho~ I       (traceless flux)
    e = ½|m~|²/rho~ + Λ(t)                    (kinetic-energy target)

with a spatially homogeneous energy profile Λ.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .fields import sym_identity, sym_outer
from .solver import _bracket


class ProfileError(ValueError):
    """The energy profile violates positivity, monotonicity or consistency."""


@dataclass(frozen=True)
class EnergyProfile:
    """Λ(t) together with its derivative, both evaluated analytically."""

    lam: Callable
    dlam: Callable
    kind: str
    eps: Optional[float] = None

    def __call__(self, t):
        return self.lam(t)

    def derivative(self, t):
        return self.dlam(t)

    @classmethod
    def exponential(cls, eps):
        """Λ(t) = eps * exp(-t / eps²)."""
        if eps <= 0:
            raise ProfileError(f"eps must be positive, got {eps}")
        eps = float(eps)

        def lam(t):
            return eps * np.exp(-np.asarray(t, dtype=float) / eps ** 2)

        def dlam(t):
            return -np.exp(-np.asarray(t, dtype=float) / eps ** 2) / eps

        return cls(lam, dlam, "exponential", eps)

    @classmethod
    def from_pair(cls, lam, dlam, t_sample, kind="user"):
        """Wrap a user C¹ pair after checking it against central differences."""
        t = np.asarray(t_sample, dtype=float)
        h = 1e-4 * max(1.0, float(np.ptp(t)))
        # Richardson-extrapolated central difference, O(h⁴)
        d1 = (lam(t + h) - lam(t - h)) / (2 * h)
        d2 = (lam(t + h / 2) - lam(t - h / 2)) / h
        fd = (4 * d2 - d1) / 3
        err = float(np.max(np.abs(np.asarray(dlam(t)) - fd)))
        if err > 1e-6:
            raise ProfileError(f"derivative inconsistent with profile (max error {err:.3g})")
        if np.any(np.asarray(dlam(t)) > 0):
            raise ProfileError("profile must be nonincreasing")
        return cls(lam, dlam, kind)

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(lambda t: np.full(np.shape(t), value) if np.ndim(t) else value,
                   lambda t: np.zeros(np.shape(t)) if np.ndim(t) else 0.0, "constant")

    @classmethod
    def table(cls, t, lam, dlam):
        """C¹ Hermite interpolant of tabulated (t, Λ, Λ') samples."""
        spline = CubicHermiteSpline(np.asarray(t, float), np.asarray(lam, float),
                                    np.asarray(dlam, float), extrapolate=False)
        dspline = spline.derivative()
        t = np.asarray(t, float)
        inner = np.linspace(t[0], t[-1], 201)[1:-1]
        return cls.from_pair(spline, dspline, inner, kind="user-table")

    def check_positive(self, times):
        lam = np.asarray(self.lam(np.asarray(times, dtype=float)))
        if np.any(~(lam > 0)):
            raise ProfileError("energy profile must be positive on [0, T]")


def build_H(state):
    """Traceless part of m~⊗m~/rho~, packed."""
    d = state.grid.d
    k = np.sum(state.m ** 2, axis=0) / state.rho
    return sym_outer(state.m) / state.rho - sym_identity(d, state.grid.shape) * (k / d)


def kinetic_energy(state):
    return 0.5 * np.sum(state.m ** 2, axis=0) / state.rho


def build_e(state, prof, t):
    lam = float(prof(t))
    if not lam > 0:
        raise ProfileError(f"Λ({t}) = {lam} is not positive")
    return kinetic_energy(state) + lam


@dataclass
class AnsatzFields:
    """H and e sampled at the trajectory cadence."""

    times: np.ndarray
    H: np.ndarray
    e: np.ndarray
    solution: object
    profile: EnergyProfile

    def at(self, t):
        """(H, e) at time t; linear in time between snapshots."""
        i, w = _bracket(self.times, t)
        if w == 0.0:
            return self.H[i], self.e[i]
        return ((1 - w) * self.H[i] + w * self.H[i + 1],
                (1 - w) * self.e[i] + w * self.e[i + 1])


def build_ansatz(sol, prof, check_positive=True):
    """H and e along a smooth solution.

    ``check_positive=False`` admits nonpositive profiles, used only to probe the
    degenerate boundary Λ ≡ 0.
    """
    if check_positive:
        prof.check_positive(sol.times)
    Hs, es = [], []
    for i, t in enumerate(sol.times):
        st = sol.state(i)
        Hs.append(build_H(st))
        es.append(kinetic_energy(st) + float(prof(t)))
    return AnsatzFields(np.asarray(sol.times), np.array(Hs), np.array(es), sol, prof)


def reformulation_gap(v, state):
    """Sup-norm of the divergence of the flux difference between the two forms
    of the v-equation (with and without the (1/d)|·|²/rho trace terms).

    The difference is a pure trace (1/d)(|v+m~|² - |m~|²)/rho I, so the gap
    vanishes when |v+m~|²/rho~ is spatially constant up to the m~ part.
    """
    g = state.grid
    d = g.d
    w = v + state.m
    flux_plain = (sym_outer(w) - sym_outer(state.m)) / state.rho
    trace_part = (np.sum(w ** 2, axis=0) - np.sum(state.m ** 2, axis=0)) / (d * state.rho)
    flux_traceless = flux_plain - sym_identity(d, g.shape) * trace_part
    return float(np.max(np.abs(g.tensor_div(flux_plain - flux_traceless))))
