"""Barotropic pressure laws and the pressure potential P with P'(r) r - P(r) = p(r)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate


class DensityDomainError(ValueError):
    """Density left the validity interval (a, b) of the pressure law."""


@dataclass(frozen=True)
class PressureLaw:
    """Pressure p(rho) valid on the open interval (a, b).

    ``potential`` is an optional closed form for P, normalized so that
    P(rho_ref) = 0. Without it, :func:`pressure_potential` integrates.
    """

    p: Callable
    dp: Callable
    a: float = 0.0
    b: float = np.inf
    rho_ref: float = 1.0
    potential: Optional[Callable] = None
    name: str = "custom"

    def __post_init__(self):
        if not (0.0 <= self.a < self.b):
            raise ValueError(f"need 0 <= a < b, got a={self.a}, b={self.b}")
        if not (self.a < self.rho_ref < self.b):
            raise ValueError("rho_ref must lie inside (a, b)")

    def contains(self, rho):
        rho = np.asarray(rho)
        return bool(np.all((rho > self.a) & (rho < self.b)))

    def require(self, rho):
        if not self.contains(rho):
            rho = np.asarray(rho)
            raise DensityDomainError(
                f"density range [{rho.min():.6g}, {rho.max():.6g}] "
                f"outside ({self.a}, {self.b})")

    def check_hyperbolic(self, samples=200):
        """Return True if p' > 0 at ``samples`` points spread over (a, b)."""
        hi = self.b if np.isfinite(self.b) else max(10.0 * self.rho_ref, self.a + 10.0)
        r = np.linspace(self.a, hi, samples + 2)[1:-1]
        return bool(np.all(np.asarray(self.dp(r)) > 0))

    def sound_speed(self, rho):
        return np.sqrt(self.dp(rho))


def gamma_law(kappa=1.0, gamma=2.0, a=0.0, b=np.inf, rho_ref=1.0):
    """p = kappa * rho**gamma; gamma = 1 is the isothermal law."""
    if kappa <= 0 or gamma < 1:
        raise ValueError("gamma law needs kappa > 0 and gamma >= 1")

    def p(r):
        return kappa * np.asarray(r, dtype=float) ** gamma

    def dp(r):
        return kappa * gamma * np.asarray(r, dtype=float) ** (gamma - 1.0)

    if gamma == 1.0:
        def potential(r):
            r = np.asarray(r, dtype=float)
            return kappa * r * np.log(r / rho_ref)
    else:
        def potential(r):
            r = np.asarray(r, dtype=float)
            return kappa * (r ** gamma - r * rho_ref ** (gamma - 1.0)) / (gamma - 1.0)

    return PressureLaw(p, dp, a, b, rho_ref, potential, name=f"gamma_law(kappa={kappa}, gamma={gamma})")


def table_law(rho_samples, p_samples, rho_ref=1.0):
    """Pressure from tabulated samples via a cubic spline; valid strictly inside the table."""
    rho_samples = np.asarray(rho_samples, dtype=float)
    p_samples = np.asarray(p_samples, dtype=float)
    if rho_samples.ndim != 1 or rho_samples.size < 4 or np.any(np.diff(rho_samples) <= 0):
        raise ValueError("table needs at least 4 strictly increasing density samples")
    spline = interpolate.CubicSpline(rho_samples, p_samples)
    dspline = spline.derivative()
    law = PressureLaw(lambda r: spline(np.asarray(r, dtype=float)),
                      lambda r: dspline(np.asarray(r, dtype=float)),
                      float(rho_samples[0]), float(rho_samples[-1]), rho_ref, None, name="table")
    if not law.check_hyperbolic():
        raise ValueError("tabulated pressure is not strictly increasing")
    return law


def _potential_quad(law, r):
    val, _ = integrate.quad(lambda s: float(law.p(s)) / s ** 2, law.rho_ref, r,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return r * val


def pressure_potential(law, rho):
    """P(rho) = rho * ∫_{rho_ref}^{rho} p(s)/s² ds.

    Uses the law's closed form when present, adaptive quadrature otherwise.
    Raises :class:`DensityDomainError` outside (a, b).
    """
    law.require(rho)
    if law.potential is not None:
        out = law.potential(rho)
    else:
        out = np.vectorize(lambda r: _potential_quad(law, r), otypes=[float])(rho)
    return float(out) if np.ndim(out) == 0 else out
