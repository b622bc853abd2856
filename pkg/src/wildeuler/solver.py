"""
Local smooth solutions of the barotropic Euler system in conservative form,

    d_t rho + div m = 0,
    d_t m + div(m⊗m/rho + p(rho) I) = 0,

by a 2/3-dealiased pseudo-spectral discretization and classical RK4, plus
weak-form residuals and the total-energy diagnostic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import FlowState, TorusGrid, sobolev_norm, sym_index, sym_outer
from .pressure import DensityDomainError, pressure_potential


@dataclass
class SolverConfig:
    cfl: float = 0.4
    dealias: bool = True
    k_monitor: Optional[int] = None
    blowup_factor: float = 1e3
    t_end: float = 0.1
    snap_every: int = 1
    dt: Optional[float] = None  # fixed step; overrides the CFL rule
    tail_limit: float = 0.01

    def validate(self, d):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.snap_every < 1:
            raise ValueError("snap_every must be >= 1")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        k = self.monitor_index(d)
        if not k > d / 2 + 1:
            raise ValueError(f"k_monitor={k} must exceed d/2 + 1 = {d / 2 + 1}")

    def monitor_index(self, d):
        if self.k_monitor is not None:
            return int(self.k_monitor)
        return math.floor(d / 2 + 1) + 1


@dataclass
class SmoothSolution:
    """Trajectory of snapshots plus run diagnostics.

    ``rho`` has shape ``(nsnap, *grid.shape)``, ``m`` has shape
    ``(nsnap, d, *grid.shape)``. ``norm_history`` rows are
    ``(t, |rho|_{W^{k,2}}, |m|_{W^{k,2}})`` for every accepted step.
    """

    grid: TorusGrid
    times: np.ndarray
    rho: np.ndarray
    m: np.ndarray
    t_reached: float
    blowup_flag: bool = False
    blowup_reason: str = ""
    norm_history: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    dt_history: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return FlowState(self.grid, self.rho[i], self.m[i], float(self.times[i]))

    @property
    def trajectory(self):
        return [self.state(i) for i in range(len(self))]

    def state_at(self, t):
        """Linear interpolation between bracketing snapshots."""
        i, w = _bracket(self.times, t)
        if w == 0.0:
            return self.state(i)
        rho = (1 - w) * self.rho[i] + w * self.rho[i + 1]
        m = (1 - w) * self.m[i] + w * self.m[i + 1]
        return FlowState(self.grid, rho, m, float(t))


def _bracket(times, t):
    """Return (i, w) with t = (1-w) times[i] + w times[i+1]."""
    if t < times[0] - 1e-14 or t > times[-1] + 1e-14:
        raise ValueError(f"t={t} outside trajectory [{times[0]}, {times[-1]}]")
    i = int(np.searchsorted(times, t, side="right")) - 1
    i = min(max(i, 0), len(times) - 1)
    if i == len(times) - 1 or t == times[i]:
        return i, 0.0
    return i, float((t - times[i]) / (times[i + 1] - times[i]))


def momentum_flux(rho, m, law):
    """Packed m⊗m/rho + p(rho) I."""
    d = m.shape[0]
    S = sym_outer(m) / rho
    pr = law.p(rho)
    for i in range(d):
        S[sym_index(i, i, d)] += pr
    return S


def euler_rhs(state, law, dealias=True):
    """Time derivatives (d rho/dt, d m/dt) of a flow state.

    Raises :class:`DensityDomainError` if the density leaves (a, b).
    """
    law.require(state.rho)
    g = state.grid
    drho = -g.div(state.m, dealias=dealias)
    dm = -g.tensor_div(momentum_flux(state.rho, state.m, law), dealias=dealias)
    return drho, dm


def max_wavespeed(rho, m, law):
    u = np.sqrt(np.sum((m / rho) ** 2, axis=0))
    return float(np.max(u + law.sound_speed(rho)))


def _rk4(grid, rho, m, dt, law, dealias):
    def f(r, q):
        return euler_rhs(FlowState(grid, r, q), law, dealias)

    k1r, k1m = f(rho, m)
    k2r, k2m = f(rho + 0.5 * dt * k1r, m + 0.5 * dt * k1m)
    k3r, k3m = f(rho + 0.5 * dt * k2r, m + 0.5 * dt * k2m)
    k4r, k4m = f(rho + dt * k3r, m + dt * k3m)
    rho_new = rho + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    m_new = m + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m)
    return rho_new, m_new


def solve_smooth(data, law, cfg=None):
    """Integrate from ``data`` up to ``cfg.t_end`` or until blow-up is detected.

    Blow-up proxies: growth of the combined W^{k,2} norm of (rho, m) beyond
    ``blowup_factor`` times its initial value, density leaving (a, b), or
    more than ``tail_limit`` of the fluctuation energy sitting in the outer
    third of the retained modes.
    On detection the trajectory is truncated at the last accepted step and
    ``blowup_flag`` is set.
    """
    cfg = cfg or SolverConfig()
    grid = data.grid
    cfg.validate(grid.d)
    k = cfg.monitor_index(grid.d)
    law.require(data.rho)

    rho, m = data.rho.copy(), data.m.copy()
    if cfg.dealias:
        rho, m = grid.filter(rho), grid.filter(m)
    t = float(data.time)
    t_end = t + cfg.t_end

    n0 = (sobolev_norm(rho, grid, k), sobolev_norm(m, grid, k))
    norms = [(t, *n0)]
    times, rhos, ms, dts = [t], [rho], [m], []
    reason = ""
    step = 0
    while t < t_end and not reason:
        dt = cfg.dt if cfg.dt is not None else cfg.cfl * grid.h / max_wavespeed(rho, m, law)
        last = t + dt >= t_end * (1 - 1e-14)
        if last:
            dt = t_end - t
        try:
            rho_new, m_new = _rk4(grid, rho, m, dt, law, cfg.dealias)
            law.require(rho_new)
        except DensityDomainError:
            reason = "density_exit"
            break
        if not (np.all(np.isfinite(rho_new)) and np.all(np.isfinite(m_new))):
            reason = "non_finite"
            break
        nr, nm = sobolev_norm(rho_new, grid, k), sobolev_norm(m_new, grid, k)
        if math.hypot(nr, nm) > cfg.blowup_factor * math.hypot(*n0):
            reason = "norm_growth"
            break
        if grid.tail_fraction(rho_new, m_new) > cfg.tail_limit:
            reason = "spectral_tail"
            break
        rho, m = rho_new, m_new
        t = t_end if last else t + dt
        step += 1
        dts.append(dt)
        norms.append((t, nr, nm))
        if step % cfg.snap_every == 0 or last:
            times.append(t)
            rhos.append(rho)
            ms.append(m)

    if times[-1] != t:
        times.append(t)
        rhos.append(rho)
        ms.append(m)
    return SmoothSolution(grid, np.array(times), np.array(rhos), np.array(ms), t,
                          blowup_flag=bool(reason), blowup_reason=reason,
                          norm_history=np.array(norms), dt_history=np.array(dts))


# weak formulations ----------------------------------------------------------

@dataclass
class TestFunction:
    """Separable space-time test function theta(t) * psi(x).

    ``psi`` is a scalar field (mass, energy) or a vector field (momentum).
    """

    theta: object
    dtheta: object
    psi: np.ndarray

    __test__ = False  # not a pytest class


def smooth_cutoff(T):
    """theta(t) = 1 - s(t/T) with the degree-9 smoothstep s.

    theta(0) = 1, theta(T) = 0, and derivatives of orders 1..4 vanish at both
    ends, which keeps the trapezoid rule in time accurate to high order.
    """
    def theta(t):
        tau = np.clip(np.asarray(t, dtype=float) / T, 0.0, 1.0)
        s = tau ** 5 * (126 - 420 * tau + 540 * tau ** 2 - 315 * tau ** 3 + 70 * tau ** 4)
        return 1.0 - s

    def dtheta(t):
        tau = np.clip(np.asarray(t, dtype=float) / T, 0.0, 1.0)
        return -630.0 * tau ** 4 * (1.0 - tau) ** 4 / T

    return theta, dtheta


def random_low_mode_test(grid, rng, which, T, kmax=2):
    """Random trigonometric test function with modes |k_i| <= kmax and the cutoff in time."""
    modes = np.array(np.meshgrid(*([np.arange(-kmax, kmax + 1)] * grid.d), indexing="ij"))
    modes = modes.reshape(grid.d, -1).T
    ncomp = grid.d if which == "momentum" else 1
    psi = np.zeros((ncomp,) + grid.shape)
    for c in range(ncomp):
        for k in modes:
            phase = np.pi * np.tensordot(k, grid.x, axes=1)
            a, b = rng.normal(size=2)
            psi[c] += a * np.cos(phase) + b * np.sin(phase)
    if which == "momentum":
        psi = psi / np.max(np.abs(psi))
    else:
        psi = psi[0] / np.max(np.abs(psi[0]))
        if which == "energy":
            psi = 1.0 + 0.5 * psi
    theta, dtheta = smooth_cutoff(T)
    return TestFunction(theta, dtheta, psi)


def _time_integral(times, vals):
    return float(np.trapezoid(np.asarray(vals), np.asarray(times)))


def energy_density(rho, m, law):
    return 0.5 * np.sum(m ** 2, axis=0) / rho + pressure_potential(law, rho)


def weak_residual(sol, law, test, which):
    """Residual of the weak mass / momentum equation or the energy inequality.

    mass:     ∫∫ rho φ_t + m·∇φ + ∫ rho_0 φ(0)
    momentum: ∫∫ m·φ_t + (m⊗m/rho):∇φ + p div φ + ∫ m_0·φ(0)
    energy:   ∫∫ E φ_t + (E + p) u·∇φ + ∫ E_0 φ(0),  E = ½|m|²/rho + P(rho)

    The first two vanish for solutions; the energy residual must be >= 0.
    Time integrals use the trapezoid rule over the snapshots.
    """
    grid = sol.grid
    T = sol.t_reached
    if abs(float(test.theta(T))) > 1e-12:
        raise ValueError("test function must vanish at the final time")
    psi = np.asarray(test.psi)
    if which in ("mass", "energy"):
        if psi.shape != grid.shape:
            raise ValueError(f"{which} residual needs a scalar test function")
        if which == "energy" and (np.any(psi < 0) or np.any(test.theta(sol.times) < 0)):
            raise ValueError("energy test function must be nonnegative")
        gpsi = grid.grad(psi)
    elif which == "momentum":
        if psi.shape != (grid.d,) + grid.shape:
            raise ValueError("momentum residual needs a vector test function")
        gpsi = np.stack([grid.grad(psi[i]) for i in range(grid.d)])  # gpsi[i, j] = d_j psi_i
        dvpsi = grid.div(psi)
    else:
        raise ValueError(f"unknown residual kind {which!r}")

    vals = []
    for i, t in enumerate(sol.times):
        rho, m = sol.rho[i], sol.m[i]
        th, dth = float(test.theta(t)), float(test.dtheta(t))
        if which == "mass":
            integrand = rho * psi * dth + th * np.sum(m * gpsi, axis=0)
        elif which == "momentum":
            flux = np.einsum("i...,j...,ij...->...", m, m, gpsi) / rho
            integrand = dth * np.sum(m * psi, axis=0) + th * (flux + law.p(rho) * dvpsi)
        else:
            E = energy_density(rho, m, law)
            integrand = dth * E * psi + th * (E + law.p(rho)) * np.sum(m / rho * gpsi, axis=0)
        vals.append(grid.integrate(integrand))
    total = _time_integral(sol.times, vals)

    rho0, m0 = sol.rho[0], sol.m[0]
    th0 = float(test.theta(sol.times[0]))
    if which == "mass":
        total += th0 * grid.integrate(rho0 * psi)
    elif which == "momentum":
        total += th0 * grid.integrate(np.sum(m0 * psi, axis=0))
    else:
        total += th0 * grid.integrate(energy_density(rho0, m0, law) * psi)
    return float(total)


@dataclass
class EnergySeries:
    times: np.ndarray
    energy: np.ndarray

    @property
    def max_increase(self):
        """Largest E(t) - E(s) over s <= t; 0 for a nonincreasing profile."""
        running_min = np.minimum.accumulate(self.energy)
        return float(np.max(self.energy - running_min))

    @property
    def drift(self):
        return float(np.max(np.abs(self.energy - self.energy[0])))


def total_energy_profile(sol, law):
    """∫ ½|m|²/rho + P(rho) dx at every snapshot."""
    e = [sol.grid.integrate(energy_density(sol.rho[i], sol.m[i], law)) for i in range(len(sol))]
    return EnergySeries(np.asarray(sol.times), np.array(e, dtype=float))
