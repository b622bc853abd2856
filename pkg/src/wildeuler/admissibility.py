"""
Energy admissibility of the ansatz.

The pointwise residual

    R = Λ' + Λ div u~ + G·v,   G = ∇[(½|m~|²/rho~ + P + p)/rho~] + Λ ∇(1/rho~),

must stay nonpositive. Pessimizing over all |v| <= V gives the worst-case
curve M(t) = Λ'(t) + sup_x[Λ div u~ + V |G|], and the wild window T_w is the
prefix of the trajectory on which M <= 0.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .fields import lp_norm, pointwise_norm
from .pressure import pressure_potential
from .solver import _bracket


@dataclass
class EnergyWindow:
    T_w: float
    times: np.ndarray
    residual_curve: np.ndarray
    V_max: np.ndarray
    eps: Optional[float]
    empty: bool
    advice: str = ""

    def to_dict(self):
        return {"T_w": self.T_w, "eps": self.eps, "empty": self.empty, "advice": self.advice,
                "V_max": [float(x) for x in self.V_max],
                "curve": [[float(t), float(m)] for t, m in zip(self.times, self.residual_curve)]}

    def to_csv(self):
        lines = ["t,M"] + [f"{t!r},{m!r}" for t, m in zip(self.times.tolist(),
                                                         self.residual_curve.tolist())]
        return "\n".join(lines) + "\n"


def _state_terms(state, law):
    """Λ-independent pieces: div u~, ∇[(K + P + p)/rho], ∇(1/rho), K, rho, |m|."""
    g = state.grid
    rho, m = state.rho, state.m
    K = 0.5 * np.sum(m ** 2, axis=0) / rho
    enthalpy = (K + pressure_potential(law, rho) + law.p(rho)) / rho
    return {
        "div_u": g.div(m / rho),
        "G0": g.grad(enthalpy),
        "G1": g.grad(1.0 / rho),
        "K": K,
        "rho": rho,
        "m_abs": pointwise_norm(m, g),
    }


def _interp_terms(terms, times, t):
    i, w = _bracket(times, t)
    if w == 0.0:
        return terms[i]
    a, b = terms[i], terms[i + 1]
    return {k: (1 - w) * a[k] + w * b[k] for k in a}


def energy_residual(t, v, sol, law, prof, div_tol=1e-8):
    """R(t, x) on the grid for a given divergence-free v."""
    state = sol.state_at(t)
    g = state.grid
    dv = g.div(v)
    if np.max(np.abs(dv)) > div_tol * (1.0 + np.max(np.abs(v))):
        raise ValueError("v is not divergence-free")
    terms = _state_terms(state, law)
    lam, dlam = float(prof(t)), float(prof.derivative(t))
    G = terms["G0"] + lam * terms["G1"]
    return dlam + lam * terms["div_u"] + np.sum(G * v, axis=0)


def velocity_bound(ans, sol):
    """V = sqrt(2 rho~ e) + |m~| at every snapshot."""
    return np.array([np.sqrt(2.0 * sol.rho[i] * ans.e[i]) + pointwise_norm(sol.m[i], sol.grid)
                     for i in range(len(sol.times))])


def pessimized_residual(lam, dlam, div_u, G, V):
    """Λ' + sup_x[Λ div u + V |G|] for given fields."""
    return float(dlam + np.max(lam * div_u + V * np.sqrt(np.sum(G ** 2, axis=0))))


def find_window(M, times, tol=1e-8):
    """Largest sampled prefix of ``times`` with M <= 0, refined by bisection.

    Returns ``(T_w, values)``, where ``values`` holds M at the sample times.
    T_w is 0 when M(times[0]) > 0. The returned T_w always satisfies
    M(T_w) <= 0.
    """
    times = np.asarray(times, dtype=float)
    vals = np.array([M(t) for t in times])
    if vals[0] > 0:
        return 0.0, vals
    bad = np.nonzero(vals > 0)[0]
    if bad.size == 0:
        return float(times[-1]), vals
    j = int(bad[0])
    lo, hi = float(times[j - 1]), float(times[j])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if M(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo, vals


def wild_window(sol, ans, law, prof=None, tol=1e-8, workers=1):
    """Certified horizon on which the worst-case residual stays nonpositive."""
    prof = prof or ans.profile
    idx = range(len(sol.times))

    def job(i):
        return _state_terms(sol.state(i), law)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as ex:
            terms = list(ex.map(job, idx))
    else:
        terms = [job(i) for i in idx]

    def fields_at(t):
        tm = _interp_terms(terms, sol.times, t)
        lam = float(prof(t))
        V = np.sqrt(2.0 * tm["rho"] * (tm["K"] + lam)) + tm["m_abs"]
        return tm, lam, V

    def M(t):
        tm, lam, V = fields_at(t)
        return pessimized_residual(lam, float(prof.derivative(t)), tm["div_u"],
                                   tm["G0"] + lam * tm["G1"], V)

    T_w, vals = find_window(M, sol.times, tol)
    vmax = np.array([float(np.max(fields_at(t)[2])) for t in sol.times])
    empty = T_w <= 0.0
    advice = ""
    if empty:
        advice = "residual positive at t=0; retry with a smaller eps (Λ'(0) = -1/eps dominates)"
    return EnergyWindow(T_w, np.asarray(sol.times, float), vals, vmax, prof.eps, empty, advice)


def first_nonempty_eps(make_window, eps0=0.2, max_halvings=30):
    """Halve eps from ``eps0`` until ``make_window(eps)`` is nonempty.

    Returns ``(eps, window, tried)`` or ``(None, None, tried)``.
    """
    eps = eps0
    tried = []
    for _ in range(max_halvings + 1):
        win = make_window(eps)
        tried.append((eps, win.T_w))
        if win.T_w > 0:
            return eps, win, tried
        eps *= 0.5
    return None, None, tried


# L^p budget ------------------------------------------------------------------

def choose_lambda0(target_eps, rho0, grid):
    """Λ(0) = target_eps² / (2 ∫rho0), rounded down so the predicted L² size never
    exceeds the target."""
    if target_eps <= 0:
        raise ValueError("target eps must be positive")
    mass = float(grid.integrate(rho0))
    # correctly rounded from the decimal value of target_eps
    lam0 = float(Fraction(repr(float(target_eps))) ** 2 / (2 * Fraction(mass)))
    while np.sqrt(2.0 * lam0 * mass) > target_eps:
        lam0 = float(np.nextafter(lam0, 0.0))
    return lam0


def energy_matched_amplitude(shape_v, state, lam):
    """Amplitude A with ½∫|A ψ + m~|²/rho~ = ∫(½|m~|²/rho~ + Λ).

    ``shape_v`` is the unit-amplitude profile ψ. Solves
    A² ∫|ψ|²/rho + 2A ∫ψ·m/rho - 2Λ|T| = 0 for the positive root.
    """
    g = state.grid
    a2 = g.integrate(np.sum(shape_v ** 2, axis=0) / state.rho)
    a1 = g.integrate(np.sum(shape_v * state.m, axis=0) / state.rho)
    c = 2.0 * lam * g.volume
    return float((-a1 + np.sqrt(a1 ** 2 + a2 * c)) / a2)


@dataclass
class BudgetReport:
    lambda0: float
    predicted_l2: float
    target_eps: float
    measured: dict = field(default_factory=dict)
    N0: Optional[int] = None

    def to_dict(self):
        return {"lambda0": self.lambda0, "predicted_l2": self.predicted_l2,
                "target_eps": self.target_eps, "N0": self.N0,
                "measured": {str(k): v for k, v in self.measured.items()}}


def budget_report(target_eps, state, xi, a_dir, Ns):
    """Pick Λ(0) and measure ‖v‖_{L²} of energy-matched waves at frequencies Ns.

    N0 is the smallest listed N such that every listed N' >= N meets the target.
    """
    g = state.grid
    lam0 = choose_lambda0(target_eps, state.rho, g)
    predicted = float(np.sqrt(2.0 * lam0 * g.integrate(state.rho)))
    xi_f = np.asarray(xi, float)
    a = np.asarray(a_dir, float)
    measured = {}
    for N in sorted(int(n) for n in Ns):
        psi = np.stack([ai * np.cos(np.pi * N * np.tensordot(xi_f, g.x, axes=1)) for ai in a])
        A = energy_matched_amplitude(psi, state, lam0)
        measured[N] = lp_norm(A * psi, g, 2)
    N0 = None
    for N in sorted(measured, reverse=True):
        if measured[N] <= target_eps:
            N0 = N
        else:
            break
    return BudgetReport(lam0, predicted, float(target_eps), measured, N0)


@dataclass
class LpCloseness:
    rho: float
    u: float
    route: str
    rho_bound: float
    u_bound: float

    def __iter__(self):
        return iter((self.rho, self.u))


def lp_transfer_bound(f, grid, p):
    """Bound ‖f‖_p from ‖f‖_2 (and ‖f‖_∞ for p > 2); returns (bound, route)."""
    l2 = lp_norm(f, grid, 2)
    if p == 2:
        return l2, "direct-L2"
    if p < 2:
        return grid.volume ** (1.0 / p - 0.5) * l2, "holder-finite-volume"
    linf = lp_norm(f, grid, np.inf)
    return linf ** (1.0 - 2.0 / p) * l2 ** (2.0 / p), "interpolation-Linf-L2"


def lp_closeness(a, b, p=2):
    """(‖rho_a - rho_b‖_p, ‖u_a - u_b‖_p), plus the L²-transfer bounds."""
    g = a.grid
    if b.grid != g:
        raise ValueError("states live on different grids")
    if np.any(a.rho <= 0) or np.any(b.rho <= 0):
        raise ValueError("densities must be positive")
    drho = a.rho - b.rho
    du = a.u - b.u
    rb, route = lp_transfer_bound(drho, g, p)
    ub, _ = lp_transfer_bound(du, g, p)
    return LpCloseness(lp_norm(drho, g, p), lp_norm(du, g, p), route, rb, ub)
