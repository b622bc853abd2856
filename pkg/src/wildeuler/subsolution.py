"""
Subsolution certification.

A candidate is a divergence-free field v with a traceless symmetric flux F,
d_t v + div F = 0, whose margin

    e - (d/2) λ_max[(v+m~)⊗(v+m~)/rho~ - F - H]

stays strictly positive. Nontrivial candidates are built from modulated
plane waves with exact compensating fluxes.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .eigen import lambda_max_packed, lambda_max_sym
from .fields import sym_outer

STRICT_TOL = 1e-10


class CadenceError(ValueError):
    """Candidate, ansatz and trajectory are not sampled at the same times."""


@dataclass(frozen=True)
class Envelope:
    chi: object
    dchi: object
    name: str = "custom"

    @classmethod
    def sin2(cls, T, t0=0.0):
        """χ(t) = sin²(π (t - t0) / T): C¹ and zero at both ends."""
        def chi(t):
            return np.sin(np.pi * (np.asarray(t, dtype=float) - t0) / T) ** 2

        def dchi(t):
            return np.pi / T * np.sin(2 * np.pi * (np.asarray(t, dtype=float) - t0) / T)

        return cls(chi, dchi, f"sin2(T={T})")


@dataclass(frozen=True)
class WaveMode:
    """v = A χ(t) a cos(π N ξ·x),  F = -(A χ'(t) / (π N |ξ|²)) (a⊗ξ + ξ⊗a) sin(π N ξ·x)."""

    xi: tuple
    a_dir: tuple
    N: int
    A: float
    envelope: Envelope

    def _phase(self, grid):
        return np.pi * self.N * np.tensordot(np.asarray(self.xi, float), grid.x, axes=1)

    def v(self, grid, t):
        a = np.asarray(self.a_dir, float)
        c = self.A * float(self.envelope.chi(t)) * np.cos(self._phase(grid))
        return np.stack([ai * c for ai in a])

    def dv_dt(self, grid, t):
        a = np.asarray(self.a_dir, float)
        c = self.A * float(self.envelope.dchi(t)) * np.cos(self._phase(grid))
        return np.stack([ai * c for ai in a])

    def F(self, grid, t):
        a = np.asarray(self.a_dir, float)
        xi = np.asarray(self.xi, float)
        coef = -self.A * float(self.envelope.dchi(t)) / (np.pi * self.N * float(xi @ xi))
        s = coef * np.sin(self._phase(grid))
        sym = sym_outer(a[:, None], xi[:, None])[:, 0] * 2.0  # a⊗ξ + ξ⊗a, packed
        return np.stack([sc * s for sc in sym])


@dataclass
class SubsolutionCandidate:
    """Sampled v (nt, d, ...) and F (nt, ncomp, ...) on the trajectory times."""

    grid: object
    times: np.ndarray
    v: np.ndarray
    F: np.ndarray
    modes: list = field(default_factory=list)

    @classmethod
    def zero(cls, grid, times):
        nt = len(times)
        ncomp = grid.d * (grid.d + 1) // 2
        return cls(grid, np.asarray(times), np.zeros((nt, grid.d) + grid.shape),
                   np.zeros((nt, ncomp) + grid.shape))

    def __add__(self, other):
        if not np.array_equal(self.times, other.times):
            raise CadenceError("cannot superpose candidates on different cadences")
        return SubsolutionCandidate(self.grid, self.times, self.v + other.v,
                                    self.F + other.F, self.modes + other.modes)

    def fields_at(self, t):
        """Closed-form (v, F, d_t v) at arbitrary t (wave candidates only)."""
        g = self.grid
        v = np.zeros((g.d,) + g.shape)
        F = np.zeros((g.d * (g.d + 1) // 2,) + g.shape)
        dv = np.zeros_like(v)
        for mode in self.modes:
            v += mode.v(g, t)
            F += mode.F(g, t)
            dv += mode.dv_dt(g, t)
        return v, F, dv

    @property
    def metadata(self):
        return [dict(xi=list(m.xi), a_dir=list(m.a_dir), N=m.N, A=m.A,
                     envelope=m.envelope.name) for m in self.modes]


def _exact_dot(a, b):
    return sum(Fraction(x) * Fraction(y) for x, y in zip(a, b))


def plane_wave_candidate(xi, a_dir, N, A, grid, times, envelope=None):
    """Single-mode wave candidate sampled at ``times``.

    ``xi`` must be a nonzero integer vector, ``a_dir`` exactly orthogonal to it,
    ``N`` a positive integer. The default envelope is sin²(π t / T) over the
    sampled interval.
    """
    xi = tuple(int(k) for k in xi)
    a_dir = tuple(a_dir)
    if len(xi) != grid.d or len(a_dir) != grid.d:
        raise ValueError("xi and a_dir must have d components")
    if not any(xi):
        raise ValueError("wave vector must be nonzero")
    if int(N) != N or N <= 0:
        raise ValueError(f"frequency multiplier N must be a positive integer, got {N}")
    if _exact_dot(xi, a_dir) != 0:
        raise ValueError("amplitude direction must be orthogonal to the wave vector")
    times = np.asarray(times, dtype=float)
    if envelope is None:
        envelope = Envelope.sin2(times[-1] - times[0], times[0])
    mode = WaveMode(xi, a_dir, int(N), float(A), envelope)
    v = np.array([mode.v(grid, t) for t in times])
    F = np.array([mode.F(grid, t) for t in times])
    return SubsolutionCandidate(grid, times, v, F, [mode])


@dataclass
class CertificationReport:
    margin_min: float
    margin_stats: np.ndarray  # rows (t, min, mean, max)
    sup_v: float
    bound: float
    verdict: bool
    energy_gap: np.ndarray
    gap_min: float
    tol: float = STRICT_TOL

    def to_dict(self):
        return {
            "margin_min": self.margin_min,
            "margin_stats": [[float(x) for x in row] for row in self.margin_stats],
            "sup_v": self.sup_v,
            "bound": self.bound,
            "gap_min": self.gap_min,
            "verdict": "pass" if self.verdict else "fail",
            "tol": self.tol,
        }


def _margin_snapshot(d, v, F, H, e, rho, m):
    w = v + m
    bracket = sym_outer(w) / rho - F - H
    margin = e - 0.5 * d * lambda_max_packed(bracket, d)
    gap = e - 0.5 * np.sum(w ** 2, axis=0) / rho
    return margin, gap


def subsolution_margin(cand, ans, sol, tol=STRICT_TOL, workers=1):
    """Evaluate the membership margin at every grid point and snapshot.

    Snapshots are processed independently (optionally on ``workers`` threads)
    and reduced in snapshot order, so the report does not depend on
    ``workers``.
    """
    if not (np.array_equal(cand.times, ans.times) and np.array_equal(ans.times, sol.times)):
        raise CadenceError("candidate, ansatz and solution must share snapshot times")
    d = sol.grid.d

    def job(i):
        return _margin_snapshot(d, cand.v[i], cand.F[i], ans.H[i], ans.e[i], sol.rho[i], sol.m[i])

    idx = range(len(sol.times))
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, idx))
    else:
        results = [job(i) for i in idx]

    margins = np.array([r[0] for r in results])
    gaps = np.array([r[1] for r in results])
    stats = np.array([(t, mg.min(), mg.mean(), mg.max()) for t, mg in zip(sol.times, margins)])
    margin_min = float(margins.min())
    sup_v = float(np.max(np.sqrt(np.sum(cand.v ** 2, axis=1))))
    bound = float(np.sqrt(2.0 * np.max(sol.rho * ans.e))
                  + np.max(np.sqrt(np.sum(sol.m ** 2, axis=1))))
    verdict = bool(margin_min > tol and np.isfinite(sup_v))
    return CertificationReport(margin_min, stats, sup_v, bound, verdict, gaps,
                               float(gaps.min()), tol)


def relaxation_inequality_check(w, rho, F, H):
    """Slack (d/2) λ_max[w⊗w/rho - F - H] - ½|w|²/rho; nonnegative when the
    inequality holds.

    ``w`` has shape ``(..., d)``, ``F`` and ``H`` are full ``(..., d, d)``
    traceless symmetric matrices.
    """
    w = np.asarray(w, dtype=float)
    rho = np.asarray(rho, dtype=float)
    d = w.shape[-1]
    B = w[..., :, None] * w[..., None, :] / rho[..., None, None] - np.asarray(F) - np.asarray(H)
    lam = lambda_max_sym(B, atol=1e-9)
    return 0.5 * d * lam - 0.5 * np.sum(w ** 2, axis=-1) / rho


@dataclass
class AmplitudeSearch:
    A_star: float
    margin_star: float
    mu0: float
    target: float
    curve: list  # (A, margin_min) pairs in evaluation order, sorted by A
    reason: str = ""

    def to_dict(self):
        return {"A_star": self.A_star, "margin_star": self.margin_star, "mu0": self.mu0,
                "target": self.target, "reason": self.reason,
                "curve": [[float(a), float(m)] for a, m in self.curve]}


def max_amplitude_search(xi, a_dir, N, ans, sol, target_margin_fraction=0.5,
                         A_hi=None, samples=16, rtol=1e-6, envelope=None,
                         tol=STRICT_TOL, workers=1):
    """Largest amplitude whose wave candidate keeps margin >= fraction * μ₀.

    μ₀ is the zero candidate's margin. The amplitude axis [0, A_hi] is sampled
    uniformly; the search then bisects between the largest feasible sample and
    its infeasible neighbour. Monotonicity in A is not assumed: the result is
    the largest amplitude actually verified.
    """
    grid = sol.grid

    def margin(A):
        cand = plane_wave_candidate(xi, a_dir, N, A, grid, sol.times, envelope)
        return subsolution_margin(cand, ans, sol, tol, workers).margin_min

    mu0 = subsolution_margin(SubsolutionCandidate.zero(grid, sol.times), ans, sol, tol,
                             workers).margin_min
    target = target_margin_fraction * mu0
    if not mu0 > tol:
        return AmplitudeSearch(0.0, mu0, mu0, target, [(0.0, mu0)],
                               reason="zero candidate is not a strict subsolution")
    if A_hi is None:
        # beyond this amplitude |v| exceeds the boundedness surrogate at the envelope peak
        a_norm = float(np.linalg.norm(np.asarray(a_dir, float)))
        rep = subsolution_margin(SubsolutionCandidate.zero(grid, sol.times), ans, sol, tol)
        A_hi = 2.0 * rep.bound / a_norm

    curve = {0.0: mu0}
    amps = np.linspace(0.0, A_hi, samples + 1)
    for A in amps[1:]:
        curve[float(A)] = margin(A)
    feasible = [A for A in amps if curve[float(A)] >= target]
    lo = float(max(feasible))
    if lo < A_hi:
        hi = float(amps[np.searchsorted(amps, lo) + 1])
        while hi - lo > rtol * A_hi:
            mid = 0.5 * (lo + hi)
            curve[mid] = margin(mid)
            if curve[mid] >= target:
                lo = mid
            else:
                hi = mid
    pts = sorted(curve.items())
    return AmplitudeSearch(lo, curve[lo], mu0, target, pts)


def flux_identity_error(cand, points_t, points_x):
    """max |d_t v + div F| at sampled (t, x), spatial derivative taken spectrally."""
    g = cand.grid
    err = 0.0
    for t, x in zip(points_t, points_x):
        _, F, dv = cand.fields_at(t)
        res = dv + g.tensor_div(F)
        vals = [g.evaluate_at(res[i], np.atleast_2d(x)) for i in range(g.d)]
        err = max(err, float(np.max(np.abs(vals))))
    return err

