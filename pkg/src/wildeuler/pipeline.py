"""
Reproducible experiment pipelines.

Every command works inside a run directory ``<out>/<config digest>/``:

    config.ini            canonical config echo
    solve.json            solver summary and trajectory metadata
    snapshots/*.wef       trajectory (WEF1)
    certify.json          zero and wave candidate verdicts
    window.json/.csv      wild window and residual curve
    budget.json           Λ(0) budget
    report.json           merged run report
    timings.json          wall-clock timings (kept apart: not reproducible)
"""
from __future__ import annotations

import json
import os
import time

import numpy as np

from . import __version__
from .admissibility import (budget_report, energy_matched_amplitude, first_nonempty_eps,
                             lp_closeness, wild_window)
from .ansatz import EnergyProfile, ProfileError, build_ansatz
from .config import ConfigError, dump_config
from .fields import FlowState, TorusGrid
from .pressure import gamma_law, table_law
from .solver import SmoothSolution, SolverConfig, solve_smooth, total_energy_profile
from .subsolution import (SubsolutionCandidate, max_amplitude_search, plane_wave_candidate,
                          subsolution_margin)
from .wef import WEFError, read_wef, write_wef

FORMAT_VERSION = "wildeuler-report/1"


class NumericalAbort(RuntimeError):
    """The smooth solver stopped before t_end (blow-up proxy or domain exit)."""


class CertificationFailure(RuntimeError):
    pass


# builders ---------------------------------------------------------------------

def build_grid(cfg):
    return TorusGrid(cfg.grid.d, cfg.grid.n)


def build_law(cfg):
    pc = cfg.pressure
    try:
        if pc.kind == "gamma_law":
            return gamma_law(pc.kappa, pc.gamma, pc.a, pc.b)
        return table_law(pc.rho_samples, pc.p_samples)
    except ValueError as exc:
        raise ConfigError(f"[pressure] {exc}") from None


def _trig(grid, mode):
    return np.cos(np.pi * np.tensordot(np.asarray(mode, float), grid.x, axes=1))


def build_initial(cfg, grid):
    ic = cfg.initial
    d = grid.d
    mom = ic.momentum or (0.0,) * d
    if ic.family == "constant":
        return FlowState.constant(grid, ic.rho_mean, mom)
    if ic.family == "acoustic":
        mode = ic.mode or (1,) + (0,) * (d - 1)
        rho = ic.rho_mean + ic.amplitude * _trig(grid, mode)
        return FlowState(grid, rho, np.zeros((d,) + grid.shape))
    if ic.family == "gaussian_bump":
        r2 = np.sum(grid.x ** 2, axis=0)
        rho = ic.rho_mean + ic.amplitude * np.exp(-r2 / (2 * ic.width ** 2))
        m = np.stack([np.full(grid.shape, float(mi)) for mi in mom])
        return FlowState(grid, rho, m)
    if ic.family == "random_low_mode":
        rng = np.random.default_rng(cfg.run.seed)
        ks = np.array(np.meshgrid(*([np.arange(-ic.kmax, ic.kmax + 1)] * d), indexing="ij"))
        ks = ks.reshape(d, -1).T
        fields = []
        for _ in range(d + 1):
            f = np.zeros(grid.shape)
            for k in ks:
                if not k.any():
                    continue
                ph = np.pi * np.tensordot(k.astype(float), grid.x, axes=1)
                a, b = rng.normal(size=2)
                f += a * np.cos(ph) + b * np.sin(ph)
            fields.append(ic.amplitude * f / np.max(np.abs(f)))
        rho = ic.rho_mean + fields[0]
        m = np.stack([float(mom[i]) + fields[i + 1] for i in range(d)])
        return FlowState(grid, rho, m)
    try:
        g2, t, flds = read_wef(ic.path)
    except (OSError, WEFError) as exc:
        raise ConfigError(f"[initial] cannot load {ic.path}: {exc}") from None
    if g2 != grid or "rho" not in flds or "m" not in flds:
        raise ConfigError(f"[initial] {ic.path} must hold rho and m on the configured grid")
    return FlowState(grid, flds["rho"][1], flds["m"][1], t)


def build_profile(cfg):
    pc = cfg.profile
    try:
        if pc.kind == "exponential":
            return EnergyProfile.exponential(pc.eps)
        if pc.kind == "constant":
            if not pc.value > 0:
                raise ProfileError(f"Λ = {pc.value} violates the positivity requirement Λ > 0 "
                                   "of the zero subsolution")
            return EnergyProfile.constant(pc.value)
        return EnergyProfile.table(pc.t, pc.lam, pc.dlam)
    except ValueError as exc:
        raise ConfigError(f"[profile] {exc}") from None


def solver_config(cfg):
    s = cfg.solver
    return SolverConfig(cfl=s.cfl, dealias=s.dealias, k_monitor=s.k_monitor,
                        blowup_factor=s.blowup_factor, t_end=s.t_end,
                        snap_every=s.snap_every, dt=s.dt)


def acoustic_oracle(cfg, grid, law, t):
    """Linearized closed form for the acoustic family."""
    ic = cfg.initial
    mode = np.asarray(ic.mode or (1,) + (0,) * (grid.d - 1), float)
    c = float(law.sound_speed(ic.rho_mean))
    kn = float(np.linalg.norm(mode))
    omega = c * np.pi * kn
    ph = np.pi * np.tensordot(mode, grid.x, axes=1)
    rho = ic.rho_mean + ic.amplitude * np.cos(ph) * np.cos(omega * t)
    m = np.stack([ic.amplitude * c * (mk / kn) * np.sin(ph) * np.sin(omega * t) for mk in mode])
    return rho, m


# run directory ------------------------------------------------------------------

def run_dir(cfg, out):
    return os.path.join(out, cfg.digest())


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _record_timing(rdir, key, seconds):
    path = os.path.join(rdir, "timings.json")
    data = _read_json(path) if os.path.exists(path) else {}
    data[key] = seconds
    _write_json(path, data)


def _prepare(cfg, out):
    rdir = run_dir(cfg, out)
    os.makedirs(os.path.join(rdir, "snapshots"), exist_ok=True)
    with open(os.path.join(rdir, "config.ini"), "w") as fh:
        fh.write(dump_config(cfg))
    return rdir


def cmd_solve(cfg, out, workers=1):
    """Run the smooth solver; returns (run_dir, summary dict)."""
    t0 = time.perf_counter()
    rdir = _prepare(cfg, out)
    grid = build_grid(cfg)
    law = build_law(cfg)
    data = build_initial(cfg, grid)
    if not law.contains(data.rho):
        raise ConfigError("initial density outside the pressure law's interval")
    try:
        sol = solve_smooth(data, law, solver_config(cfg))
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None

    snaps = []
    for i, t in enumerate(sol.times):
        name = f"snap_{i:05d}.wef"
        write_wef(os.path.join(rdir, "snapshots", name), grid,
                  [("rho", "scalar", sol.rho[i]), ("m", "vector", sol.m[i])], t)
        snaps.append(name)

    energy = total_energy_profile(sol, law)
    vol = grid.volume
    mass = [float(grid.integrate(r)) / vol for r in sol.rho]
    mom = [[float(grid.integrate(mi)) / vol for mi in m] for m in sol.m]
    summary = {
        "format": FORMAT_VERSION,
        "t_reached": sol.t_reached,
        "blowup_flag": sol.blowup_flag,
        "blowup_reason": sol.blowup_reason,
        "steps": len(sol.dt_history),
        "times": [float(t) for t in sol.times],
        "snapshots": snaps,
        "dt_history": [float(x) for x in sol.dt_history],
        "norm_history": [[float(x) for x in row] for row in sol.norm_history],
        "energy": [float(e) for e in energy.energy],
        "drifts": {
            "mass": float(np.max(np.abs(np.array(mass) - mass[0]))),
            "momentum": float(np.max(np.abs(np.array(mom) - np.array(mom[0])))),
            "energy": energy.drift,
            "energy_max_increase": energy.max_increase,
        },
    }
    if cfg.initial.family == "acoustic":
        rho_l, m_l = acoustic_oracle(cfg, grid, law, sol.t_reached)
        summary["linear_oracle_error"] = float(max(np.max(np.abs(sol.rho[-1] - rho_l)),
                                                   np.max(np.abs(sol.m[-1] - m_l))))
    _write_json(os.path.join(rdir, "solve.json"), summary)
    _record_timing(rdir, "solve", time.perf_counter() - t0)
    return rdir, summary, sol


def load_solution(rdir):
    summary = _read_json(os.path.join(rdir, "solve.json"))
    rhos, ms, grid = [], [], None
    for name in summary["snapshots"]:
        grid, _, flds = read_wef(os.path.join(rdir, "snapshots", name))
        rhos.append(flds["rho"][1])
        ms.append(flds["m"][1])
    return SmoothSolution(grid, np.array(summary["times"]), np.array(rhos), np.array(ms),
                          summary["t_reached"], summary["blowup_flag"], summary["blowup_reason"],
                          np.array(summary["norm_history"]), np.array(summary["dt_history"]))


def _solution(cfg, out, workers):
    rdir = run_dir(cfg, out)
    if os.path.exists(os.path.join(rdir, "solve.json")):
        return rdir, load_solution(rdir)
    rdir, _, sol = cmd_solve(cfg, out, workers)
    return rdir, sol


def cmd_certify(cfg, out, workers=1):
    t0 = time.perf_counter()
    prof = build_profile(cfg)
    rdir, sol = _solution(cfg, out, workers)
    try:
        ans = build_ansatz(sol, prof)
    except ProfileError as exc:
        raise ConfigError(f"[profile] {exc}") from None
    zero = subsolution_margin(SubsolutionCandidate.zero(sol.grid, sol.times), ans, sol,
                              workers=workers)
    w = cfg.wave
    waves = []
    for N in w.N:
        search = max_amplitude_search(w.xi, w.a_dir, int(N), ans, sol,
                                      w.target_margin_fraction, samples=w.amplitude_samples,
                                      workers=workers)
        cand = plane_wave_candidate(w.xi, w.a_dir, int(N), search.A_star, sol.grid, sol.times)
        rep = subsolution_margin(cand, ans, sol, workers=workers)
        waves.append({"N": int(N), "search": search.to_dict(), "certification": rep.to_dict(),
                      "metadata": cand.metadata})
    # margins below roundoff of e are not certifiable; record Λ at the horizon
    result = {"format": FORMAT_VERSION, "profile": prof.kind,
              "lambda_end": float(prof(sol.t_reached)), "zero": zero.to_dict(),
              "waves": waves,
              "verdict": "pass" if zero.verdict and all(
                  x["certification"]["verdict"] == "pass" for x in waves) else "fail"}
    _write_json(os.path.join(rdir, "certify.json"), result)
    _record_timing(rdir, "certify", time.perf_counter() - t0)
    return rdir, result


def cmd_window(cfg, out, workers=1):
    t0 = time.perf_counter()
    prof = build_profile(cfg)
    law = build_law(cfg)
    rdir, sol = _solution(cfg, out, workers)
    win = wild_window(sol, build_ansatz(sol, prof), law, prof, workers=workers)
    result = {"format": FORMAT_VERSION, "t_end": sol.t_reached, "window": win.to_dict()}
    if cfg.window.sweep:
        def make(eps):
            p = EnergyProfile.exponential(eps)
            return wild_window(sol, build_ansatz(sol, p), law, p, workers=workers)

        eps, _, tried = first_nonempty_eps(make, cfg.window.eps0)
        result["sweep"] = {"eps0": cfg.window.eps0, "first_nonempty_eps": eps,
                           "tried": [[e, tw] for e, tw in tried]}
    _write_json(os.path.join(rdir, "window.json"), result)
    with open(os.path.join(rdir, "window.csv"), "w") as fh:
        fh.write(win.to_csv())
    _record_timing(rdir, "window", time.perf_counter() - t0)
    return rdir, result


def cmd_budget(cfg, out, workers=1):
    t0 = time.perf_counter()
    rdir, sol = _solution(cfg, out, workers)
    b = cfg.budget
    state = sol.state(0)
    rep = budget_report(b.target_eps, state, cfg.wave.xi, cfg.wave.a_dir, b.N)
    # closeness of the perturbed data at the largest frequency, in the configured L^p
    N = max(int(n) for n in b.N)
    phase = np.pi * N * np.tensordot(np.asarray(cfg.wave.xi, float), sol.grid.x, axes=1)
    psi = np.stack([a * np.cos(phase) for a in np.asarray(cfg.wave.a_dir, float)])
    A = energy_matched_amplitude(psi, state, rep.lambda0)
    perturbed = FlowState(sol.grid, state.rho, state.m + A * psi, state.time)
    close = lp_closeness(perturbed, state, b.p)
    result = {"format": FORMAT_VERSION, "budget": rep.to_dict(),
              "closeness": {"p": b.p, "N": N, "rho": close.rho, "u": close.u,
                            "route": close.route, "rho_bound": close.rho_bound,
                            "u_bound": close.u_bound, "amplitude": A},
              "wave": {"xi": list(cfg.wave.xi), "a_dir": list(cfg.wave.a_dir)}}
    _write_json(os.path.join(rdir, "budget.json"), result)
    _record_timing(rdir, "budget", time.perf_counter() - t0)
    return rdir, result


def _fmt_num(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def cmd_report(rdir):
    """Merge the JSON outputs into report.json and render an aligned text summary."""
    if not os.path.exists(os.path.join(rdir, "solve.json")):
        raise ConfigError(f"{rdir} is not a run directory (no solve.json)")
    merged = {"format": FORMAT_VERSION, "version": __version__}
    with open(os.path.join(rdir, "config.ini")) as fh:
        merged["config"] = fh.read()
    for part in ("solve", "certify", "window", "budget"):
        path = os.path.join(rdir, f"{part}.json")
        if os.path.exists(path):
            merged[part] = _read_json(path)
    _write_json(os.path.join(rdir, "report.json"), merged)

    rows = []
    s = merged["solve"]
    rows += [("t_reached", s["t_reached"]), ("blowup", s["blowup_flag"] and s["blowup_reason"]),
             ("steps", s["steps"])]
    rows += [(f"drift.{k}", v) for k, v in s["drifts"].items()]
    if "linear_oracle_error" in s:
        rows.append(("linear_oracle_error", s["linear_oracle_error"]))
    if "certify" in merged:
        c = merged["certify"]
        rows.append(("zero.margin_min", c["zero"]["margin_min"]))
        rows.append(("zero.verdict", c["zero"]["verdict"]))
        for wv in c["waves"]:
            rows.append((f"wave[N={wv['N']}].A_star", wv["search"]["A_star"]))
            rows.append((f"wave[N={wv['N']}].margin_min", wv["certification"]["margin_min"]))
            rows.append((f"wave[N={wv['N']}].verdict", wv["certification"]["verdict"]))
        with open(os.path.join(rdir, "margins.csv"), "w") as fh:
            fh.write("t,min,mean,max\n")
            for row in c["zero"]["margin_stats"]:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")
    if "window" in merged:
        w = merged["window"]
        rows.append(("window.eps", w["window"]["eps"]))
        rows.append(("window.T_w", w["window"]["T_w"]))
        if "sweep" in w:
            rows.append(("window.first_nonempty_eps", w["sweep"]["first_nonempty_eps"]))
    if "budget" in merged:
        b = merged["budget"]["budget"]
        rows.append(("budget.lambda0", b["lambda0"]))
        rows.append(("budget.predicted_l2", b["predicted_l2"]))
        rows.append(("budget.N0", b["N0"]))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {_fmt_num(v)}" for k, v in rows) + "\n"
