"""
Experiment configuration: an INI file with one section per concern.

    [grid]      d, n
    [pressure]  kind = gamma_law | custom_table, kappa, gamma, a, b, rho_samples, p_samples
    [initial]   family = constant | acoustic | gaussian_bump | random_low_mode | file, ...
    [solver]    cfl, t_end, snap_every, k_monitor, dealias, blowup_factor, dt
    [profile]   kind = exponential | constant | table, eps, value, t, lam, dlam
    [wave]      xi, a_dir, N, target_margin_fraction, amplitude_samples
    [window]    eps0, sweep
    [budget]    target_eps, p, N
    [run]       seed

Serialization is canonical, so parse -> dump -> parse is the identity and
the dump hashes to a stable run-directory name.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import math
import typing
from dataclasses import dataclass, field
from typing import Optional


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSection:
    d: int = 2
    n: int = 64


@dataclass(frozen=True)
class PressureSection:
    kind: str = "gamma_law"
    kappa: float = 1.0
    gamma: float = 2.0
    a: float = 0.0
    b: float = math.inf
    rho_samples: tuple = ()
    p_samples: tuple = ()


@dataclass(frozen=True)
class InitialSection:
    family: str = "constant"
    rho_mean: float = 1.0
    momentum: tuple = ()
    amplitude: float = 0.0
    width: float = 0.25
    mode: tuple = ()
    kmax: int = 2
    path: str = ""


@dataclass(frozen=True)
class SolverSection:
    cfl: float = 0.4
    t_end: float = 0.1
    snap_every: int = 1
    k_monitor: Optional[int] = None
    dealias: bool = True
    blowup_factor: float = 1000.0
    dt: Optional[float] = None


@dataclass(frozen=True)
class ProfileSection:
    kind: str = "exponential"
    eps: float = 0.1
    value: float = 0.5
    t: tuple = ()
    lam: tuple = ()
    dlam: tuple = ()


@dataclass(frozen=True)
class WaveSection:
    xi: tuple = (1, 0)
    a_dir: tuple = (0.0, 1.0)
    N: tuple = (2, 4, 8)
    target_margin_fraction: float = 0.5
    amplitude_samples: int = 16


@dataclass(frozen=True)
class WindowSection:
    eps0: float = 0.2
    sweep: bool = True


@dataclass(frozen=True)
class BudgetSection:
    target_eps: float = 0.1
    p: float = 2.0
    N: tuple = (2, 4, 8, 16)


@dataclass(frozen=True)
class RunSection:
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    pressure: PressureSection = field(default_factory=PressureSection)
    initial: InitialSection = field(default_factory=InitialSection)
    solver: SolverSection = field(default_factory=SolverSection)
    profile: ProfileSection = field(default_factory=ProfileSection)
    wave: WaveSection = field(default_factory=WaveSection)
    window: WindowSection = field(default_factory=WindowSection)
    budget: BudgetSection = field(default_factory=BudgetSection)
    run: RunSection = field(default_factory=RunSection)

    def with_seed(self, seed):
        return dataclasses.replace(self, run=RunSection(int(seed)))

    def digest(self):
        return hashlib.sha256(dump_config(self).encode()).hexdigest()[:16]


_SECTIONS = typing.get_type_hints(ExperimentConfig)


def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _scalar(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


def _parse_value(text, typ, where):
    text = text.strip()
    try:
        if typing.get_origin(typ) is typing.Union:
            if text.lower() == "none":
                return None
            typ = next(t for t in typing.get_args(typ) if t is not type(None))
        if typ is bool:
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(f"not a boolean: {text!r}")
            return low in ("true", "yes", "1")
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        if typ is tuple:
            return tuple(_scalar(p) for p in text.split(",")) if text else ()
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(text):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive ([wave] N)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}".replace("\n", " ")) from None
    unknown = set(cp.sections()) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    sections = {}
    for name, cls in _SECTIONS.items():
        types = typing.get_type_hints(cls)
        kwargs = {}
        if cp.has_section(name):
            for key, raw in cp.items(name):
                if key not in types:
                    raise ConfigError(f"[{name}] unknown key {key!r}")
                kwargs[key] = _parse_value(raw, types[key], f"[{name}] {key}")
        sections[name] = cls(**kwargs)
    cfg = ExperimentConfig(**sections)
    validate_config(cfg)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(cfg):
    lines = []
    for name in _SECTIONS:
        sec = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in dataclasses.fields(sec):
            lines.append(f"{f.name} = {_fmt(getattr(sec, f.name))}")
        lines.append("")
    return "\n".join(lines)


def validate_config(cfg):
    g = cfg.grid
    if g.d not in (2, 3):
        raise ConfigError(f"[grid] d must be 2 or 3, got {g.d}")
    if g.n < 8 or g.n & (g.n - 1):
        raise ConfigError(f"[grid] n must be a power of two >= 8, got {g.n}")
    if cfg.pressure.kind not in ("gamma_law", "custom_table"):
        raise ConfigError(f"[pressure] unknown kind {cfg.pressure.kind!r}")
    if cfg.initial.family not in ("constant", "acoustic", "gaussian_bump", "random_low_mode", "file"):
        raise ConfigError(f"[initial] unknown family {cfg.initial.family!r}")
    if cfg.initial.family == "file" and not cfg.initial.path:
        raise ConfigError("[initial] family=file needs a path")
    if cfg.initial.momentum and len(cfg.initial.momentum) != g.d:
        raise ConfigError("[initial] momentum must have d components")
    if cfg.initial.mode and len(cfg.initial.mode) != g.d:
        raise ConfigError("[initial] mode must have d components")
    s = cfg.solver
    if not 0 < s.cfl <= 1:
        raise ConfigError(f"[solver] cfl must lie in (0, 1], got {s.cfl}")
    if s.t_end <= 0 or s.snap_every < 1:
        raise ConfigError("[solver] need t_end > 0 and snap_every >= 1")
    if cfg.profile.kind not in ("exponential", "constant", "table"):
        raise ConfigError(f"[profile] unknown kind {cfg.profile.kind!r}")
    w = cfg.wave
    if len(w.xi) != g.d or len(w.a_dir) != g.d:
        raise ConfigError("[wave] xi and a_dir must have d components")
    if any(int(n) != n or n <= 0 for n in w.N):
        raise ConfigError("[wave] N must be positive integers")
    if not 0 < w.target_margin_fraction < 1:
        raise ConfigError("[wave] target_margin_fraction must lie in (0, 1)")
    if cfg.budget.target_eps <= 0 or cfg.budget.p < 1:
        raise ConfigError("[budget] need target_eps > 0 and p >= 1")
    if cfg.window.eps0 <= 0:
        raise ConfigError("[window] eps0 must be positive")
