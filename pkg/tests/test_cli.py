import json
import os
import re
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wildeuler.cli import main
from wildeuler.config import (ConfigError, ExperimentConfig, GridSection, InitialSection,
                              ProfileSection, SolverSection, WaveSection, dump_config, parse_config)
from wildeuler.fields import TorusGrid
from wildeuler.wef import write_wef

CONSTANT = """
[grid]
n = 16
[initial]
family = constant
momentum = 1.0, 0.0
[solver]
t_end = 0.2
[profile]
kind = constant
value = 0.5
[wave]
N = 2, 4, 8
amplitude_samples = 4
[window]
sweep = false
"""

SMALL_BUMP = """
[grid]
n = 16
[initial]
family = gaussian_bump
amplitude = 0.3
[solver]
t_end = 0.05
[profile]
kind = exponential
eps = 0.3
[wave]
xi = 1, 1
a_dir = 1.0, -1.0
N = 2, 4
amplitude_samples = 4
[window]
eps0 = 0.4
[budget]
N = 2, 4, 8
p = 4.0
"""


def write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run_all(cfg, out, threads):
    for cmd in ("solve", "certify", "window", "budget", "report"):
        assert main([cmd, "--config", cfg, "--out", out, "--threads", str(threads), "--quiet"]) == 0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.sampled_from([8, 16, 32]), st.floats(0.01, 1.0),
       st.floats(1e-3, 10.0), st.integers(0, 2 ** 64 - 1),
       st.lists(st.integers(1, 64), min_size=1, max_size=4))
def test_config_round_trip(d, n, cfl, t_end, seed, Ns):
    cfg = ExperimentConfig(
        grid=GridSection(d, n),
        initial=InitialSection(family="acoustic", amplitude=1e-3, mode=(1,) * d),
        solver=SolverSection(cfl=cfl, t_end=t_end),
        profile=ProfileSection(kind="exponential", eps=0.1),
        wave=WaveSection(xi=(1,) + (0,) * (d - 1), a_dir=(0.0,) * (d - 1) + (1.0,), N=tuple(Ns)),
    ).with_seed(seed)
    text = dump_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert dump_config(again) == text
    assert again.digest() == cfg.digest()


def test_config_errors():
    for bad in ("[grid]\nn = 12\n", "[grid]\nd = 4\n", "[nope]\nx = 1\n", "[grid]\nq = 1\n",
                "[solver]\ncfl = 2.0\n", "[solver]\ndealias = maybe\n", "not an ini"):
        with pytest.raises(ConfigError):
            parse_config(bad)


def test_exit_code_config_errors(tmp_path, capsys):
    out = str(tmp_path / "runs")
    assert main(["solve", "--config", str(tmp_path / "missing.ini"), "--out", out]) == 2
    assert main(["solve", "--out", out]) == 2
    assert main(["frobnicate"]) == 2
    bad = write(tmp_path, "[grid]\nn = 10\n")
    assert main(["solve", "--config", bad, "--out", out]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert all(line.startswith("error: ConfigError: ") for line in err)


def test_zero_profile_rejected(tmp_path, capsys):
    cfg = write(tmp_path, CONSTANT.replace("value = 0.5", "value = 0.0"))
    assert main(["certify", "--config", cfg, "--out", str(tmp_path / "runs")]) == 2
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "positiv" in err


def test_exit_code_numerical_abort(tmp_path, capsys):
    cfg = write(tmp_path, "[grid]\nn = 16\n[initial]\nfamily = random_low_mode\namplitude = 0.5\n"
                          "kmax = 1\n[solver]\nt_end = 4.0\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "runs"), "--quiet"]) == 3
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: NumericalAbort: ")


def test_exit_code_strict_certification(tmp_path):
    # Λ(t_end) ~ 1e-17: below the strictness tolerance, so the verdict fails
    cfg = write(tmp_path, CONSTANT.replace("kind = constant\nvalue = 0.5",
                                           "kind = exponential\neps = 0.1").replace("t_end = 0.2", "t_end = 0.4"))
    out = str(tmp_path / "runs")
    assert main(["certify", "--config", cfg, "--out", out, "--quiet"]) == 0
    assert main(["certify", "--config", cfg, "--out", out, "--quiet", "--strict"]) == 4


def test_constant_state_pipeline(tmp_path, capsys):
    cfg = write(tmp_path, CONSTANT)
    out = str(tmp_path / "runs")
    run_all(cfg, out, 1)
    (rdir,) = [os.path.join(out, d) for d in os.listdir(out)]
    solve = json.loads(open(os.path.join(rdir, "solve.json")).read())
    assert solve["t_reached"] == 0.2 and not solve["blowup_flag"]
    assert all(v <= 1e-13 for v in solve["drifts"].values())
    cert = json.loads(open(os.path.join(rdir, "certify.json")).read())
    assert cert["zero"]["margin_min"] == pytest.approx(0.5, abs=1e-12)
    assert [w["N"] for w in cert["waves"]] == [2, 4, 8]
    assert all(w["search"]["A_star"] > 0 for w in cert["waves"])
    assert cert["verdict"] == "pass"
    win = json.loads(open(os.path.join(rdir, "window.json")).read())
    assert win["window"]["T_w"] == 0.2
    bud = json.loads(open(os.path.join(rdir, "budget.json")).read())
    assert bud["budget"]["lambda0"] == 0.00125
    assert main(["report", rdir]) == 0
    text = capsys.readouterr().out
    assert "zero.margin_min" in text and "budget.lambda0" in text
    lines = [ln for ln in text.splitlines() if ln]
    assert len({re.match(r"\S+\s+", ln).end() for ln in lines}) == 1  # aligned columns
    assert open(os.path.join(rdir, "margins.csv")).readline().strip() == "t,min,mean,max"
    assert open(os.path.join(rdir, "window.csv")).readline().strip() == "t,M"


def test_acoustic_refinement(tmp_path):
    # mode 6 lies outside the dealiased band at n=16 and inside it at n=32
    errs = {}
    for n in (16, 32):
        cfg = write(tmp_path, f"[grid]\nn = {n}\n[initial]\nfamily = acoustic\namplitude = 1e-4\n"
                              "mode = 6, 0\n[solver]\nt_end = 0.1\n", f"a{n}.ini")
        out = str(tmp_path / f"runs{n}")
        assert main(["solve", "--config", cfg, "--out", out, "--quiet"]) == 0
        (d,) = os.listdir(out)
        errs[n] = json.loads(open(os.path.join(out, d, "solve.json")).read())["linear_oracle_error"]
    assert errs[32] <= 1e-7
    assert errs[32] < 1e-2 * errs[16]


def test_file_initial_data(tmp_path):
    g = TorusGrid(2, 16)
    rho = 1 + 0.1 * np.cos(np.pi * g.x[0])
    m = np.zeros((2,) + g.shape)
    path = str(tmp_path / "init.wef")
    write_wef(path, g, [("rho", "scalar", rho), ("m", "vector", m)], 0.0)
    cfg = write(tmp_path, f"[grid]\nn = 16\n[initial]\nfamily = file\npath = {path}\n[solver]\nt_end = 0.02\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "runs"), "--quiet"]) == 0
    wrong = write(tmp_path, f"[grid]\nn = 32\n[initial]\nfamily = file\npath = {path}\n", "w.ini")
    assert main(["solve", "--config", wrong, "--out", str(tmp_path / "runs"), "--quiet"]) == 2


def _tree(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            if f == "timings.json":
                continue
            p = os.path.join(dirpath, f)
            out[os.path.relpath(p, root)] = open(p, "rb").read()
    return out


def test_determinism_across_workers(tmp_path):
    cfg = write(tmp_path, SMALL_BUMP)
    run_all(cfg, str(tmp_path / "one"), 1)
    run_all(cfg, str(tmp_path / "eight"), 8)
    a, b = _tree(tmp_path / "one"), _tree(tmp_path / "eight")
    assert a.keys() == b.keys() and "report.json" in {os.path.basename(k) for k in a}
    assert a == b


def test_seed_changes_run_directory(tmp_path):
    cfg = write(tmp_path, "[grid]\nn = 16\n[initial]\nfamily = random_low_mode\namplitude = 0.01\nkmax = 1\n"
                          "[solver]\nt_end = 0.01\n")
    out = tmp_path / "runs"
    for seed in ("1", "2", "1"):
        assert main(["solve", "--config", cfg, "--out", str(out), "--seed", seed, "--quiet"]) == 0
    assert len(os.listdir(out)) == 2
    assert main(["solve", "--config", cfg, "--out", str(out), "--seed", "-1"]) == 2


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, CONSTANT)
    proc = subprocess.run([sys.executable, "-m", "wildeuler", "solve", "--config", cfg,
                           "--out", str(tmp_path / "runs")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip().startswith(str(tmp_path / "runs"))
