import csv

import numpy as np
import pytest

from mpform.cli import main, run
from mpform.config import build_forcing, build_initial, build_problem, dumps_config, load_config, loads_config
from mpform.errors import ParseError, SemanticError, UnknownPreset
from mpform.presets import PRESETS, preset, preset_names
from mpform.problem import validate_spec


def _read(path):
    return open(path, "rb").read()


# ------------------------------------------------------------------ config
def test_minimal_config_defaults(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[problem]\npreset = "heat-dirichlet"\n', encoding="utf-8")
    cfg = load_config(p)
    assert cfg.mesh["N"] == 100 and cfg.time["tau"] == 1e-3 and cfg.time["T"] == 1.0
    assert cfg.time["scheme"] == "implicit-euler" and cfg.suite["name"] == "solve"


@pytest.mark.parametrize("text,key", [
    ('[problem]\npreset = "heat-dirichlet"\n[mesh]\nN = 0\n', "mesh.N"),
    ('[problem]\npreset = "heat-dirichlet"\n[mesh]\nsize = 4\n', "mesh.size"),
    ('[problem]\npreset = "heat-dirichlet"\n[solver]\nx = 1\n', "solver"),
    ('[problem]\npreset = "heat-dirichlet"\n[time]\ntau = -1.0\n', "time.tau"),
    ('[problem]\npreset = "no-such"\n', "problem.preset"),
    ('[problem]\npreset = "heat-dirichlet"\n[problem.params]\nrho = 2.0\n', "problem.params.rho"),
    ('[problem]\npreset = "heat-dirichlet"\n[suite]\nname = "fly"\n', "suite.name"),
])
def test_semantic_errors_name_the_key(text, key):
    with pytest.raises(SemanticError) as exc:
        loads_config(text)
    assert exc.value.key == key


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        loads_config('[problem]\npreset = "heat-dirichlet"\n[mesh]\nN = = 3\n')
    assert exc.value.line == 4 and exc.value.column is not None


def test_round_trip_is_identity():
    text = """
[problem]
preset = "damped-wave-free"
[problem.params]
rho = {t = [0.0, 0.5, 1.0], values = [2.0, 2.4, 2.8]}
k = 0.5
[mesh]
N = 16
[time]
scheme = "crank-nicolson"
tau = 0.01
[output]
snapshots = [0.5]
"""
    cfg = loads_config(text)
    again = loads_config(dumps_config(cfg))
    assert again == cfg and again.to_dict() == cfg.to_dict()


def test_density_table_builds_and_validates():
    ts = np.linspace(0, 1, 6)
    vals = ", ".join(repr(float(2 + np.sin(t))) for t in ts)
    text = f"""
[problem]
preset = "damped-wave-dirichlet"
[problem.params]
rho = {{t = [{", ".join(repr(float(t)) for t in ts)}], values = [{vals}]}}
"""
    spec = build_problem(loads_config(text))
    assert spec.breakpoints == tuple(ts[1:-1])
    rep = validate_spec(spec)
    assert rep.ok
    assert rep.M1 == pytest.approx(1.0)  # E = 1 dominates 1 / rho
    assert spec.H.eval(0.2, 0.5)[0, 0] == pytest.approx(1 / (2 + np.sin(0.2)))


def test_inline_coefficients():
    text = """
[problem.coefficients]
n = 2
k = 1
r = 1
G = [[1.0], [0.0]]
F = [[0.7071067811865476], [0.7071067811865476]]
W_R = [[0.0]]
P1 = [[0.0, 1.0], [1.0, 0.0]]
S = {zeta = [[[1.0]], [[0.5]]]}
H = [[1.0, 0.0], [0.0, "2.0+0j"]]
[initial]
kind = "poly"
coeffs = [[0.0, 1.0], [1.0, 0.0]]
[forcing]
kind = "constant"
value = [0.0, 1.0]
"""
    cfg = loads_config(text)
    spec = build_problem(cfg)
    assert validate_spec(spec).ok and spec.r == 1
    x0 = build_initial(cfg, spec)(np.array([0.0, 0.5]))
    assert np.allclose(x0, [[0.0, 1.0], [0.5, 1.0]])
    assert np.allclose(build_forcing(cfg, spec).eval(0.0, 0.3)[:, 0], [0.0, 1.0])


def test_inline_shape_error():
    text = """
[problem.coefficients]
n = 1
k = 1
r = 0
G = [[1.0]]
S = [[1.0, 0.0]]
H = [[1.0]]
"""
    with pytest.raises(SemanticError):
        loads_config(text)


# ------------------------------------------------------------------ presets
@pytest.mark.parametrize("name", preset_names())
def test_every_preset_validates(name):
    assert validate_spec(preset(name)).ok


def test_preset_catalogue():
    free = preset("damped-wave-free")
    assert free.r == 2 and np.allclose(free.F, np.eye(2)) and np.abs(free.W_R.eval(0, 0)).max() == 0
    robin = preset("heat-robin", w=1.0)
    assert np.allclose(robin.W_R.eval(0.0, 0.0), np.eye(2))
    dirichlet = preset("heat-dirichlet")
    assert dirichlet.r == 0 and dirichlet.F.shape == (2, 0)
    per = preset("heat-periodic")
    assert np.allclose(per.F.conj().T @ per.F, 1.0)
    wave = preset("damped-wave-dirichlet", rho=2.0, E=3.0)
    assert np.allclose(wave.H.eval(0.0, 0.5), np.diag([0.5, 3.0]))
    assert np.allclose(wave.P1.eval(0.0, 0.5), [[0, 1], [1, 0]])
    assert sorted(PRESETS) == sorted(preset_names())


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset("heat-cauchy")
    with pytest.raises(TypeError):
        preset("heat-dirichlet", rho=2.0)


# ---------------------------------------------------------------------- run
def _cfg(tmp_path, body, name="c.toml"):
    p = tmp_path / name
    p.write_text(body, encoding="utf-8")
    return str(p)


SOLVE = '[problem]\npreset = "heat-dirichlet"\n[mesh]\nN = 20\n[time]\ntau = 0.01\nT = 0.2\n[output]\nsnapshots = [0.1]\n'


def test_solve_writes_monotone_energy(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", _cfg(tmp_path, SOLVE), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "trajectory.csv", encoding="utf-8")))
    E = np.array([float(r["energy"]) for r in rows])
    assert len(rows) == 21 and np.all(np.diff(E) < 0)
    assert (out / "trajectory_snapshot_000010.csv").exists()
    report = open(out / "report.csv", encoding="utf-8").read().splitlines()
    assert report[0] == "t,check,passed,value"
    assert "all checks passed" in open(out / "summary.txt", encoding="utf-8").read()


def test_verify_damped_wave_free(tmp_path, capsys):
    cfg = '[problem]\npreset = "damped-wave-free"\n[mesh]\nN = 16\n[time]\ntau = 0.05\nT = 0.5\n[initial]\nkind = "cosine"\n'
    assert main(["verify", "--config", _cfg(tmp_path, cfg), "--out", str(tmp_path / "v")]) == 0
    out = capsys.readouterr().out
    for name in ("contraction-i", "contraction-ii", "contraction-iii", "garding-N128-t0", "energy-monotone"):
        assert f"PASS  {name}" in out


def test_opcheck_default(tmp_path, capsys):
    assert main(["opcheck", "--out", str(tmp_path / "op"), "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS  right-left-transform" in out


def test_failing_check_exit_code(tmp_path, capsys):
    body = """
[problem.coefficients]
n = 1
k = 1
r = 0
G = [[1.0]]
S = [[1.0]]
H = [[1.0]]
P0 = [[1.0]]
[mesh]
N = 8
[time]
tau = 0.1
"""
    assert main(["verify", "--config", _cfg(tmp_path, body), "--out", str(tmp_path / "f")]) == 1
    assert "first failing check: contraction-ii" in capsys.readouterr().err


def test_configuration_errors_exit_2(tmp_path, capsys):
    assert main(["run", "--config", _cfg(tmp_path, "[problem\n")]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["run", "--config", _cfg(tmp_path, '[problem]\npreset = "heat-dirichlet"\n[mesh]\nN = 0\n')]) == 2


def test_presets_command(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in preset_names())


def test_identical_runs_are_byte_identical(tmp_path):
    path = _cfg(tmp_path, SOLVE)
    for d in ("a", "b"):
        assert main(["run", "--config", path, "--out", str(tmp_path / d)]) == 0
    for f in ("trajectory.csv", "trajectory_snapshot_000010.csv", "report.csv", "summary.txt"):
        assert _read(tmp_path / "a" / f) == _read(tmp_path / "b" / f)


def test_run_function_returns_checks(tmp_path):
    cfg = loads_config(SOLVE)
    status, checks = run(cfg, str(tmp_path / "r"))
    assert status == 0 and [c.name for c in checks] == ["assumptions", "energy-monotone"]
