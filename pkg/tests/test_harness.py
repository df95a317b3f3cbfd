from __future__ import annotations

import csv
import io
import math

import pytest

from kvlab.harness import ConfigError, dumps_config, load_config, loads_config
from kvlab.harness.cli import main
from kvlab.harness.config import SweepSpec
from kvlab.harness.runner import (
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    certificate_for,
    deltas_from_arg,
    run_config,
    run_sweep,
    trajectory_csv,
)

BASE = """\
[params]
omega_len = 1
n = 64
a = 1
D = 1
T_star = 0.1

[material]
family = constant
c = 1

[initial]
u0 = 0.5
u0t = 0
theta0 = 0
"""


def _cfg(extra="", base=BASE):
    return loads_config(base + extra)


# ------------------------------------------------------------ config parsing


def test_minimal_config_defaults():
    cfg = _cfg()
    assert cfg.n == 64 and cfg.sample_stride == 10 and cfg.dt is None and cfg.M is None
    assert cfg.thresholds.pos_tol == 1e-10
    assert cfg.effective_dt == pytest.approx(min(0.25 / 63, 0.05))


def test_comments_and_whitespace():
    cfg = _cfg("\n# trailing comment\n[run]\n  sample_stride   =  3  \n")
    assert cfg.sample_stride == 3


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        (BASE.replace("a = 1", "aa = 1"), 4, "aa"),
        (BASE.replace("n = 64", "n = 6x4"), 3, "n"),
        (BASE.replace("n = 64", "n = "), 3, "n"),
        (BASE.replace("D = 1\n", "D = 1\nD = 2\n"), 6, "D"),
        (BASE + "[bogus]\n", 16, "bogus"),
        (BASE.replace("T_star = 0.1", "T_star = nan"), 6, "T_star"),
        (BASE.replace("u0 = 0.5", "u0 = 0.5 +"), 13, "u0"),
    ],
    ids=["unknown-key", "bad-int", "empty", "duplicate", "section", "nan", "law-syntax"],
)
def test_config_errors_carry_line(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        loads_config(text, path="case.ini")
    assert err.value.line == line
    assert str(err.value).startswith(f"case.ini:{line}:")
    assert fragment in str(err.value)


def test_missing_required_key():
    with pytest.raises(ConfigError, match="T_star"):
        loads_config(BASE.replace("T_star = 0.1\n", ""))


def test_bad_alpha_rejected():
    text = BASE.replace(
        "family = constant\nc = 1",
        "gamma = 1\nGamma = 1\nf = 0\nF = 0\ngamma_lo = 1\ngamma_hi = 1\nC_F = 1\nalpha = 1.5\nlip_gamma = 0\nlip_f = 0",
    )
    with pytest.raises(ConfigError, match="alpha"):
        loads_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_shipped_configs_round_trip(configs_dir):
    for path in sorted(configs_dir.glob("*.ini")):
        cfg = load_config(path)
        again = loads_config(dumps_config(cfg))
        assert again == cfg, path.name
        assert dumps_config(again) == dumps_config(cfg)


def test_round_trip_with_empty_sweep():
    cfg = _cfg("\n[sweep]\ngamma0 = 2\n")
    assert cfg.sweep == SweepSpec(gamma0=2.0)
    assert loads_config(dumps_config(cfg)) == cfg


def test_declared_mass_below_measured_is_an_error():
    with pytest.raises(ConfigError, match="below"):
        certificate_for(_cfg(base=BASE.replace("u0 = 0.5", "u0 = cos(pi*x)") + "M = 1\n"))


def test_deltas_from_arg(tmp_path):
    assert deltas_from_arg("0, 0.5 1") == (0.0, 0.5, 1.0)
    f = tmp_path / "d.txt"
    f.write_text("# header\n0.1\n0.2\n")
    assert deltas_from_arg(str(f)) == (0.1, 0.2)
    with pytest.raises(ConfigError):
        deltas_from_arg("0,x")
    for bad in ("0,-1", "0.2,0.1"):
        with pytest.raises(ConfigError):
            SweepSpec(deltas=deltas_from_arg(bad))


# ------------------------------------------------------------ golden outputs


def test_trajectory_csv_layout():
    text = trajectory_csv(run_config(_cfg()))
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert rows[0] == "t,int_ux2,int_ux4,int_vx2,int_vx4,int_thx2,linf_theta,theta_min,mass,w12_vminusau,y_value_log".split(",")
    assert all(len(r) == len(TRAJECTORY_COLUMNS) for r in rows)
    summary = rows[-1]
    assert summary[0] == "summary"
    assert summary[1] == "verdict=reached_T"
    assert "comparison=pass" in summary
    assert float(rows[1][0]) == 0.0 and math.isclose(float(rows[-2][0]), 0.1)


def test_sweep_layout_and_determinism(configs_dir):
    cfg = load_config(configs_dir / "sweep.ini")
    spec = SweepSpec(deltas=(0.0, 0.2, 3.0), repetitions=2)
    small = loads_config(dumps_config(cfg).replace("T_star = 0.5", "T_star = 0.05"))
    one = run_sweep(small, spec, jobs=1)
    two = run_sweep(small, spec, jobs=2)
    assert one == two
    rows = list(csv.reader(io.StringIO(one)))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert len(rows) == 1 + 6
    assert len({r[4] for r in rows[1:]}) == 1  # same certificate in every row
    assert [r[6] for r in rows[1:]] == ["reached_T"] * 4 + ["invalid_material"] * 2
    assert rows[1][:2] == ["0.0", "0"] and rows[2][:2] == ["0.0", "1"]
    assert rows[1][6:] == rows[2][6:]


# ------------------------------------------------------------ CLI


def test_cli_validate_certify(configs_dir, tmp_path, capsys):
    assert main(["validate", str(configs_dir / "coupled.ini"), "--out", str(tmp_path)]) == 0
    head = (tmp_path / "validation.csv").read_text().splitlines()[0]
    assert head == "hypothesis,verdict,advisory,bound,witness_s,witness_value,s_max,n_samples"
    assert main(["certify", str(configs_dir / "worked_example.ini"), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "certificate.csv").read_text().splitlines()
    assert lines[0] == "K0,rho,k1,Cp,Cgn,K1,K2,beta,kappa,chi,tau,s0,sigma_log,delta_star_log"
    values = dict(zip(lines[0].split(","), map(float, lines[1].split(","))))
    assert values["K1"] == 1122.0 and values["tau"] == 1123.0
    assert values["delta_star_log"] == pytest.approx(-9054.1617366778355576, rel=1e-12)
    assert "1122" in capsys.readouterr().out


def test_cli_run_and_lemmas(configs_dir, tmp_path, capsys):
    assert main(["run", str(configs_dir / "stationary.ini"), "--out", str(tmp_path), "--lemmas"]) == 0
    out = capsys.readouterr().out
    assert "verdict=reached_T" in out and "comparison=pass" in out
    assert (tmp_path / "trajectory.csv").is_file()


def test_cli_step_failure_exit_code(configs_dir, tmp_path, capsys):
    assert main(["run", str(configs_dir / "huge_dt.ini"), "--out", str(tmp_path)]) == 3
    assert "verdict=step_failure" in capsys.readouterr().out


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text(BASE.replace("a = 1", "aa = 1"))
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
    assert f"{bad}:4:" in capsys.readouterr().err
    assert main(["certify", str(tmp_path / "missing.ini")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_sweep_and_mms(configs_dir, tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text((configs_dir / "sweep.ini").read_text().replace("T_star = 0.5", "T_star = 0.02"))
    assert main(["sweep", str(cfg), "--deltas", "0,0.1", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep.csv").read_text().splitlines()[0] == ",".join(SWEEP_COLUMNS)
    assert main(["mms", str(configs_dir / "mms.ini"), "--levels", "2", "--out", str(tmp_path)]) in (0, 1)
    assert (tmp_path / "mms.csv").read_text().splitlines()[0] == (
        "n,dx,dt,err_u,err_v,err_theta,order_u,order_v,order_theta"
    )


def test_cli_invalid_material_refuses_to_run(tmp_path, capsys):
    text = BASE.replace(
        "family = constant\nc = 1",
        "gamma = 1 + tanh(s)\nGamma = 1\nf = 0\nF = 0\ngamma_lo = 1\ngamma_hi = 1.5\nC_F = 1\nalpha = 0.5\nlip_gamma = 1\nlip_f = 0",
    )
    bad = tmp_path / "m.ini"
    bad.write_text(text)
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["validate", str(bad)]) == 1
