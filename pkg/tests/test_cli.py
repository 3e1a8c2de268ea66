"""Command-line contract: exit codes, schemas, precedence, reproducibility."""

import csv
import json

import pytest

from trapstats.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def diag(err):
    obj = json.loads(err.strip().splitlines()[-1])
    assert set(obj) == {"error", "message"}
    return obj


# ----------------------------------------------------------------- exit codes


def test_steady_json_on_stdout(capsys):
    code, out, _ = run(capsys, "steady", "--R", "6000", "--gamma", "0.2",
                       "--beta2", "500", "--removed", "2")
    assert code == 0
    obj = json.loads(out)
    assert obj["moments"]["mean"] == pytest.approx(3.596193, abs=1e-4)
    assert obj["moments"]["fano"] == pytest.approx(0.740269, abs=1e-4)
    assert sum(obj["probs"]) == pytest.approx(1.0)


def test_validation_failures_exit_1(capsys):
    code, _, err = run(capsys, "sample", "--R", "1", "--gamma", "1",
                       "--t-samples", "1.0", "--n-traj", "0")
    assert code == 1
    assert diag(err)["error"] == "ValidationError"

    code, _, err = run(capsys, "steady", "--bogus-flag")
    assert code == 1
    diag(err)

    code, _, err = run(capsys, "evolve", "--R", "1", "--gamma", "1")
    assert code == 1  # no --t-end

    code, _, err = run(capsys, "steady", "--R", "1", "--gamma", "1",
                       "--channel", "2,2")
    assert code == 1  # malformed channel spec

    code, _, err = run(capsys, "steady")
    assert code == 1  # all rates zero
    assert diag(err)["error"] == "ValidationError"


def test_numerical_failures_exit_2(capsys):
    # R=0 with a pure pair channel has two absorbing states
    code, _, err = run(capsys, "steady", "--R", "0", "--gamma", "0",
                       "--beta2", "500", "--n-max", "10")
    assert code == 2
    assert diag(err)["error"] == "NonUniqueSteadyStateError"


def test_version_and_help_exit_0(capsys):
    assert run(capsys, "--version")[0] == 0
    assert run(capsys, "steady", "--help")[0] == 0


# -------------------------------------------------------------------- schemas


def test_vankampen_csv_relaxes_to_three_quarters(capsys):
    code, out, _ = run(capsys, "vankampen", "--phi0", "0", "--tau-end", "20")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert list(rows[0]) == ["tau", "phi", "xi2", "fano"]
    assert float(rows[-1]["tau"]) == pytest.approx(20.0)
    assert float(rows[-1]["fano"]) == pytest.approx(0.75, abs=1e-6)


def test_evolve_csv_schema(capsys, tmp_path):
    out_file = tmp_path / "ev.csv"
    code, _, _ = run(capsys, "evolve", "--preset", "fig2",
                     "--n-samples", "11", "--out", str(out_file))
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert list(rows[0]) == ["t", "N", "p_N"]
    times = sorted({float(r["t"]) for r in rows})
    assert len(times) == 11
    assert times[-1] == pytest.approx(3e-3)
    # each block is a distribution
    mass = sum(float(r["p_N"]) for r in rows if float(r["t"]) == times[-1])
    assert mass == pytest.approx(1.0, abs=1e-9)
    assert (tmp_path / "ev.csv.manifest.json").exists()


def test_sample_csv_schema(capsys, tmp_path):
    out_file = tmp_path / "tr.csv"
    code, _, _ = run(capsys, "sample", "--R", "100", "--gamma", "1",
                     "--t-samples", "0.01,0.05", "--n-traj", "50",
                     "--seed", "3", "--out", str(out_file))
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert list(rows[0]) == ["traj", "t", "N"]
    assert len(rows) == 100
    assert {r["t"] for r in rows} == {"0.01", "0.05"}


def test_sample_json_reports_standard_errors(capsys):
    code, out, _ = run(capsys, "sample", "--R", "100", "--gamma", "1",
                       "--t-samples", "0.05", "--n-traj", "400",
                       "--seed", "3", "--format", "json", "--bootstrap")
    assert code == 0
    obj = json.loads(out)
    m = obj["moments"][0]
    assert m["se_fano"] > 0
    assert obj["se_fano_bootstrap"]
    assert obj["n_traj"] == 400


def test_sweep_csv_schema(capsys):
    code, out, _ = run(capsys, "sweep", "--gamma", "0.2", "--beta2", "500",
                       "--grid", "10,100", "--backends", "master,vankampen")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert list(rows[0]) == ["R", "mean", "variance", "fano", "backend",
                             "stderr_fano", "error"]
    assert len(rows) == 4
    assert [r["backend"] for r in rows] == ["master", "vankampen"] * 2


def test_steady_csv_writes_moments_sidecar(capsys, tmp_path):
    out_file = tmp_path / "st.csv"
    code, _, _ = run(capsys, "steady", "--R", "6000", "--gamma", "0.2",
                     "--beta2", "500", "--format", "csv", "--out", str(out_file))
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert list(rows[0]) == ["N", "p_N"]
    side = json.loads((tmp_path / "st.csv.moments.json").read_text())
    assert side["moments"]["mean"] == pytest.approx(3.596193, abs=1e-4)


def test_dump_generator(capsys, tmp_path):
    gen_file = tmp_path / "gen.csv"
    code, _, _ = run(capsys, "steady", "--R", "6000", "--gamma", "0.2",
                     "--beta2", "500", "--n-max", "6",
                     "--dump-generator", str(gen_file))
    assert code == 0
    rows = list(csv.DictReader(gen_file.open()))
    assert list(rows[0]) == ["row", "col", "rate"]
    assert any(float(r["rate"]) == 6000.0 for r in rows)


# ------------------------------------------------------------- repeatability


def test_outputs_are_byte_identical_across_reruns(capsys, tmp_path):
    args = ("evolve", "--preset", "fig2", "--n-samples", "21")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()

    args = ("sample", "--R", "100", "--gamma", "1", "--t-samples", "0.05",
            "--n-traj", "200", "--seed", "11")
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    assert run(capsys, *args, "--threads", "1", "--out", str(c))[0] == 0
    assert run(capsys, *args, "--threads", "4", "--out", str(d))[0] == 0
    assert c.read_bytes() == d.read_bytes()


# ------------------------------------------------------------ configuration


def test_preset_config_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"R": 300.0}))
    out_file = tmp_path / "st.json"

    # preset alone
    code, _, _ = run(capsys, "steady", "--preset", "fig2", "--out", str(out_file))
    assert code == 0
    man = json.loads((tmp_path / "st.json.manifest.json").read_text())
    assert man["config"]["R"] == 6000

    # config file overrides the preset
    code, _, _ = run(capsys, "steady", "--preset", "fig2", "--config", str(cfg),
                     "--out", str(out_file))
    assert code == 0
    man = json.loads((tmp_path / "st.json.manifest.json").read_text())
    assert man["config"]["R"] == 300.0

    # explicit flag beats both
    code, _, _ = run(capsys, "steady", "--preset", "fig2", "--config", str(cfg),
                     "--R", "77", "--out", str(out_file))
    assert code == 0
    man = json.loads((tmp_path / "st.json.manifest.json").read_text())
    assert man["config"]["R"] == 77.0
    assert man["config"]["gamma"] == 0.2  # preset still fills the rest
    assert man["tool"] == "trapstats"


def test_unknown_config_key_rejected(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"loading": 1.0}))
    code, _, err = run(capsys, "steady", "--R", "1", "--gamma", "1",
                       "--config", str(cfg))
    assert code == 1
    assert "unknown config key" in diag(err)["message"]


def test_missing_config_file(capsys):
    code, _, err = run(capsys, "steady", "--R", "1", "--gamma", "1",
                       "--config", "/nonexistent/cfg.json")
    assert code == 1
