import json

import pytest
from click.testing import CliRunner

from qutrit_gst import __version__
from qutrit_gst.cli import main
from qutrit_gst.design import design_from_json
from qutrit_gst.jsonio import load as load_json
from qutrit_gst.noise import load_counts
from qutrit_gst.rb import load_rb_csv


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, runner):
    """Chained design -> simulate artifacts shared by the later commands."""
    root = tmp_path_factory.mktemp("cli")
    res = runner.invoke(main, [
        "design", "--max-length", "0", "--output-dir", str(root),
    ])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, [
        "simulate",
        "--design", str(root / "design.json"),
        "--shots", "80", "--seed", "3", "--depolarizing", "0.05",
        "--output-dir", str(root),
    ])
    assert res.exit_code == 0, res.output
    return root


def test_version(runner):
    res = runner.invoke(main, ["--version"])
    assert res.exit_code == 0
    assert __version__ in res.output


def test_design_outputs(runner, workdir):
    design = design_from_json(load_json(workdir / "design.json"))
    assert len(design.circuits) == 252
    # config.json echoes the most recent run in the directory (the simulate)
    cfg = load_json(workdir / "config.json")
    assert cfg["shots"] == 80
    assert cfg["noise"] == {"depolarizing": 0.05}


def test_simulate_outputs(workdir):
    records = load_counts(workdir / "counts.csv")
    assert len(records) == 252
    assert all(r.shots == 80 for r in records)


def test_simulate_missing_design(runner):
    res = runner.invoke(main, ["simulate", "--shots", "10"])
    assert res.exit_code == 2
    assert "missing required design file" in res.output


def test_estimate_and_analyze(runner, workdir, tmp_path):
    res = runner.invoke(main, [
        "estimate",
        "--design", str(workdir / "design.json"),
        "--counts", str(workdir / "counts.csv"),
        "--max-iter", "15",
        "--output-dir", str(tmp_path),
    ])
    assert res.exit_code == 0, res.output
    assert "loglike:" in res.output
    estimate = load_json(tmp_path / "estimate.json")
    assert set(estimate["gates"]) == {"Gi", "Gz1", "Gz2", "Gx01", "Gx12", "Gh"}

    res = runner.invoke(main, [
        "analyze",
        "--estimate", str(tmp_path / "estimate.json"),
        "--threads", "2",
        "--output-dir", str(tmp_path),
    ])
    assert res.exit_code == 0, res.output
    analysis = load_json(tmp_path / "analysis.json")
    assert analysis["schema"] == 1
    assert set(analysis["gates"]) == set(estimate["gates"])


def test_estimate_nonexistent_counts(runner, workdir, tmp_path):
    res = runner.invoke(main, [
        "estimate",
        "--design", str(workdir / "design.json"),
        "--counts", str(tmp_path / "nope.csv"),
    ])
    assert res.exit_code == 2
    assert "does not exist" in res.output


def test_rb_outputs(runner, tmp_path):
    res = runner.invoke(main, [
        "rb", "--rb-lengths", "1,2", "--rb-sequences", "2",
        "--rb-shots", "100", "--seed", "1", "--depolarizing", "0.05",
        "--output-dir", str(tmp_path),
    ])
    assert res.exit_code == 0, res.output
    assert "infidelity per Clifford" in res.output
    survivals = load_rb_csv(tmp_path / "rb.csv")
    assert set(survivals) == {1, 2}
    fit = load_json(tmp_path / "rb_fit.json")
    assert set(fit["fit"]) == {"A", "B", "p"}


def test_rb_bad_lengths(runner):
    res = runner.invoke(main, ["rb", "--rb-lengths", "1,x"])
    assert res.exit_code == 2
    assert "bad length list" in res.output


def test_overrotation_flag_round_trip(runner, workdir, tmp_path):
    res = runner.invoke(main, [
        "simulate",
        "--design", str(workdir / "design.json"),
        "--shots", "20", "--seed", "0",
        "--overrotation", "Gx01=0.1",
        "--output-dir", str(tmp_path),
    ])
    assert res.exit_code == 0, res.output
    cfg = load_json(tmp_path / "config.json")
    assert cfg["noise"]["overrotation"] == {"Gx01": 0.1}


def test_overrotation_flag_requires_value(runner, workdir):
    res = runner.invoke(main, [
        "simulate", "--design", str(workdir / "design.json"),
        "--overrotation", "Gx01",
    ])
    assert res.exit_code == 2
    assert "GATE=RADIANS" in res.output


def test_seed_from_environment(runner, workdir, tmp_path):
    res = runner.invoke(main, [
        "simulate", "--design", str(workdir / "design.json"),
        "--shots", "20", "--output-dir", str(tmp_path),
    ], env={"GST_SEED": "5"})
    assert res.exit_code == 0, res.output
    assert load_json(tmp_path / "config.json")["seed"] == 5


def test_flag_beats_environment(runner, workdir, tmp_path):
    res = runner.invoke(main, [
        "simulate", "--design", str(workdir / "design.json"),
        "--shots", "20", "--seed", "3", "--output-dir", str(tmp_path),
    ], env={"GST_SEED": "5"})
    assert res.exit_code == 0, res.output
    assert load_json(tmp_path / "config.json")["seed"] == 3


def test_bad_environment_seed(runner, workdir):
    res = runner.invoke(main, [
        "simulate", "--design", str(workdir / "design.json"), "--shots", "20",
    ], env={"GST_SEED": "abc"})
    assert res.exit_code == 2
    assert "GST_SEED" in res.output


def test_config_file_beats_flags(runner, workdir, tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"shots": 60}))
    res = runner.invoke(main, [
        "simulate", "--design", str(workdir / "design.json"),
        "--shots", "999", "--seed", "1",
        "--config", str(cfg_path), "--output-dir", str(tmp_path),
    ])
    assert res.exit_code == 0, res.output
    assert load_json(tmp_path / "config.json")["shots"] == 60
    records = load_counts(tmp_path / "counts.csv")
    assert all(r.shots == 60 for r in records)


def test_pipeline_artifacts(runner, tmp_path):
    res = runner.invoke(main, [
        "pipeline", "--shots", "60", "--seed", "2", "--max-length", "0",
        "--max-iter", "10", "--rb-lengths", "1,2", "--rb-sequences", "2",
        "--rb-shots", "60", "--depolarizing", "0.05",
        "--output-dir", str(tmp_path),
    ])
    assert res.exit_code == 0, res.output
    for name in ("config.json", "design.json", "counts.csv", "estimate.json",
                 "rb.csv", "report.json"):
        assert (tmp_path / name).exists(), name
    report = load_json(tmp_path / "report.json")
    assert report["schema"] == 1
    assert report["config"]["seed"] == 2
    assert "comparison" in report
    assert "output_dir" not in report["config"]


def test_domain_error_surfaces_as_click_error(runner, workdir, tmp_path):
    res = runner.invoke(main, [
        "simulate", "--design", str(workdir / "design.json"),
        "--shots", "10", "--depolarizing", "1.5",
        "--output-dir", str(tmp_path),
    ])
    assert res.exit_code == 1
    assert "/simulate failed (422)" in res.output
