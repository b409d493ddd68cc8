import json

import pytest

from asmgue.enumerate import refined_count
from asmgue.errors import BudgetExceeded, ConfigError
from asmgue.experiment import ExperimentConfig, run_experiment


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(sizes=[]).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(sizes=[3], depth=4).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(sizes=[8], method="direct").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(sizes=[128]).validate()
    ExperimentConfig(sizes=[128], method="glauber").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(sizes=[4], samples=3).validate()


def test_config_file_format():
    cfg = ExperimentConfig.from_text("sizes = 8, 16  # ladder\nsamples=500\nalpha = 0.01\n\nmethod = cftp\n")
    assert cfg.sizes == [8, 16] and cfg.samples == 500 and cfg.alpha == 0.01 and cfg.method == "cftp"
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("sizes = 3\ncolour = blue\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("samples = 10\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("sizes 3\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("sizes = 3\nsamples = many\n")


def test_direct_n3_matches_refined_counts(tmp_path):
    cfg = ExperimentConfig(sizes=[3], method="direct", depth=1, samples=7000, seed=5, out_dir=str(tmp_path))
    report = run_experiment(cfg)
    (entry,) = report["sizes"]
    chi = next(t for t in entry["tests"] if t["name"] == "chi2_eta_1_1_exact")
    assert chi["pvalue"] > 0.001 and chi["passed"]
    assert [refined_count(3, k) for k in (1, 2, 3)] == [2, 3, 2]
    assert entry["maximal_minus_ones"]["exact"] == 1.0
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["manifest"]["config"]["seed"] == 5


def test_report_reproducible_from_manifest(tmp_path):
    first = run_experiment(ExperimentConfig(sizes=[5, 6], samples=400, depth=2, seed=17, out_dir=str(tmp_path / "a")))
    cfg = ExperimentConfig.from_mapping(
        {k: v for k, v in first["manifest"]["config"].items() if k != "out_dir"} | {"out_dir": str(tmp_path / "b")}
    )
    second = run_experiment(cfg)
    strip = lambda r: json.dumps(r["sizes"], sort_keys=True)
    assert strip(first) == strip(second)
    a = (tmp_path / "a" / "boundary_n6.csv").read_text()
    assert a == (tmp_path / "b" / "boundary_n6.csv").read_text()


def test_maximal_frequency_against_exact():
    report = run_experiment(ExperimentConfig(sizes=[4, 5], samples=20_000, depth=3, seed=3))
    for entry in report["sizes"]:
        m = entry["maximal_minus_ones"]
        assert abs(m["frequency"] - m["exact"]) < 4 * m["stderr"]
        assert entry["interlacing_violations"] == 0


def test_ks_threshold_mode():
    report = run_experiment(ExperimentConfig(sizes=[20], samples=500, seed=2, ks_max=0.9))
    assert all(t["passed"] for t in report["sizes"][0]["tests"])
    report = run_experiment(ExperimentConfig(sizes=[20], samples=500, seed=2, ks_max=0.001))
    assert not report["passed"]


def test_partial_flush_on_error(tmp_path, monkeypatch):
    import asmgue.experiment as ex

    calls = {"n": 0}
    real = ex.sample_asms

    def flaky(n, *a, **k):
        calls["n"] += 1
        if calls["n"] == 2:
            raise BudgetExceeded("synthetic")
        return real(n, *a, **k)

    monkeypatch.setattr(ex, "sample_asms", flaky)
    with pytest.raises(BudgetExceeded):
        run_experiment(ExperimentConfig(sizes=[4, 5], samples=100, seed=1, out_dir=str(tmp_path)))
    saved = json.loads((tmp_path / "report.json").read_text())
    assert len(saved["sizes"]) == 1 and saved["error"]["category"] == "budget"
