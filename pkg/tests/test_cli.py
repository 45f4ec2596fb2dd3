import json

import numpy as np
import pytest

from ddlab.cli import ConfigError, load_config, main, parse_config, run, validate
from ddlab.gaussian_theory import defect_table, init_error_fd
from ddlab.schedules import make_schedule
from ddlab.spectral import Spectrum


def write_toml(path, text):
    path.write_text(text)
    return str(path)


GOOD_TABLE = """
kind = "defect_table"
[schedule]
family = "vp"
beta = 5.0
sigma_max = 80.0
[diffusion]
alpha = 0.25
[sweep]
grid = [0.5, 2.0]
"""

GMM_SMALL = """
kind = "gmm_fd"
[schedule]
family = "ve"
sigma_max = 20.0
T = 1.0
[diffusion]
alpha = 0.25
K = 10
[spectrum.power_law]
d = 6
p = 0.8
lam_max = 4.0
[gmm]
centers = 3
seed = 2
scatter_frac = 0.2
[sweep]
c_grid = [1.0]
beta_grid = [2.0]
[mc]
n = 400
seed = 5
bootstrap = 16
"""


# ---------------------------------------------------------------------------
# config loading and validation


def test_validate_accepts_good_config(tmp_path, capsys):
    cfg = write_toml(tmp_path / "exp.toml", GOOD_TABLE)
    assert main(["validate", "--config", cfg]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_reports_problems(tmp_path, capsys):
    cfg = write_toml(
        tmp_path / "exp.toml",
        """
kind = "gmm_fd"
[schedule]
family = "ve"
[spectrum]
lambdas = [1.0]
[sweep]
c_grid = [1.0]
beta_grid = [2.0]
""",
    )
    assert main(["validate", "--config", cfg]) == 2
    out = capsys.readouterr().out
    assert "power_law" in out


def test_unparseable_config_exits_2(tmp_path, capsys):
    cfg = write_toml(tmp_path / "exp.toml", "kind = [broken")
    assert main(["validate", "--config", cfg]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_kind_rejected(tmp_path):
    cfg = write_toml(tmp_path / "exp.toml", 'kind = "frobnicate"\n[schedule]\nfamily = "ve"\n')
    with pytest.raises(ConfigError):
        load_config(cfg)


def test_missing_spectrum_csv_named_in_problems(tmp_path):
    ec = parse_config(
        {
            "kind": "init_error_scan",
            "schedule": {"family": "ve", "sigma_max": 80.0},
            "spectrum": {"csv": "nope.csv"},
            "sweep": {"grid": [40.0]},
        },
        tmp_path,
    )
    problems = validate(ec)
    assert any("nope.csv" in p for p in problems)


def test_json_config_supported(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(
        json.dumps(
            {
                "kind": "defect_table",
                "schedule": {"family": "ve", "sigma_max": 80.0, "beta": 5.0},
                "sweep": {"grid": [1.0]},
            }
        )
    )
    ec = load_config(str(cfg))
    assert ec.kind == "defect_table"
    assert validate(ec) == []


def test_run_requires_output_directory(tmp_path, capsys):
    cfg = write_toml(tmp_path / "exp.toml", GOOD_TABLE)
    assert main(["run", "--config", cfg]) == 2
    assert "output directory" in capsys.readouterr().err


def test_run_validate_flag_runs_nothing(tmp_path, capsys):
    cfg = write_toml(tmp_path / "exp.toml", GOOD_TABLE)
    assert main(["run", "--config", cfg, "--validate", "--out", "res"]) == 0
    assert "ok" in capsys.readouterr().out
    assert not (tmp_path / "res").exists()


# ---------------------------------------------------------------------------
# experiment kinds, outputs, and the manifest


def test_defect_table_kind_matches_library(tmp_path, capsys):
    cfg = write_toml(tmp_path / "exp.toml", GOOD_TABLE)
    assert main(["run", "--config", cfg, "--out", "res"]) == 0
    out = capsys.readouterr().out.split()
    assert out == ["defect_table.csv", "manifest.json"]
    sched = make_schedule("vp", beta=5.0, sigma_max=80.0, T=1.0)
    want = tmp_path / "want.csv"
    defect_table([0.5, 2.0], sched, 0.25, second_order=True).to_csv(want)
    assert (tmp_path / "res" / "defect_table.csv").read_text() == want.read_text()


def test_manifest_contents(tmp_path):
    cfg = write_toml(tmp_path / "exp.toml", GOOD_TABLE)
    assert main(["run", "--config", cfg, "--out", "res"]) == 0
    manifest = json.loads((tmp_path / "res" / "manifest.json").read_text())
    assert manifest["kind"] == "defect_table"
    assert len(manifest["config_sha256"]) == 64
    assert manifest["outputs"] == ["defect_table.csv"]
    assert manifest["seed_override"] is False
    assert "version" in manifest and "generated_at" in manifest


def test_init_error_scan_rows(tmp_path):
    cfg = write_toml(
        tmp_path / "exp.toml",
        """
kind = "init_error_scan"
[schedule]
family = "ve"
beta = 5.0
sigma_max = 80.0
[spectrum]
lambdas = [1.0]
mean_proj = [2.0]
[sweep]
grid = [80.0, 40.0]
alpha_grid = [0.0, 0.5]
""",
    )
    assert main(["run", "--config", cfg, "--out", "res"]) == 0
    lines = (tmp_path / "res" / "init_error_scan.csv").read_text().strip().splitlines()
    assert lines[0] == "alpha,sigma_t,fd"
    assert len(lines) == 5
    sp = Spectrum(np.array([1.0]), mean_proj=np.array([2.0]))
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 40.0
    assert float(first[2]) == pytest.approx(init_error_fd(sp, 0.0, 40.0), rel=1e-12)


def test_numeric_failure_labels_the_sweep_point(tmp_path, capsys):
    cfg = write_toml(
        tmp_path / "exp.toml",
        """
kind = "init_error_scan"
[schedule]
family = "ve"
beta = 5.0
sigma_max = 80.0
[spectrum]
lambdas = [1.0]
[sweep]
grid = [0.0]
""",
    )
    assert main(["run", "--config", cfg, "--out", "res"]) == 3
    err = capsys.readouterr().err
    assert "numeric failure" in err and "sweep point" in err


def test_gamma_convergence_ratios_approach_theory(tmp_path):
    cfg = write_toml(
        tmp_path / "exp.toml",
        """
kind = "gamma_convergence"
[schedule]
family = "ve"
beta = 5.0
sigma_max = 80.0
[diffusion]
alpha = 0.5
[spectrum]
lambdas = [1.0]
[sweep]
grid = [1e-2, 1e-3]
""",
    )
    assert main(["run", "--config", cfg, "--out", "res"]) == 0
    lines = (tmp_path / "res" / "gamma_convergence.csv").read_text().strip().splitlines()
    head = lines[0].split(",")
    rows = [dict(zip(head, ln.split(","))) for ln in lines[1:]]
    finest = min(rows, key=lambda r: float(r["gamma"]))
    ratio = float(finest["cov_defect_over_gamma"]) / float(finest["d_sigma1"])
    assert ratio == pytest.approx(1.0, abs=0.02)


def test_alpha_sweep_outputs(tmp_path):
    cfg = write_toml(
        tmp_path / "exp.toml",
        """
kind = "alpha_sweep"
[schedule]
family = "ve"
beta = 5.0
sigma_max = 80.0
[spectrum]
lambdas = [1.0]
[sweep]
grid = [0.0, 1.0]
k_grid = [100]
""",
    )
    assert main(["run", "--config", cfg, "--out", "res"]) == 0
    lines = (tmp_path / "res" / "alpha_sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "k,gamma,alpha,fd2,fd3,schedule"
    assert len(lines) == 3


# ---------------------------------------------------------------------------
# determinism


def test_gmm_run_reruns_byte_identical(tmp_path):
    cfg = write_toml(tmp_path / "exp.toml", GMM_SMALL)
    assert main(["run", "--config", cfg, "--out", "a"]) == 0
    assert main(["run", "--config", cfg, "--out", "b"]) == 0
    a = (tmp_path / "a" / "gmm_fd.csv").read_bytes()
    b = (tmp_path / "b" / "gmm_fd.csv").read_bytes()
    assert a == b


def test_gmm_run_thread_count_invariant(tmp_path):
    cfg = write_toml(tmp_path / "exp.toml", GMM_SMALL)
    assert main(["run", "--config", cfg, "--out", "t1", "--threads", "1"]) == 0
    assert main(["run", "--config", cfg, "--out", "t3", "--threads", "3"]) == 0
    a = (tmp_path / "t1" / "gmm_fd.csv").read_bytes()
    b = (tmp_path / "t3" / "gmm_fd.csv").read_bytes()
    assert a == b


def test_seed_override_changes_samples_and_manifest(tmp_path):
    cfg = write_toml(tmp_path / "exp.toml", GMM_SMALL)
    assert main(["run", "--config", cfg, "--out", "base"]) == 0
    assert main(["run", "--config", cfg, "--out", "over", "--seed-override", "99"]) == 0
    a = (tmp_path / "base" / "gmm_fd.csv").read_bytes()
    b = (tmp_path / "over" / "gmm_fd.csv").read_bytes()
    assert a != b
    manifest = json.loads((tmp_path / "over" / "manifest.json").read_text())
    assert manifest["seed"] == 99
    assert manifest["seed_override"] is True


def test_run_api_returns_written_files(tmp_path):
    ec = parse_config(
        {
            "kind": "sigma_star_compare",
            "schedule": {"family": "ve", "sigma_max": 20.0},
            "diffusion": {"alpha": 0.25, "K": 50},
            "spectrum": {"lambdas": [2.0, 0.5]},
            "sweep": {"c_grid": [1.0], "beta_grid": [3.0]},
        },
        tmp_path,
    )
    written = run(ec, tmp_path / "res")
    assert written == ["sigma_star_compare.csv", "manifest.json"]
    lines = (tmp_path / "res" / "sigma_star_compare.csv").read_text().strip().splitlines()
    assert lines[0] == "axis,x,fd2,fd3,alpha,gamma,schedule"
    assert len(lines) == 3
    axes = sorted(ln.split(",")[0] for ln in lines[1:])
    assert axes == ["beta", "c_sigma"]
