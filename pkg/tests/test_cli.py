"""Command-line contract: validation, dispatch, exit codes, artifacts."""

import json

import pytest

from relkin.cli import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_VERDICT_FAIL,
    ConfigurationError,
    bundled_config_names,
    list_experiments,
    load_config,
    main,
    run,
    validate_config,
)
from relkin.experiments import EXPERIMENTS
from relkin.reporting import sha256_of

EXPECTED_NAMES = [
    "field-stats",
    "ensemble",
    "kg-conservation",
    "madelung-check",
    "beta-fit",
    "wigner-check",
    "mass-shell-nogo",
    "lump-check",
    "packet-compare",
]


def micro_beta_config(seed=77):
    return {
        "experiment": "beta-fit",
        "seed": seed,
        "params": {
            "mass_in_inverse_length": 1.0,
            "n_points": 128,
            "box_length_in_inverse_mass": 50.26548245743669,
            "k_center_in_mass": 0.8,
            "bandwidth_in_mass": 0.35,
            "t_center_in_inverse_mass": 0.5,
            "dt_in_inverse_mass": 0.001,
            "n_levels": 5,
            "beta_sq_expected": 0.5,
            "tolerance": 0.01,
        },
    }


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_list_prints_exactly_nine_stable_rows(capsys):
    assert main(["list"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 9
    assert [line.split()[0] for line in lines] == EXPECTED_NAMES
    # the same order the registry exposes
    assert list(EXPERIMENTS) == EXPECTED_NAMES
    assert list_experiments().splitlines() == lines


def test_every_bundled_config_validates_and_names_a_runner():
    names = bundled_config_names()
    assert len(names) == 9
    seen = set()
    for name in names:
        cfg = load_config(name)
        validate_config(cfg)
        assert cfg["experiment"] in EXPERIMENTS
        seen.add(cfg["experiment"])
    assert seen == set(EXPECTED_NAMES)


def test_bundled_beta_fit_run_passes(tmp_path, capsys):
    code = main(["run", "madelung_1d.json", "--out", str(tmp_path / "run")])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "[acceptance-6] PASS beta-sq-fit" in out
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["experiment"] == "beta-fit"
    assert manifest["seed"] == 5501
    assert manifest["verdicts"]["passed"] == manifest["verdicts"]["total"] == 1


def test_negative_mass_rejected_naming_the_key(tmp_path, capsys):
    cfg = micro_beta_config()
    cfg["params"]["mass_in_inverse_length"] = -1.0
    path = write_config(tmp_path, cfg)
    code = main(["run", str(path), "--out", str(tmp_path / "run")])
    err = capsys.readouterr().err
    assert code == EXIT_CONFIG_ERROR
    assert "$.params.mass_in_inverse_length" in err
    assert not (tmp_path / "run").exists()


def test_unknown_key_and_missing_key_rejected(tmp_path):
    cfg = micro_beta_config()
    cfg["params"]["n_pionts"] = 4  # typo must not pass silently
    with pytest.raises(ConfigurationError, match="n_pionts"):
        validate_config(cfg)
    cfg2 = micro_beta_config()
    del cfg2["params"]["tolerance"]
    with pytest.raises(ConfigurationError, match="tolerance"):
        validate_config(cfg2)
    cfg3 = micro_beta_config()
    cfg3["experiment"] = "no-such-experiment"
    with pytest.raises(ConfigurationError, match="experiment"):
        validate_config(cfg3)


def test_unreadable_config_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == EXIT_CONFIG_ERROR
    assert "not valid JSON" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG_ERROR
    assert "no bundled config" in capsys.readouterr().err


def test_failing_verdict_exits_one(tmp_path, capsys):
    cfg = micro_beta_config()
    cfg["params"]["tolerance"] = 1e-12  # unreachably tight on purpose
    path = write_config(tmp_path, cfg)
    code = main(["run", str(path), "--out", str(tmp_path / "run")])
    captured = capsys.readouterr()
    assert code == EXIT_VERDICT_FAIL
    assert "FAIL beta-sq-fit" in captured.out
    assert "beta-sq-fit" in captured.err
    # the run directory is still sealed: manifest plus verdicts on disk
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["verdicts"]["passed"] == 0


def test_seed_override_enters_manifest(tmp_path):
    path = write_config(tmp_path, micro_beta_config(seed=1))
    report = run(path, seed=424242, out=tmp_path / "run")
    assert report.seed == 424242
    manifest = json.loads(report.manifest_path.read_text())
    assert manifest["seed"] == 424242
    assert manifest["config"]["seed"] == 424242


def test_default_out_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RELKIN_OUT_ROOT", str(tmp_path / "root"))
    monkeypatch.chdir(tmp_path)
    report = run(write_config(tmp_path, micro_beta_config(seed=9)))
    assert report.run_dir == tmp_path / "root" / "beta-fit-seed9"
    assert report.manifest_path.is_file()


def test_rerun_is_byte_identical(tmp_path):
    path = write_config(tmp_path, micro_beta_config())
    rep1 = run(path, out=tmp_path / "a")
    rep2 = run(path, out=tmp_path / "b")
    names = sorted(p.name for p in rep1.run_dir.iterdir())
    assert names == sorted(p.name for p in rep2.run_dir.iterdir())
    for name in names:
        assert sha256_of(rep1.run_dir / name) == sha256_of(rep2.run_dir / name), name


def test_manifest_checksums_vouch_for_artifacts(tmp_path):
    report = run(write_config(tmp_path, micro_beta_config()),
                 out=tmp_path / "run")
    manifest = json.loads(report.manifest_path.read_text())
    listed = {a["name"]: a for a in manifest["artifacts"]}
    on_disk = {p.name for p in report.run_dir.iterdir()} - {"manifest.json"}
    assert set(listed) == on_disk
    for name, entry in listed.items():
        path = report.run_dir / name
        assert sha256_of(path) == entry["sha256"]
        assert path.stat().st_size == entry["bytes"]
    assert "verdicts.ndjson" in listed


def test_verdict_records_are_schema_tagged(tmp_path):
    report = run(write_config(tmp_path, micro_beta_config()),
                 out=tmp_path / "run")
    lines = (report.run_dir / "verdicts.ndjson").read_text().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert rec["schema"] == "relkin/verdict/1"
    assert rec["criterion"] == "acceptance-6"
    assert rec["passed"] is True


def test_worker_count_never_changes_ensemble_bytes(tmp_path):
    cfg = {
        "experiment": "ensemble",
        "seed": 55,
        "params": {
            "mass_in_inverse_length": 1.0,
            "charge": 0.1,
            "k_spacing_in_mass": 0.5,
            "cutoff_in_mass": 1.5,
            "drift": {
                "n_trajectories": 3,
                "t_span_in_inverse_mass": 0.5,
                "dt_in_inverse_mass": 0.01,
                "p_sigma_in_mass": 0.4,
                "drift_bound": 1e-08,
            },
            "scaling": {
                "charge": 1.0,
                "p0_in_mass": [0.5, -0.3, 0.2],
                "dts_in_inverse_mass": [0.16, 0.08],
                "t_span_in_inverse_mass": 1.6,
                "min_order": 3.5,
            },
            "cloud": {
                "n_particles": 400,
                "t_final_in_inverse_mass": 5.0,
                "dt_in_inverse_mass": 0.25,
                "x_sigma_in_inverse_mass": 1.0,
                "p_mean_in_mass": 1.0,
                "p_sigma_in_mass": 0.5,
                "x_edges_in_inverse_mass": [-2.0, 0.5, 3.0, 5.5, 8.0],
                "p_edges_in_mass": [-1.0, 0.0, 1.0, 2.0, 3.0],
                "sigma_bound": 4.0,
            },
            "green": {
                "h_in_inverse_mass": 0.12,
                "halfwidth_in_inverse_mass": 0.36,
                "lam_max_in_inverse_mass": 10.0,
                "dlam_in_inverse_mass": 0.04,
                "source_width_in_inverse_mass": 1.0,
                "p_in_mass": 1.0,
                "l2_bound": 0.02,
            },
        },
    }
    path = write_config(tmp_path, cfg)
    rep1 = run(path, out=tmp_path / "w1", workers=1)
    rep2 = run(path, out=tmp_path / "w3", workers=3)
    for p1 in sorted(rep1.run_dir.iterdir()):
        assert sha256_of(p1) == sha256_of(rep2.run_dir / p1.name), p1.name
