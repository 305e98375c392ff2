"""Config validation, the experiment driver, and the command-line interface.

The driver's determinism contract gets the closest scrutiny: reruns and
different worker counts must leave every CSV byte-for-byte unchanged,
with the manifest's wall-clock field as the only thing allowed to vary,
and a failed task must leave no output files at all.
"""

import csv
import json
from pathlib import Path

import pytest

import funclt.cli as cli
import funclt.experiment as experiment
from funclt.experiment import (
    ESTIMATORS,
    FILE_FIELDS,
    VERSION,
    WORKERS_ENV,
    ConfigError,
    ExperimentError,
    config_hash,
    config_to_dict,
    load_config,
    list_scenarios,
    make_mechanism,
    mechanism_label,
    parse_config_dict,
    read_config_file,
    run,
)
from funclt.rng import TASK, derive_seed

DROP = object()


def config_with(**overrides):
    """A small valid config dict, with overrides applied (DROP removes)."""
    data = {
        "scenarios": ["gaussian-j2"],
        "estimators": ["conditions"],
        "n_list": [4, 8],
        "reps": 120,
        "seed": 7,
        "grid_size": 16,
    }
    for key, value in overrides.items():
        if value is DROP:
            data.pop(key, None)
        else:
            data[key] = value
    return data


def read_rows(path):
    with open(path, newline="") as fp:
        return list(csv.DictReader(fp))


TOML_CONFIG = """\
schema = 1
scenarios = ["lf-pass"]
estimators = ["conditions"]
n_list = [4, 8]
reps = 100
seed = 11
grid_size = 32
"""


# --------------------------------------------------------------------------
# config parsing


def test_parse_minimal_fills_documented_defaults():
    cfg = parse_config_dict({"scenarios": "gaussian-j2", "n_list": [4], "reps": 100})
    assert cfg.scenarios == ("gaussian-j2",)  # bare string becomes a 1-tuple
    assert cfg.estimators == ("conditions",)
    assert cfg.n_list == (4,)
    assert cfg.reps == 100
    assert cfg.seed == 0
    assert cfg.out_dir == "results"
    assert cfg.workers == 1
    assert cfg.grid_size == 256
    assert cfg.basis_size is None
    assert cfg.epsilons == (0.5, 0.1)
    assert cfg.deltas == (1.0,)
    assert cfg.noise_mode == "conditional"
    assert cfg.mechanism_kind == "mcar-bernoulli"


@pytest.mark.parametrize(
    "overrides, match",
    [
        pytest.param({"bogus": 1}, "unknown config field", id="unknown-field"),
        pytest.param({"schema": 2}, "schema", id="wrong-schema"),
        pytest.param({"scenarios": DROP}, "'scenarios': required", id="no-scenarios"),
        pytest.param({"scenarios": []}, "nonempty", id="empty-scenarios"),
        pytest.param({"scenarios": ["no-such"]}, "scenarios", id="unknown-scenario"),
        pytest.param({"estimators": []}, "nonempty", id="empty-estimators"),
        pytest.param({"estimators": ["bogus"]}, "unknown estimator", id="bad-estimator"),
        pytest.param({"n_list": DROP}, "n_list", id="no-n-list"),
        pytest.param({"n_list": []}, "nonempty", id="empty-n-list"),
        pytest.param({"n_list": [4, 4]}, "ascending", id="flat-n-list"),
        pytest.param({"n_list": [8, 4]}, "ascending", id="descending-n-list"),
        pytest.param({"n_list": [0, 4]}, "ascending positive", id="zero-n"),
        pytest.param({"n_list": [4, 8.0]}, "expected an integer", id="float-n"),
        pytest.param({"reps": DROP}, "reps", id="no-reps"),
        pytest.param({"reps": 99}, ">= 100", id="small-reps"),
        pytest.param({"reps": True}, "expected an integer", id="bool-reps"),
        pytest.param({"seed": -1}, "64-bit", id="negative-seed"),
        pytest.param({"seed": 2**64}, "64-bit", id="huge-seed"),
        pytest.param({"workers": 0}, ">= 1", id="zero-workers"),
        pytest.param({"grid_size": 3}, ">= 4", id="tiny-grid"),
        pytest.param({"basis_size": 0}, "1..grid_size", id="zero-basis"),
        pytest.param({"basis_size": 17}, "1..grid_size", id="oversized-basis"),
        pytest.param({"epsilons": [0.5, 0.0]}, "> 0", id="zero-epsilon"),
        pytest.param({"deltas": [-1.0]}, "> 0", id="negative-delta"),
        pytest.param({"epsilons": 0.5}, "expected a list", id="scalar-epsilons"),
        pytest.param({"noise_mode": "bogus"}, "noise_mode", id="bad-noise-mode"),
        pytest.param({"mechanism": 3}, "table", id="mechanism-not-table"),
        pytest.param({"mechanism": {"bogus": 1}}, "unknown key", id="mechanism-key"),
        pytest.param({"mechanism": {"kind": "bogus"}}, "mechanism", id="mechanism-kind"),
        pytest.param(
            {"mechanism": {"p": 1.5}}, "p must be in", id="mechanism-bad-p"
        ),
        pytest.param(
            {"scenarios": ["lf-fail"], "estimators": ["eq1"]},
            "does not support",
            id="eq1-needs-gaussian-laws",
        ),
        pytest.param(
            {"scenarios": ["heavy-tail"], "estimators": ["partial"]},
            "does not support",
            id="partial-needs-gaussian-laws",
        ),
    ],
)
def test_parse_rejects_invalid_configs(overrides, match):
    with pytest.raises(ConfigError, match=match):
        parse_config_dict(config_with(**overrides))


def test_config_error_is_a_value_error():
    assert issubclass(ConfigError, ValueError)
    assert issubclass(ExperimentError, RuntimeError)


def test_parse_canonicalizes_mechanism_defaults():
    cfg = parse_config_dict(config_with())
    assert cfg.mechanism_p == 0.5  # the mcar-bernoulli default, materialized
    assert cfg.mechanism_length is None
    assert cfg.mechanism_probe_count is None

    cfg = parse_config_dict(config_with(mechanism={"kind": "mar-threshold"}))
    assert cfg.mechanism_probe_count == 8
    assert cfg.mechanism_threshold == 0.0
    assert cfg.mechanism_miss_frac == 0.3
    assert cfg.mechanism_alt_frac == 0.1
    assert cfg.mechanism_p is None
    assert cfg.mechanism_length is None


def test_parse_drops_parameters_foreign_to_the_mechanism_kind():
    cfg = parse_config_dict(
        config_with(mechanism={"kind": "mcar-interval", "p": 0.9})
    )
    assert cfg.mechanism_length == 0.3
    assert cfg.mechanism_p is None


@pytest.mark.parametrize(
    "overrides",
    [
        {},
        {"mechanism": {"kind": "mcar-interval", "length": 0.25}},
        {
            "mechanism": {"kind": "mar-threshold", "probe_count": 4, "threshold": 0.5},
            "noise_mode": "second-moment",
        },
        {"epsilons": [0.25], "deltas": [0.5, 1.0], "basis_size": 2, "workers": 3},
    ],
)
def test_config_dict_round_trip_is_exact(overrides):
    cfg = parse_config_dict(config_with(**overrides))
    assert parse_config_dict(config_to_dict(cfg)) == cfg


def test_config_hash_ignores_output_location_and_workers():
    cfg = parse_config_dict(config_with())
    moved = parse_config_dict(config_with(out_dir="elsewhere", workers=5))
    assert config_hash(moved) == config_hash(cfg)
    h = config_hash(cfg)
    assert len(h) == 64 and set(h) <= set("0123456789abcdef")


@pytest.mark.parametrize(
    "overrides",
    [
        {"seed": 8},
        {"reps": 130},
        {"n_list": [4, 16]},
        {"scenarios": ["lyapunov-pass"]},
        {"mechanism": {"p": 0.25}},
    ],
)
def test_config_hash_tracks_result_relevant_fields(overrides):
    assert config_hash(parse_config_dict(config_with(**overrides))) != config_hash(
        parse_config_dict(config_with())
    )


# --------------------------------------------------------------------------
# config files


def test_read_config_file_toml_and_json(tmp_path):
    toml_path = tmp_path / "c.toml"
    toml_path.write_text(TOML_CONFIG)
    data = read_config_file(toml_path)
    assert data["scenarios"] == ["lf-pass"]
    assert data["n_list"] == [4, 8]

    json_path = tmp_path / "c.json"
    json_path.write_text(json.dumps(config_with()))
    assert parse_config_dict(read_config_file(json_path)) == parse_config_dict(
        config_with()
    )


def test_read_config_file_guesses_format_without_suffix(tmp_path):
    toml_like = tmp_path / "toml.cfg"
    toml_like.write_text(TOML_CONFIG)
    assert read_config_file(toml_like)["reps"] == 100

    json_like = tmp_path / "json.cfg"
    json_like.write_text(json.dumps(config_with()))
    assert read_config_file(json_like)["reps"] == 120


def test_read_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        read_config_file(tmp_path / "missing.toml")

    bad_json = tmp_path / "c.json"
    bad_json.write_text(TOML_CONFIG)  # TOML is not JSON
    with pytest.raises(ConfigError, match="cannot parse config"):
        read_config_file(bad_json)

    garbage = tmp_path / "c.cfg"
    garbage.write_text("]]] neither format [[[")
    with pytest.raises(ConfigError, match="cannot parse config"):
        read_config_file(garbage)


def test_load_config_applies_overrides_and_skips_none(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config_with()))
    cfg = load_config(path, {"seed": 11, "reps": None, "out_dir": "o"})
    assert cfg.seed == 11
    assert cfg.reps == 120  # None override leaves the file's value alone
    assert cfg.out_dir == "o"


# --------------------------------------------------------------------------
# mechanisms


def test_mechanism_labels_are_canonical():
    assert mechanism_label(make_mechanism("mcar-bernoulli")) == "mcar-bernoulli(p=0.5)"
    assert (
        mechanism_label(make_mechanism("mcar-interval", length=0.25))
        == "mcar-interval(length=0.25)"
    )
    assert mechanism_label(make_mechanism("mar-threshold")) == (
        "mar-threshold(alt_frac=0.1, miss_frac=0.3, probe_count=8, threshold=0.0)"
    )


def test_make_mechanism_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown mechanism kind"):
        make_mechanism("bogus")


# --------------------------------------------------------------------------
# run driver


def test_run_writes_condition_tables_and_manifest(tmp_path):
    out = tmp_path / "out"
    cfg = parse_config_dict(
        {
            "scenarios": ["lf-pass"],
            "estimators": ["conditions"],
            "n_list": [4, 16],
            "reps": 100,
            "seed": 11,
            "grid_size": 32,
            "out_dir": str(out),
        }
    )
    manifest = run(cfg)

    assert manifest.outputs == ("lindeberg.csv", "lyapunov.csv", "covariance.csv")
    assert manifest.version == VERSION
    assert manifest.config_hash == config_hash(cfg)
    assert manifest.audit_failures == 0
    assert len(manifest.tasks) == 1
    task = manifest.tasks[0]
    assert task.scenario == "lf-pass"
    assert task.estimator == "conditions"
    assert task.seed == derive_seed(11, TASK, 0, 0)

    written = sorted(p.name for p in out.iterdir())
    assert written == ["covariance.csv", "lindeberg.csv", "lyapunov.csv", "manifest.json"]
    for name in manifest.outputs:
        header = (out / name).read_text().splitlines()[0]
        assert header == ",".join(FILE_FIELDS[name])

    lf = read_rows(out / "lindeberg.csv")
    assert len(lf) == 4  # 2 row sizes x 2 default epsilons
    assert {r["n"] for r in lf} == {"4", "16"}
    assert {r["epsilon"] for r in lf} == {"0.5", "0.1"}
    assert all(r["reps"] == "100" for r in lf)
    assert len(read_rows(out / "lyapunov.csv")) == 2  # one default delta
    assert len(read_rows(out / "covariance.csv")) == 2

    assert json.loads((out / "manifest.json").read_text()) == manifest.to_dict()


def test_rerun_and_worker_count_leave_bytes_unchanged(tmp_path):
    def cfg_for(sub, workers):
        return parse_config_dict(
            config_with(
                estimators=["conditions", "eq1"],
                out_dir=str(tmp_path / sub),
                workers=workers,
            )
        )

    first = run(cfg_for("a", 1))
    rerun = run(cfg_for("b", 1))
    pooled = run(cfg_for("c", 2))  # two tasks -> actually uses the process pool

    assert first.outputs == ("lindeberg.csv", "lyapunov.csv", "covariance.csv", "eq1.csv")
    assert first.audit_failures == rerun.audit_failures == pooled.audit_failures == 0
    for name in first.outputs:
        blob = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == blob
        assert (tmp_path / "c" / name).read_bytes() == blob

    manifests = [
        json.loads((tmp_path / sub / "manifest.json").read_text())
        for sub in ("a", "b", "c")
    ]
    for other in manifests[1:]:
        assert other.keys() == manifests[0].keys()
        same = {k: v for k, v in other.items() if k != "wall_clock_seconds"}
        assert same == {
            k: v for k, v in manifests[0].items() if k != "wall_clock_seconds"
        }


def test_failed_task_raises_and_writes_nothing(tmp_path, monkeypatch):
    def boom(cfg, scenario, spec, task_seed):
        raise RuntimeError("midway crash")

    monkeypatch.setitem(experiment._TASK_FUNCS, "conditions", boom)
    out = tmp_path / "never"
    cfg = parse_config_dict(config_with(out_dir=str(out)))
    with pytest.raises(ExperimentError, match="task execution failed"):
        run(cfg)
    assert not out.exists()


def test_config_errors_from_tasks_pass_through_unwrapped(tmp_path, monkeypatch):
    def complain(cfg, scenario, spec, task_seed):
        raise ConfigError("bad field")

    monkeypatch.setitem(experiment._TASK_FUNCS, "conditions", complain)
    cfg = parse_config_dict(config_with(out_dir=str(tmp_path / "never")))
    with pytest.raises(ConfigError, match="bad field"):
        run(cfg)


def test_second_moment_noise_fails_the_recovery_audit(tmp_path):
    out = tmp_path / "out"
    cfg = parse_config_dict(
        {
            "scenarios": ["gaussian-j2"],
            "estimators": ["eq1"],
            "n_list": [16],
            "reps": 2000,
            "seed": 3,
            "grid_size": 16,
            "noise_mode": "second-moment",
            "mechanism": {"kind": "mcar-interval", "length": 0.3},
            "out_dir": str(out),
        }
    )
    manifest = run(cfg)
    assert manifest.audit_failures == 1

    (row,) = read_rows(out / "eq1.csv")
    assert row["passed"] == "0"
    assert row["noise_mode"] == "second-moment"
    assert row["mechanism"] == "mcar-interval(length=0.3)"
    # The broken noise adds the conditional mean's square on top of the
    # conditional covariance, inflating the recovered second moment.
    assert float(row["moment_partial"]) > float(row["moment_complete"])
    assert float(row["moment_gap"]) > 4 * float(row["moment_stderr"])


def test_normality_and_partial_tables(tmp_path):
    out = tmp_path / "out"
    cfg = parse_config_dict(
        {
            "scenarios": ["lyapunov-pass"],
            "estimators": ["normality", "partial"],
            "n_list": [4, 8],
            "reps": 150,
            "seed": 5,
            "grid_size": 16,
            "out_dir": str(out),
        }
    )
    manifest = run(cfg)
    assert manifest.outputs == ("normality.csv", "partial_cf.csv", "partial_lindeberg.csv")
    assert manifest.audit_failures == 0

    norm = read_rows(out / "normality.csv")
    # 2 row sizes x 5 test functions x 12 metrics
    assert len(norm) == 120
    assert {r["metric"] for r in norm} == {
        "target_variance", "cf_re", "cf_im", "cf_stderr", "cf_target", "cf_gap",
        "cf_ok", "ks_stat", "ks_quantile", "ks_ok", "skew_gap", "kurtosis_gap",
    }
    assert {r["test_function"] for r in norm} == {"const", "sin1", "cos1", "sin2", "cos2"}

    pcf = read_rows(out / "partial_cf.csv")
    # complete + partial sides (2 x 120) plus 2 x 5 x 3 cross-check rows
    assert len(pcf) == 270
    assert {r["side"] for r in pcf} == {"complete", "partial", "cross"}
    cross = [r for r in pcf if r["side"] == "cross"]
    assert {r["metric"] for r in cross} == {"gap", "stderr", "ok"}
    assert all(r["mechanism"] == "mcar-bernoulli(p=0.5)" for r in pcf)

    plf = read_rows(out / "partial_lindeberg.csv")
    assert [r["n"] for r in plf] == ["4", "8"]
    assert all(r["ok"] == "1" for r in plf)


def test_list_scenarios_covers_every_preset():
    rows = list_scenarios()
    ids = [r["scenario"] for r in rows]
    assert ids == ["lf-pass", "lf-fail", "lyapunov-pass", "heavy-tail", "gaussian-j2"]
    by_id = {r["scenario"]: r for r in rows}
    assert by_id["gaussian-j2"]["supports_imputation"] is True
    assert by_id["lf-fail"]["supports_imputation"] is False
    assert all(r["summary"] for r in rows)
    assert all(r["flags"] for r in rows)


def test_estimator_registry_is_complete():
    assert set(experiment._TASK_FUNCS) == set(ESTIMATORS)
    assert set(FILE_FIELDS) == {
        "lindeberg.csv", "lyapunov.csv", "covariance.csv", "normality.csv",
        "eq1.csv", "partial_cf.csv", "partial_lindeberg.csv",
    }


# --------------------------------------------------------------------------
# command-line interface


def test_cli_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for sid in ("lf-pass", "lf-fail", "lyapunov-pass", "heavy-tail", "gaussian-j2"):
        assert sid in out
    assert "recovery-audits=yes" in out
    assert "recovery-audits=no" in out


def test_cli_run_writes_tables(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    config_path = tmp_path / "c.toml"
    config_path.write_text(TOML_CONFIG)
    out = tmp_path / "out"
    code = cli.main(["run", "--config", str(config_path), "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "wrote 3 table(s)" in stdout
    assert (out / "lindeberg.csv").exists()
    assert (out / "manifest.json").exists()


def test_cli_run_flag_overrides_reach_the_config(tmp_path, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    config_path = tmp_path / "c.toml"
    config_path.write_text(TOML_CONFIG)
    out = tmp_path / "out"
    code = cli.main(
        ["run", "--config", str(config_path), "--out", str(out), "--seed", "5"]
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tasks"][0]["seed"] == derive_seed(5, TASK, 0, 0)


def test_cli_run_rejects_bad_configs(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    config_path = tmp_path / "c.json"
    config_path.write_text(json.dumps(config_with(reps=10)))
    assert cli.main(["run", "--config", str(config_path)]) == 1
    assert "error:" in capsys.readouterr().err

    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_cli_run_reports_task_failures(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)

    def boom(cfg, scenario, spec, task_seed):
        raise RuntimeError("midway crash")

    monkeypatch.setitem(experiment._TASK_FUNCS, "conditions", boom)
    config_path = tmp_path / "c.toml"
    config_path.write_text(TOML_CONFIG)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(config_path), "--out", str(out)]) == 2
    assert "task execution failed" in capsys.readouterr().err
    assert not out.exists()


def test_cli_run_reads_worker_count_from_environment(tmp_path, capsys, monkeypatch):
    config_path = tmp_path / "c.json"
    config_path.write_text(
        json.dumps(config_with(estimators=["conditions", "eq1"]))
    )
    out = tmp_path / "out"

    monkeypatch.setenv(WORKERS_ENV, "not-a-number")
    assert cli.main(["run", "--config", str(config_path), "--out", str(out)]) == 1
    assert "must be an integer" in capsys.readouterr().err

    # An explicit flag wins over the (broken) environment value.
    code = cli.main(
        ["run", "--config", str(config_path), "--out", str(out), "--workers", "1"]
    )
    assert code == 0
    capsys.readouterr()

    monkeypatch.setenv(WORKERS_ENV, "2")
    out2 = tmp_path / "out2"
    assert cli.main(["run", "--config", str(config_path), "--out", str(out2)]) == 0
    for name in ("lindeberg.csv", "lyapunov.csv", "covariance.csv", "eq1.csv"):
        assert (out2 / name).read_bytes() == (out / name).read_bytes()


def test_cli_audit_passes_with_conditional_noise(capsys):
    argv = [
        "audit-eq1", "--scenario", "gaussian-j2", "--n", "16", "--reps", "1500",
        "--seed", "3", "--grid-size", "16", "--mechanism", "mcar-interval",
        "--interval-length", "0.3",
    ]
    assert cli.main(argv) == 0
    out = capsys.readouterr().out
    assert "covariance distance" in out
    assert out.strip().splitlines()[-1] == "PASS"

    assert cli.main(argv + ["--noise-mode", "second-moment"]) == 3
    assert capsys.readouterr().out.strip().splitlines()[-1] == "FAIL"


def test_cli_audit_rejects_bad_probability(capsys):
    assert cli.main(["audit-eq1", "--observe-prob", "1.5"]) == 1
    assert "p must be in" in capsys.readouterr().err


def test_cli_rejects_unknown_scenario(capsys):
    assert cli.main(["audit-eq1", "--scenario", "no-such"]) == 1
    assert "error:" in capsys.readouterr().err
    assert cli.main(["verify-clt", "--scenario", "no-such"]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_verify_clt_passes_on_gaussian_rows(capsys):
    argv = [
        "verify-clt", "--scenario", "lyapunov-pass", "--n-list", "4",
        "--reps", "600", "--grid-size", "32",
    ]
    assert cli.main(argv) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1] == "PASS"
    assert sum("cf_gap=" in line for line in out.splitlines()) == 5


def test_cli_verify_clt_flags_the_failing_preset(capsys):
    argv = [
        "verify-clt", "--scenario", "lf-fail", "--n-list", "1024",
        "--reps", "600", "--grid-size", "32",
    ]
    assert cli.main(argv) == 3
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1] == "FAIL"
    assert any("const" in line and "FAIL" in line for line in out.splitlines())
