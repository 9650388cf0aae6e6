"""Runner tests: config schema, report serialization, dispatch, exit codes."""

import csv
import io
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from otspec.cli import (
    KINDS,
    CheckRecord,
    ConfigError,
    ExperimentReport,
    _guard,
    config_from_dict,
    config_hash,
    config_to_dict,
    default_config,
    emit_report,
    main,
    parse_config,
    render_report,
    report_from_dict,
    report_to_dict,
    run_experiment,
)


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data), encoding="utf-8")
    return str(p)


class TestConfigParsing:
    def test_minimal_variance_fills_defaults(self, tmp_path):
        cfg = parse_config(_write(tmp_path, {"kind": "variance"}))
        assert cfg.seed == 2024
        assert cfg.samples == 100_000
        assert cfg.quadrature_nodes == 2048
        assert cfg.map["kind"] == "1d"
        assert cfg.map["source"] == {"name": "uniform", "params": [0.0, 1.0]}
        assert cfg.format == "json"
        assert not cfg.dump_samples

    def test_defaults_round_trip_every_kind(self, tmp_path):
        for kind in KINDS:
            cfg = default_config(kind)
            path = _write(tmp_path, config_to_dict(cfg), f"{kind}.json")
            assert parse_config(path) == cfg
            assert config_hash(parse_config(path)) == config_hash(cfg)

    def test_gamma_shape_names_log_concavity(self, tmp_path):
        path = _write(
            tmp_path,
            {
                "kind": "variance",
                "map": {
                    "kind": "1d",
                    "source": {"name": "gamma", "params": [0.5, 1.0]},
                    "target": {"name": "gaussian", "params": [0.0, 1.0]},
                },
            },
        )
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert any("log-concavity" in m for m in err.value.messages)
        assert any(m.startswith("map.source") for m in err.value.messages)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError) as err:
            config_from_dict({"kind": "poincare", "bogus": 1, "extra": 2})
        joined = " ".join(err.value.messages)
        assert "bogus: unknown key" in joined
        assert "extra: unknown key" in joined

    def test_all_violations_reported_together(self):
        with pytest.raises(ConfigError) as err:
            config_from_dict(
                {"kind": "poincare", "seed": -1, "samples": 3, "format": "xml"}
            )
        assert len(err.value.messages) == 3

    def test_kind_is_required_and_checked(self):
        with pytest.raises(ConfigError, match="kind"):
            config_from_dict({})
        with pytest.raises(ConfigError, match="kind"):
            config_from_dict({"kind": "frobnicate"})

    def test_top_level_must_be_object(self):
        with pytest.raises(ConfigError, match="object"):
            config_from_dict([1, 2, 3])

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            parse_config("/does/not/exist.json")

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="valid JSON"):
            parse_config(str(p))

    def test_numeric_ranges(self):
        for key, bad in [
            ("seed", -1),
            ("samples", 10),
            ("quadrature_nodes", 8),
            ("pairs", 0),
            ("triples", 0),
            ("points", 0),
            ("grid", 4),
        ]:
            with pytest.raises(ConfigError, match=key):
                config_from_dict({"kind": "variance", key: bad})
        # booleans are not integers
        with pytest.raises(ConfigError, match="seed"):
            config_from_dict({"kind": "variance", "seed": True})

    def test_dims_range_depends_on_kind(self):
        cfg = config_from_dict({"kind": "geometry-selftest", "dims": [2, 8]})
        assert cfg.dims == (2, 8)
        with pytest.raises(ConfigError, match="dims"):
            config_from_dict({"kind": "geometry-selftest", "dims": [1]})
        with pytest.raises(ConfigError, match="dims"):
            config_from_dict({"kind": "gamma2-check", "dims": [5]})

    def test_c_grid_validation(self):
        cfg = config_from_dict({"kind": "concentration", "c_grid": [0.05, 0.1]})
        assert cfg.c_grid == (0.05, 0.1)
        for bad in [[], [0.0], [-0.1], [6.0], ["x"]]:
            with pytest.raises(ConfigError, match="c_grid"):
                config_from_dict({"kind": "concentration", "c_grid": bad})

    def test_bank_selectors(self):
        cfg = config_from_dict({"kind": "poincare", "bank": ["mean", "max"]})
        assert cfg.bank == ("mean", "max")
        with pytest.raises(ConfigError, match="bank"):
            config_from_dict({"kind": "poincare", "bank": ["nonsense"]})

    def test_experiment_labels_checked(self):
        cfg = config_from_dict(
            {"kind": "poincare", "experiments": ["gaussian:n=3", "product:n=3"]}
        )
        assert cfg.experiments == ("gaussian:n=3", "product:n=3")
        with pytest.raises(ConfigError, match="unknown label"):
            config_from_dict({"kind": "poincare", "experiments": ["nope"]})
        # sinkhorn2d uses its own part names
        cfg = config_from_dict({"kind": "sinkhorn2d", "experiments": ["gaussian"]})
        assert cfg.experiments == ("gaussian",)
        with pytest.raises(ConfigError, match="unknown label"):
            config_from_dict({"kind": "sinkhorn2d", "experiments": ["gaussian:n=3"]})

    def test_nonfinite_numbers_rejected(self, tmp_path):
        p = tmp_path / "inf.json"
        p.write_text(
            '{"kind": "variance", "map": {"kind": "1d",'
            ' "source": {"name": "gaussian", "params": [0.0, Infinity]},'
            ' "target": {"name": "gaussian", "params": [0.0, 1.0]}}}',
            encoding="utf-8",
        )
        with pytest.raises(ConfigError, match="params"):
            parse_config(str(p))

    def test_map_spec_structures(self):
        good = {
            "kind": "variance",
            "map": {
                "kind": "gaussian-linear",
                "source": {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
                "target": {"mean": [1.0, 1.0], "cov": [[0.5, 0.0], [0.0, 0.5]]},
            },
        }
        assert config_from_dict(good).map["kind"] == "gaussian-linear"
        bad = json.loads(json.dumps(good))
        bad["map"]["target"]["mean"] = [1.0]
        with pytest.raises(ConfigError, match="dimensions disagree"):
            config_from_dict(bad)
        with pytest.raises(ConfigError, match="map.kind"):
            config_from_dict({"kind": "variance", "map": {"kind": "teleport"}})
        with pytest.raises(ConfigError, match="factors"):
            config_from_dict({"kind": "variance", "map": {"kind": "product", "factors": []}})
        with pytest.raises(ConfigError, match="family"):
            config_from_dict(
                {
                    "kind": "variance",
                    "map": {
                        "kind": "radial",
                        "source": {"family": "torus", "dim": 3, "params": []},
                        "target": {"family": "gaussian", "dim": 3, "params": []},
                    },
                }
            )

    def test_nested_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="map.wormhole"):
            config_from_dict(
                {
                    "kind": "variance",
                    "map": {
                        "kind": "1d",
                        "wormhole": 1,
                        "source": {"name": "uniform", "params": [0.0, 1.0]},
                        "target": {"name": "exponential", "params": [1.0]},
                    },
                }
            )


def _tiny_report():
    cfg = default_config("variance")
    return ExperimentReport(
        config=config_to_dict(cfg),
        config_hash=config_hash(cfg),
        seed=cfg.seed,
        version="0.1.0",
        records=(
            CheckRecord("alpha", "variance-bound", 1.0, 4.0, True),
            CheckRecord("beta,with,commas", "poincare-bound", math.inf, 1.0, False, "err"),
        ),
    )


class TestReportSerialization:
    def test_empty_report_is_valid_json(self):
        r = replace(_tiny_report(), records=())
        parsed = json.loads(render_report(r, "json"))
        assert parsed["records"] == []
        assert parsed["config_hash"] == r.config_hash
        assert parsed["seed"] == r.seed

    def test_csv_row_count(self):
        r = _tiny_report()
        text = render_report(r, "csv").decode()
        rows = text.strip().split("\n")
        assert len(rows) == len(r.records) + 1
        assert rows[0] == "check,claim,value,tolerance,pass"

    def test_csv_survives_commas_in_names(self):
        r = _tiny_report()
        rows = list(csv.reader(io.StringIO(render_report(r, "csv").decode())))
        assert rows[2][0] == "beta,with,commas"
        assert rows[2][4] == "false"
        assert float(rows[1][2]) == 1.0

    def test_json_reparse_reproduces_report(self):
        r = _tiny_report()
        back = report_from_dict(json.loads(render_report(r, "json")))
        assert back == replace(r, wall_clock_seconds=0.0, samples_dump=())

    def test_wall_clock_not_serialized(self):
        r = replace(_tiny_report(), wall_clock_seconds=123.456)
        assert b"123.456" not in render_report(r, "json")
        assert "wall" not in json.dumps(report_to_dict(r))

    def test_nonfinite_values_round_trip(self):
        r = _tiny_report()
        d = report_to_dict(r)
        assert d["records"][1]["value"] == "inf"
        assert report_from_dict(d).records[1].value == math.inf

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError, match="format"):
            render_report(_tiny_report(), "xml")

    def test_emit_wraps_io_errors_with_path(self, tmp_path):
        with pytest.raises(OSError, match="cannot write report"):
            emit_report(_tiny_report(), "json", str(tmp_path))


class TestGuard:
    def test_error_becomes_failed_record(self):
        records = []

        def boom():
            raise ValueError("the grid is haunted")

        _guard(records, "spooky", "oracle-agreement", 0.05, boom)
        assert len(records) == 1
        rec = records[0]
        assert not rec.passed
        assert rec.value == math.inf
        assert "the grid is haunted" in rec.note

    def test_quiet_body_adds_nothing(self):
        records = []
        _guard(records, "calm", "oracle-agreement", 0.05, lambda: None)
        assert records == []


class TestRunExperiment:
    def test_variance_quadrature_oracle(self):
        report = run_experiment(default_config("variance"))
        by_name = {r.name: r for r in report.records}
        var = by_name["var-log-eig[0]"]
        assert var.passed
        assert var.value == pytest.approx(1.0, abs=1e-6)
        assert by_name["bound-margin[0]"].value == pytest.approx(3.0, abs=1e-6)
        assert by_name["quadrature-truncation"].passed
        assert report.config_hash == config_hash(default_config("variance"))
        assert report.seed == 2024
        assert report.wall_clock_seconds > 0.0

    def test_variance_monte_carlo_records(self):
        cfg = config_from_dict(
            {
                "kind": "variance",
                "samples": 5000,
                "map": {
                    "kind": "gaussian-linear",
                    "source": {"mean": [0.0, 0.0], "cov": [[1.0, 0.2], [0.2, 1.0]]},
                    "target": {"mean": [0.5, -0.5], "cov": [[0.5, 0.0], [0.0, 0.8]]},
                },
            }
        )
        report = run_experiment(cfg)
        names = [r.name for r in report.records]
        assert "var-log-eig[0]" in names and "var-log-eig[1]" in names
        assert all(r.passed for r in report.records)
        # a gaussian pair has a deterministic spectrum: variance zero
        by_name = {r.name: r for r in report.records}
        assert by_name["var-log-eig[0]"].value <= 1e-12

    def test_identical_seeds_byte_identical_reports(self):
        cfg = config_from_dict(
            {
                "kind": "variance",
                "samples": 2000,
                "seed": 5,
                "map": {
                    "kind": "radial",
                    "source": {"family": "uniform-ball", "dim": 3, "params": []},
                    "target": {"family": "gaussian", "dim": 3, "params": []},
                },
            }
        )
        a = render_report(run_experiment(cfg), "json")
        b = render_report(run_experiment(cfg), "json")
        assert a == b
        c = render_report(run_experiment(replace(cfg, seed=6)), "json")
        assert a != c

    def test_geometry_selftest_small(self):
        cfg = config_from_dict({"kind": "geometry-selftest", "pairs": 5})
        report = run_experiment(cfg)
        assert len(report.records) == 9
        assert all(r.passed for r in report.records)
        claims = {r.claim for r in report.records}
        assert "metric-axioms" in claims
        assert "geodesic-length" in claims
        assert "sorted-spectra-bound" in claims

    def test_gamma2_check_small(self):
        cfg = config_from_dict(
            {"kind": "gamma2-check", "triples": 3, "points": 10, "dims": [1, 2, 3]}
        )
        report = run_experiment(cfg)
        by_name = {r.name: r for r in report.records}
        assert set(by_name) == {
            "conservation-identity",
            "potential-eigenrelation",
            "certificate-split",
            "bochner-residual",
            "lower-bound-margin",
        }
        assert all(r.passed for r in report.records)
        assert by_name["lower-bound-margin"].value >= 0.0

    def test_poincare_selection(self):
        cfg = config_from_dict(
            {
                "kind": "poincare",
                "samples": 2000,
                "experiments": ["gaussian:n=3"],
                "bank": ["mean", "max"],
            }
        )
        report = run_experiment(cfg)
        assert len(report.records) == 2
        assert all(r.claim == "poincare-bound" for r in report.records)
        assert all(r.tolerance == 1.0 for r in report.records)
        assert all(r.passed for r in report.records)

    def test_concentration_sweep_records(self):
        cfg = config_from_dict(
            {
                "kind": "concentration",
                "samples": 2000,
                "experiments": ["product:n=3"],
                "bank": ["mean"],
                "c_grid": [0.05, 0.1],
            }
        )
        report = run_experiment(cfg)
        names = [r.name for r in report.records]
        assert names[0].startswith("exp-moment[product:n=3:mean]")
        assert "exp-moment-sweep[c=0.05]" in names
        assert "exp-moment-sweep[c=0.1]" in names
        assert all(r.tolerance == 2.0 for r in report.records)
        assert all(r.passed for r in report.records)

    def test_every_record_carries_tolerance_and_flag(self):
        cfg = config_from_dict({"kind": "poincare", "samples": 1000})
        report = run_experiment(cfg)
        for rec in report.records:
            assert isinstance(rec.passed, bool)
            assert math.isfinite(rec.tolerance)
            assert rec.claim


class TestMain:
    def test_exit_zero_and_report_file(self, tmp_path, capsys):
        code = main(["variance", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "PASS  var-log-eig[0]" in out
        assert "0 failed" in out
        files = list(tmp_path.glob("variance-*.json"))
        assert len(files) == 1
        parsed = json.loads(files[0].read_text())
        assert parsed["seed"] == 2024

    def test_exit_one_on_failed_check(self, tmp_path):
        cfg = {"kind": "sinkhorn2d", "grid": 16, "samples": 60,
               "experiments": ["gaussian"]}
        path = _write(tmp_path, cfg)
        code = main(["sinkhorn2d", "--config", path, "--out", str(tmp_path)])
        assert code == 1

    def test_exit_two_on_config_error(self, tmp_path, capsys):
        path = _write(tmp_path, {"kind": "variance", "bogus": 1})
        assert main(["variance", "--config", path]) == 2
        err = capsys.readouterr().err
        assert "config error" in err
        assert "bogus" in err

    def test_exit_two_on_kind_mismatch(self, tmp_path, capsys):
        path = _write(tmp_path, {"kind": "variance"})
        assert main(["poincare", "--config", path]) == 2
        assert "kind" in capsys.readouterr().err

    def test_exit_two_on_missing_config(self, capsys):
        assert main(["variance", "--config", "/nope.json"]) == 2
        assert "not found" in capsys.readouterr().err

    def test_exit_three_on_unwritable_out(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        assert main(["variance", "--out", str(blocker)]) == 3
        assert "runtime error" in capsys.readouterr().err

    def test_env_var_sets_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("OTSPEC_OUT", str(tmp_path / "nested"))
        assert main(["variance"]) == 0
        assert list((tmp_path / "nested").glob("variance-*.json"))

    def test_out_flag_beats_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("OTSPEC_OUT", str(tmp_path / "env"))
        explicit = tmp_path / "flag"
        assert main(["variance", "--out", str(explicit)]) == 0
        assert list(explicit.glob("variance-*.json"))
        assert not (tmp_path / "env").exists()

    def test_flag_overrides_recorded_in_config_echo(self, tmp_path):
        assert main(["variance", "--seed", "99", "--out", str(tmp_path)]) == 0
        files = list(tmp_path.glob("variance-*.json"))
        parsed = json.loads(files[0].read_text())
        assert parsed["seed"] == 99
        assert parsed["config"]["seed"] == 99

    def test_csv_format_flag(self, tmp_path):
        assert main(["variance", "--format", "csv", "--out", str(tmp_path)]) == 0
        files = list(tmp_path.glob("variance-*.csv"))
        assert len(files) == 1
        assert files[0].read_text().startswith("check,claim,value,tolerance,pass")

    def test_dump_samples_writes_long_csv(self, tmp_path):
        code = main(
            ["variance", "--samples", "200", "--dump-samples", "--out", str(tmp_path)]
        )
        assert code == 0
        dumps = list(tmp_path.glob("variance-*-samples.csv"))
        assert len(dumps) == 1
        rows = list(csv.reader(io.StringIO(dumps[0].read_text())))
        assert rows[0] == ["experiment", "row", "index", "value"]
        assert len(rows) == 201
        assert float(rows[1][3]) != 0.0

    def test_invalid_flag_override_is_config_error(self, capsys):
        assert main(["variance", "--samples", "3"]) == 2
        assert "samples" in capsys.readouterr().err
