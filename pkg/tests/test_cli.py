import json
import math

import numpy as np
import pytest

from sigcast.cli import main
from sigcast.signature import sig_dim


@pytest.fixture
def ramp_csv(tmp_path):
    path = tmp_path / "ramp.csv"
    rows = ["date,y"]
    start = np.datetime64("2021-01-04")
    for i in range(9):
        rows.append(f"{start + 7 * i},{0.5 * i}")
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def _write_panel(tmp_path, n=60, seed=9, name="panel.csv", factors=2, constant=None):
    rng = np.random.default_rng(seed)
    start = np.datetime64("2020-01-05")
    lines = ["date,y" + "".join(f",f{j}" for j in range(1, factors + 1))]
    y = np.full(n, constant) if constant is not None else 10 + np.cumsum(rng.normal(size=n))
    X = rng.normal(size=(n, factors))
    for i in range(n):
        cells = [str(start + 7 * i), f"{y[i]:.12g}"] + [f"{v:.12g}" for v in X[i]]
        lines.append(",".join(cells))
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def _write_config(tmp_path, input_path, name="config.json", **overrides):
    cfg = {
        "schema": 1,
        "input": input_path,
        "date_column": "date",
        "target_column": "y",
        "horizons": 2,
        "window": 4,
        "depth": 2,
        "gamma": 0.5,
        "lambda_grid": [1e-4],
        "rho_min": 0.0,
        "rho_max": 0.99,
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSigCommand:
    def test_linear_ramp_values(self, capsys, ramp_csv):
        code, out, err = _run(capsys, "sig", ramp_csv, "--depth", "3")
        assert code == 0
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        assert rows[0] == "level,multi_index,value"
        values = [float(r.split(",")[2]) for r in rows[1:]]
        delta = 4.0  # 8 steps of 0.5
        expected = [1.0, delta, delta**2 / 2, delta**3 / 6]
        assert values == pytest.approx(expected, abs=1e-10)

    def test_depth_zero_single_row(self, capsys, ramp_csv):
        code, out, _ = _run(capsys, "sig", ramp_csv, "--depth", "0")
        assert code == 0
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        assert len(rows) == 2  # header + the scalar level
        assert rows[1] == "0,,1"

    def test_row_count_matches_dimension(self, capsys, ramp_csv):
        code, out, _ = _run(capsys, "sig", ramp_csv, "--depth", "3", "--augment")
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        assert len(rows) - 1 == sig_dim(2, 3)

    def test_window_flag(self, capsys, ramp_csv):
        code, out, _ = _run(capsys, "sig", ramp_csv, "--depth", "1", "--window", "2")
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        assert float(rows[2].split(",")[2]) == pytest.approx(1.0)  # 2 steps of 0.5

    def test_window_too_large_is_data_error(self, capsys, ramp_csv):
        code, _, err = _run(capsys, "sig", ramp_csv, "--window", "99")
        assert code == 2
        assert err


class TestKernelCommand:
    def test_known_values(self, capsys, tmp_path):
        a = tmp_path / "a.csv"
        a.write_text("date,y\n2021-01-04,0.0\n2021-01-11,1.0\n")
        b = tmp_path / "b.csv"
        b.write_text("date,y\n2021-01-04,0.0\n2021-01-11,2.0\n")
        code, out, _ = _run(
            capsys, "kernel", str(a), str(b), "--depth", "2", "--no-augment"
        )
        assert code == 0
        lines = dict(
            line.split(",") for line in out.splitlines() if line and not line.startswith("#")
        )
        assert float(lines["kernel"]) == pytest.approx(4.0)
        assert float(lines["distance"]) == pytest.approx(3.25)


class TestWeightsCommand:
    def test_weights_sum_to_one(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel)
        code, out, _ = _run(capsys, "weights", "--config", config, "--horizon", "2")
        assert code == 0
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        weights = [float(r.split(",")[1]) for r in rows[1:]]
        assert math.fsum(weights) == pytest.approx(1.0, abs=1e-9)
        assert len(weights) == 60 - 2


class TestFitCommand:
    def test_emits_support_rows(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel)
        code, out, _ = _run(capsys, "fit", "--config", config)
        assert code == 0
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        assert rows[0] == "horizon,lambda,feature,coefficient"
        assert len(rows) > 1
        horizons = {int(r.split(",")[0]) for r in rows[1:]}
        assert horizons <= {1, 2}


class TestForecastCommand:
    def test_row_count_and_determinism(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel, horizons=12, window=3)
        code, out1, _ = _run(capsys, "forecast", "--config", config)
        assert code == 0
        rows = [line for line in out1.splitlines() if line and not line.startswith("#")]
        assert len(rows) - 1 == 12
        code, out2, _ = _run(capsys, "forecast", "--config", config)
        assert out1 == out2  # byte-identical rerun

    def test_constant_series(self, capsys, tmp_path):
        panel = _write_panel(tmp_path, constant=7.5, factors=0)
        config = _write_config(tmp_path, panel, gamma=1.0)
        code, out, _ = _run(capsys, "forecast", "--config", config)
        assert code == 0
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        for row in rows[1:]:
            assert float(row.split(",")[2]) == pytest.approx(7.5, abs=1e-8)

    def test_output_file(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        out_path = tmp_path / "fc.csv"
        config = _write_config(tmp_path, panel, output=str(out_path))
        code, out, _ = _run(capsys, "forecast", "--config", config)
        assert code == 0
        assert out == ""
        text = out_path.read_text()
        assert text.startswith("# sigcast forecast\n")
        assert "\r" not in text

    def test_config_echo_header(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel)
        _, out, _ = _run(capsys, "forecast", "--config", config)
        header = [line for line in out.splitlines() if line.startswith("#")]
        assert any("horizons=2" in line for line in header)
        assert any("schema=1" in line for line in header)
        # no paths leak into the output
        assert not any("panel.csv" in line for line in header)


class TestBacktestCommand:
    def test_perfect_fixture_zero_errors(self, capsys, tmp_path):
        panel = _write_panel(tmp_path, constant=3.0, factors=0)
        config = _write_config(tmp_path, panel, gamma=0.0)
        code, out, _ = _run(
            capsys, "backtest", "--config", config, "--origins", "2020-12-06", "2020-12-27"
        )
        assert code == 0
        blocks = out.split("\n\n")
        rows = [
            line
            for line in blocks[0].splitlines()
            if line and not line.startswith("#")
        ]
        assert rows[0] == "origin_date,horizon,actual,forecast,relative_error"
        for row in rows[1:]:
            assert row.split(",")[4] == "0.00"
        agg_rows = [
            line for line in blocks[1].splitlines() if line and not line.startswith("#")
        ]
        assert agg_rows[0] == "horizon,mean_relative_error,n,n_undefined"
        for row in agg_rows[1:]:
            assert row.split(",")[1] == "0.00"

    def test_anchor_arithmetic(self, capsys, tmp_path):
        # a panel whose realized value is 2.44 with forecasts pinned at 2.39
        # exercises the display arithmetic through the relative-error column
        from sigcast.pipeline import relative_error

        assert f"{100 * relative_error(2.44, 2.39):.2f}" == "2.05"

    def test_aggregate_is_mean_of_rows(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel, gamma=0.2)
        code, out, _ = _run(
            capsys, "backtest", "--config", config, "--origins", "2020-12-06", "2020-12-20"
        )
        assert code == 0
        data, agg = out.split("\n\n")
        rows = [l for l in data.splitlines() if l and not l.startswith("#")][1:]
        per_h = {}
        for row in rows:
            _, h, _, _, rel = row.split(",")
            per_h.setdefault(int(h), []).append(float(rel))
        agg_rows = [l for l in agg.splitlines() if l and not l.startswith("#")][1:]
        for row in agg_rows:
            h, mean_pct, n, n_undef = row.split(",")
            assert float(mean_pct) == pytest.approx(np.mean(per_h[int(h)]), abs=0.005)
            assert int(n) == len(per_h[int(h)])

    def test_unknown_origin_is_data_error(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel)
        code, _, err = _run(capsys, "backtest", "--config", config, "--origins", "1999-01-01")
        assert code == 2
        assert "origin" in err


class TestSynthCommand:
    def test_deterministic_given_seed(self, capsys, tmp_path):
        code, out1, _ = _run(capsys, "synth", "--seed", "11")
        assert code == 0
        code, out2, _ = _run(capsys, "synth", "--seed", "11")
        assert out1 == out2
        code, out3, _ = _run(capsys, "synth", "--seed", "12")
        assert out1 != out3

    def test_output_is_ingestible(self, capsys, tmp_path):
        out_path = tmp_path / "synth.csv"
        code, _, _ = _run(capsys, "synth", "--seed", "3", "--output", str(out_path))
        assert code == 0
        from sigcast.ingest import ingest_csv

        panel = ingest_csv(str(out_path))
        assert panel.length == 200
        assert panel.factor_names == ("factor_1", "factor_2")

    def test_custom_spec(self, capsys, tmp_path):
        spec = {
            "regimes": [{"length": 30, "trend": 0.5}],
            "n_factors": 0,
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        out_path = tmp_path / "ramp.csv"
        code, _, _ = _run(
            capsys, "synth", "--seed", "1", "--spec", str(spec_path), "--output", str(out_path)
        )
        assert code == 0
        from sigcast.ingest import ingest_csv

        panel = ingest_csv(str(out_path))
        np.testing.assert_allclose(np.diff(panel.target), 0.5, atol=1e-9)

    def test_bad_spec_is_config_error(self, capsys, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({"regimes": [], "bogus": 1}))
        code, _, err = _run(capsys, "synth", "--seed", "1", "--spec", str(spec_path))
        assert code == 1
        assert err


class TestExitCodes:
    def test_missing_config_file(self, capsys):
        code, _, err = _run(capsys, "forecast", "--config", "/nonexistent.json")
        assert code == 1 and err

    def test_unknown_config_key(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel, tempature=2.0)  # typo must be fatal
        code, _, err = _run(capsys, "forecast", "--config", config)
        assert code == 1
        assert "tempature" in err

    def test_wrong_schema_version(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel)
        raw = json.loads(open(config).read())
        raw["schema"] = 2
        open(config, "w").write(json.dumps(raw))
        code, _, err = _run(capsys, "forecast", "--config", config)
        assert code == 1

    def test_duplicate_dates_is_data_error(self, capsys, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("date,y\n2021-01-04,1.0\n2021-01-04,2.0\n")
        config = _write_config(tmp_path, str(path))
        code, _, err = _run(capsys, "forecast", "--config", config)
        assert code == 2

    def test_insufficient_history_is_data_error(self, capsys, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("date,y\n2021-01-04,1.0\n2021-01-11,2.0\n2021-01-18,3.0\n")
        config = _write_config(tmp_path, str(path))
        code, _, err = _run(capsys, "forecast", "--config", config)
        assert code == 2

    def test_usage_error_exit_one(self, capsys):
        code = main(["forecast"])  # missing --config
        captured = capsys.readouterr()
        assert code == 1
        assert captured.err

    def test_results_only_on_stdout(self, capsys, tmp_path):
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel)
        code, out, err = _run(capsys, "forecast", "--config", config)
        assert code == 0
        assert err == ""

    def test_numerical_failure_exit_three(self, capsys, tmp_path, monkeypatch):
        from sigcast.errors import ConvergenceError
        from sigcast.service import handlers

        def explode(req):
            raise ConvergenceError("did not converge", duality_gap=1.0)

        monkeypatch.setattr(handlers, "handle_forecast", explode)
        panel = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel)
        code, _, err = _run(capsys, "forecast", "--config", config)
        assert code == 3
        assert "numerical failure" in err


class TestCliServiceConsistency:
    def test_weights_match_service_route(self, capsys, tmp_path):
        # CLI and HTTP endpoints share one handler layer; verify end to end
        from fastapi.testclient import TestClient

        from sigcast.service.app import app

        panel_path = _write_panel(tmp_path)
        config = _write_config(tmp_path, panel_path, gamma=1.5)
        code, out, _ = _run(capsys, "weights", "--config", config, "--horizon", "2")
        assert code == 0
        cli_weights = [
            float(line.split(",")[1])
            for line in out.splitlines()
            if line and not line.startswith("#") and not line.startswith("date")
        ]

        from sigcast.ingest import ingest_csv
        from sigcast.service import handlers

        panel = ingest_csv(panel_path)
        payload = handlers.payload_from_panel(panel).model_dump()
        settings = {
            "horizons": 2, "window": 4, "depth": 2, "gamma": 1.5,
            "lambda_grid": [1e-4], "rho_min": 0.0, "rho_max": 0.99,
        }
        client = TestClient(app)
        resp = client.post(
            "/weights", json={"panel": payload, "settings": settings, "horizon": 2}
        )
        assert resp.status_code == 200
        assert resp.json()["weights"] == pytest.approx(cli_weights, abs=1e-12)
