import json
import math

import pytest
from click.testing import CliRunner

from pcgmum.cli import cli
from pcgmum.models.schemas import MumConfig
from pcgmum.services.mum_config import verify_config


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_file(tmp_path, d3_config):
    path = tmp_path / "config.json"
    path.write_text(d3_config.to_json())
    return str(path)


def test_rmax(runner):
    result = runner.invoke(cli, ["rmax", "--d", "3"])
    assert result.exit_code == 0
    assert result.stdout.strip() == "4"


def test_rmax_json(runner):
    result = runner.invoke(cli, ["rmax", "--d", "12", "--json"])
    payload = json.loads(result.stdout)
    assert payload["r_max"] == 3
    assert payload["kind"] == "even"
    assert payload["behaviour"] == "continuous"
    assert payload["metadata"]["tool"] == "pcgmum"


def test_rmax_domain_error(runner):
    result = runner.invoke(cli, ["rmax", "--d", "1"])
    assert result.exit_code == 1
    assert "domain_error" in result.output


def test_construct_json_round_trips_through_verify(runner, tmp_path):
    result = runner.invoke(cli, ["construct", "--d", "3", "--Q", "1", "--R", "4", "--mcol", "1,2,1", "--json"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["schema"] == "pcgmum.config/1"
    assert payload["periods_px"][0] == pytest.approx(92.7476, abs=0.01)
    config = MumConfig.model_validate_json(result.stdout)
    assert verify_config(config).passed

    path = tmp_path / "built.json"
    path.write_text(result.stdout)
    verified = runner.invoke(cli, ["verify", "--config", str(path), "--json"])
    assert verified.exit_code == 0
    assert json.loads(verified.stdout)["passed"] is True


def test_construct_is_deterministic(runner):
    args = ["construct", "--d", "3", "--Q", "1", "--R", "4", "--mcol", "1,2,1"]
    first = runner.invoke(cli, args)
    second = runner.invoke(cli, args)
    assert first.stdout == second.stdout
    assert first.stdout.startswith("# tool: pcgmum")


def test_construct_bound_error(runner):
    result = runner.invoke(cli, ["construct", "--d", "3", "--Q", "1", "--R", "5", "--mcol", "1,2,1,1"])
    assert result.exit_code == 1
    assert "bound_exceeded" in result.output


def test_construct_names_failing_pair(runner):
    result = runner.invoke(cli, ["construct", "--d", "2", "--Q", "1", "--R", "3", "--mcol", "1,1"])
    assert result.exit_code == 1
    assert "construction_failed" in result.output


def test_usage_errors(runner):
    assert runner.invoke(cli, ["rmax"]).exit_code == 2
    assert runner.invoke(cli, ["rmax", "--d", "3", "--bogus"]).exit_code == 2
    assert runner.invoke(cli, ["nonsense"]).exit_code == 2


def test_invalid_config_is_usage_error(runner, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"d": 3, "angles": [0.5], "periods": [1.0], "m_matrix": {"d": 3, "m": [[]]}}')
    assert runner.invoke(cli, ["verify", "--config", str(path)]).exit_code == 2


def test_verify_csv(runner, config_file):
    result = runner.invoke(cli, ["verify", "--config", config_file])
    assert result.exit_code == 0
    lines = [line for line in result.stdout.splitlines() if not line.startswith("#")]
    assert lines[0].startswith("j,k,implied_m")
    assert len(lines) == 7


def test_simulate(runner, config_file, tmp_path):
    state_path = tmp_path / "state.csv"
    result = runner.invoke(cli, [
        "simulate", "--config", config_file, "--j", "0", "--k", "0", "--grid-size", "1024",
        "--state-csv", str(state_path), "--json"
    ])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["probs"][0] >= 1 - 1e-9
    assert payload["metadata"]["grid_size"] == 1024
    assert state_path.read_text().startswith("q,re,im,abs2")


def test_simulate_bad_grid(runner, config_file):
    result = runner.invoke(cli, ["simulate", "--config", config_file, "--j", "0", "--k", "1", "--grid-size", "1000"])
    assert result.exit_code == 1


def test_tables_output_file(runner, config_file, tmp_path):
    target = tmp_path / "tables.csv"
    result = runner.invoke(cli, ["tables", "--config", config_file, "--output", str(target)])
    assert result.exit_code == 0
    text = target.read_text()
    assert "prep,meas,entropy_bits,kl_bits" in text
    assert "# grid_size: 4096" in text


def test_sweep_csv(runner, config_file):
    result = runner.invoke(cli, [
        "sweep", "--config", config_file, "--j", "0", "--k", "2",
        "--start-px", "90", "--stop-px", "95"
    ])
    assert result.exit_code == 0
    rows = [line for line in result.stdout.splitlines() if not line.startswith("#")]
    assert rows[0] == "period_px,entropy_bits,marker_m"
    assert len(rows) == 7


def test_search(runner):
    result = runner.invoke(cli, ["search", "--d", "3", "--m-bound", "6", "--json"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["r_found"] == payload["r_max"] == 4


def test_construct_round_reports_pixel_residuals(runner):
    args = ["construct", "--d", "3", "--Q", "1", "--R", "4", "--mcol", "1,2,1", "--round"]
    result = runner.invoke(cli, args + ["--json"])
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["pixels"] == [93, 132, 93, 132]
    assert payload["rounded_report"]["passed"] is True

    csv_result = runner.invoke(cli, args)
    assert "# rounded_passed: True" in csv_result.stdout
    header = [line for line in csv_result.stdout.splitlines() if not line.startswith("#")][0]
    assert header.endswith(",pixels")


def test_verify_raw_directions(runner, tmp_path, d3_config):
    path = tmp_path / "directions.json"
    path.write_text(json.dumps({
        "d": 3,
        "angles": [d3_config.angles[3], d3_config.angles[0] + math.pi, d3_config.angles[1], d3_config.angles[2]],
        "periods": [d3_config.periods[3], d3_config.periods[0], d3_config.periods[1], d3_config.periods[2]],
    }))
    result = runner.invoke(cli, ["verify", "--directions", str(path), "--json"])
    assert result.exit_code == 0
    assert json.loads(result.stdout)["passed"] is True


def test_verify_needs_exactly_one_source(runner, config_file, tmp_path):
    assert runner.invoke(cli, ["verify"]).exit_code == 2
    path = tmp_path / "directions.json"
    path.write_text('{"d": 3, "angles": [0.0], "periods": [1.0]}')
    assert runner.invoke(cli, ["verify", "--config", config_file, "--directions", str(path)]).exit_code == 2


def test_simulate_writes_probability_array(runner, config_file, tmp_path):
    target = tmp_path / "probs.json"
    result = runner.invoke(cli, [
        "simulate", "--config", config_file, "--j", "0", "--k", "2", "--probs-json", str(target)
    ])
    assert result.exit_code == 0
    probs = json.loads(target.read_text())
    assert isinstance(probs, list)
    assert probs == pytest.approx([1 / 3] * 3, abs=1e-3)


def test_simulate_convergence_curve(runner, config_file):
    result = runner.invoke(cli, [
        "simulate", "--config", config_file, "--j", "0", "--k", "2", "--convergence", "1024,4096"
    ])
    assert result.exit_code == 0
    rows = [line for line in result.stdout.splitlines() if not line.startswith("#")]
    assert rows[0] == "grid_size,max_deviation"
    assert [row.split(",")[0] for row in rows[1:]] == ["1024", "4096"]


def test_tables_sensitivity_column(runner, config_file):
    result = runner.invoke(cli, ["tables", "--config", config_file, "--sensitivity"])
    assert result.exit_code == 0
    assert "prep,meas,entropy_bits,kl_bits,outcome_spread_bits" in result.stdout
