"""Config parsing, run orchestration, moving averages, SVG plots."""

import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from anorl import harness
from anorl.errors import ValidationError
from anorl.harness import ExperimentConfig, RunRecord, moving_average, parse_config
from anorl.qmodel import Mode

MINIMAL = """
[experiment]
algorithm = dqn
env = cartpole
seed = 7
episodes = 3
"""


class TestParseConfig:
    def test_minimal_fills_defaults(self):
        config = parse_config(MINIMAL)
        assert config.algorithm == "dqn"
        assert config.env == "cartpole"
        assert config.seed == 7
        assert config.episodes == 3
        assert config.mode is Mode.ANO_WITH_ROTATION
        assert config.locality == 3 and config.n_qubits == 4
        assert config.gamma == 0.99 and config.batch_size == 32

    def test_seed_required(self):
        with pytest.raises(ValidationError) as err:
            parse_config("[experiment]\nalgorithm = dqn\n")
        assert any("seed" in v for v in err.value.violations)

    def test_seed_override(self):
        config = parse_config("[experiment]\nalgorithm = dqn\n", seed_override=3)
        assert config.seed == 3

    def test_locality_exceeds_qubits(self):
        text = MINIMAL + "[model]\nlocality = 6\nn_qubits = 4\n"
        with pytest.raises(ValidationError) as err:
            parse_config(text)
        assert any("locality exceeds qubit count" in v for v in err.value.violations)

    def test_rotation_only_rejects_locality(self):
        text = MINIMAL + "[model]\nmode = rotation_only\nlocality = 2\n"
        with pytest.raises(ValidationError) as err:
            parse_config(text)
        assert any("rotation_only" in v for v in err.value.violations)

    def test_all_violations_reported(self):
        text = """
[experiment]
algorithm = sarsa
env = pendulum
episodes = -1
[model]
n_qubits = 12
[typo_section]
x = 1
"""
        with pytest.raises(ValidationError) as err:
            parse_config(text)
        joined = "\n".join(err.value.violations)
        assert "algorithm" in joined
        assert "env" in joined
        assert "episodes" in joined
        assert "n_qubits" in joined
        assert "unknown section [typo_section]" in joined
        assert "seed" in joined
        assert len(err.value.violations) >= 6

    def test_unknown_key_has_path(self):
        with pytest.raises(ValidationError) as err:
            parse_config(MINIMAL + "[dqn]\nlearning = 0.5\n")
        assert any("dqn.learning" in v for v in err.value.violations)

    def test_unparsable_value(self):
        with pytest.raises(ValidationError) as err:
            parse_config(MINIMAL + "[dqn]\ngamma = high\n")
        assert any("dqn.gamma" in v for v in err.value.violations)

    def test_round_trip(self):
        text = MINIMAL + "[model]\nmode = measurement_only\nlocality = 2\n[a3c]\nworkers = 2\n"
        config = parse_config(text)
        again = parse_config(harness.render_config(config))
        assert again == config

    def test_round_trip_rotation_only(self):
        config = parse_config(MINIMAL + "[model]\nmode = rotation_only\n")
        rendered = harness.render_config(config)
        assert "locality" not in rendered
        assert parse_config(rendered) == config


class TestExperimentConfig:
    def test_model_config_mapping(self):
        config = parse_config(MINIMAL)
        model = config.model_config()
        assert model.n_qubits == 4 and model.n_outputs == 2
        critic = config.model_config(n_outputs=1)
        assert critic.n_outputs == 1

    def test_qubits_fewer_than_actions(self):
        text = MINIMAL.replace("cartpole", "mountaincar") + "[model]\nn_qubits = 2\nlocality = 2\n"
        with pytest.raises(ValidationError) as err:
            parse_config(text)
        assert any("fewer qubits than actions" in v for v in err.value.violations)


class TestRunExperiment:
    def test_zero_episodes_header_only(self, tmp_path):
        config = parse_config(MINIMAL.replace("episodes = 3", "episodes = 0"))
        record = harness.run_experiment(config, out_dir=str(tmp_path))
        content = Path(record.csv_path).read_text()
        assert content == "episode,reward,epsilon,mean_loss\n"
        assert record.rows == []

    def test_dqn_csv_determinism(self, tmp_path):
        text = MINIMAL + "[model]\nn_qubits = 4\nlocality = 2\n[dqn]\nbatch_size = 8\n"
        config = parse_config(text)
        a = harness.run_experiment(config, out_dir=str(tmp_path / "a"))
        b = harness.run_experiment(config, out_dir=str(tmp_path / "b"))
        assert Path(a.csv_path).read_text() == Path(b.csv_path).read_text()
        assert len(a.rows) == 3

    def test_a3c_csv_schema(self, tmp_path):
        text = """
[experiment]
algorithm = a3c
env = mountaincar
seed = 1
episodes = 2
[model]
n_qubits = 4
locality = 2
[a3c]
workers = 1
"""
        record = harness.run_experiment(parse_config(text), out_dir=str(tmp_path))
        lines = Path(record.csv_path).read_text().splitlines()
        assert lines[0] == "global_episode,worker,reward"
        assert len(lines) == 3

    def test_three_seed_batch_distinct(self, tmp_path):
        records = []
        for seed in (0, 1, 2):
            config = parse_config(MINIMAL, seed_override=seed)
            config.episodes = 1
            records.append(harness.run_experiment(config, out_dir=str(tmp_path)))
        assert len({r.config.seed for r in records}) == 3
        assert len({r.csv_path for r in records}) == 3

    def test_read_csv_round_trip(self, tmp_path):
        config = parse_config(MINIMAL)
        record = harness.run_experiment(config, out_dir=str(tmp_path))
        loaded = harness.read_csv_record(record.csv_path)
        assert loaded.header == record.header
        assert loaded.rewards() == record.rewards()


class TestMovingAverage:
    def test_constant_series(self):
        means, stds = moving_average([4.0] * 10, 3)
        assert np.allclose(means, 4.0)
        assert np.allclose(stds, 0.0)

    def test_two_point_window(self):
        means, _ = moving_average([0.0, 1.0], 2)
        assert np.allclose(means, [0.0, 0.5])

    def test_closed_form_1_to_100(self):
        series = np.arange(1, 101, dtype=float)
        means, stds = moving_average(series, 100)
        assert means[-1] == pytest.approx(50.5)
        assert stds[-1] == pytest.approx(np.sqrt(101 * 100 / 12), abs=1e-10)
        assert stds[-1] == pytest.approx(29.0115, abs=1e-4)

    def test_prefix_windows(self):
        means, stds = moving_average([1.0, 3.0, 5.0, 7.0], 3)
        assert np.allclose(means, [1.0, 2.0, 3.0, 5.0])
        assert stds[0] == 0.0
        assert stds[1] == pytest.approx(np.std([1, 3], ddof=1))

    def test_empty_series(self):
        means, stds = moving_average([], 5)
        assert means.size == 0 and stds.size == 0

    def test_bad_window(self):
        with pytest.raises(ValidationError):
            moving_average([1.0], 0)


def synthetic_record(name, rewards):
    record = RunRecord(
        config=ExperimentConfig(),
        header=list(harness.DQN_HEADER),
        name=name,
    )
    record.rows = [[i, r, 1.0, 0.0] for i, r in enumerate(rewards)]
    return record


class TestEmitPlot:
    def test_single_record_valid_svg(self, tmp_path):
        path = tmp_path / "plot.svg"
        harness.emit_plot([synthetic_record("run-a", [1.0, 2.0, 3.0])], str(path))
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")

    def test_two_records_two_legend_entries(self, tmp_path):
        path = tmp_path / "plot.svg"
        harness.emit_plot(
            [
                synthetic_record("first", [1.0, 2.0]),
                synthetic_record("second", [2.0, 1.0]),
            ],
            str(path),
        )
        text = path.read_text()
        assert "first" in text and "second" in text
        root = ET.parse(path).getroot()
        labels = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
        assert "first" in labels and "second" in labels

    def test_polyline_vertex_count_equals_series_length(self, tmp_path):
        series = list(np.sin(np.linspace(0, 3, 37)))
        path = tmp_path / "plot.svg"
        harness.emit_plot([synthetic_record("sine", series)], str(path), window=5)
        root = ET.parse(path).getroot()
        polylines = list(root.iter("{http://www.w3.org/2000/svg}polyline"))
        assert len(polylines) == 1
        points = polylines[0].attrib["points"].split()
        assert len(points) == len(series)

    def test_empty_input_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            harness.emit_plot([], str(tmp_path / "x.svg"))
