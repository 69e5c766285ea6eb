import json

import numpy as np
import pytest

from nla.analysis.sweep import SWEEP_COLUMNS, SweepSpec, read_sweep_csv, run_sweep, write_sweep_csv
from nla.cli import execute, load_config_file, parse_grid
from nla.errors import ConfigError


def run_cli(args, tmp_path, name='out.txt'):
    out = tmp_path / name
    code = execute(args + ['--out', str(out)])
    return code, (out.read_text() if out.exists() else None)


class TestRunCommand:

    def test_direct_csv_row(self, tmp_path):
        code, text = run_cli(['run', '--scheme', 'direct', '--eta', '0.3'], tmp_path)
        assert code == 0
        lines = text.strip().split('\n')
        assert lines[0] == ','.join(SWEEP_COLUMNS)
        assert len(lines) == 2
        row = dict(zip(SWEEP_COLUMNS, lines[1].split(',')))
        assert float(row['p']) == pytest.approx(0.3, abs=1e-12)

    def test_json_uses_optimal_gain(self, tmp_path):
        code, text = run_cli(['run', '--scheme', 'end', '--tau', '0.5', '--eta', '0.25', '--pnr',
                              '--format', 'json'], tmp_path)
        assert code == 0
        record = json.loads(text)
        assert record['t'] == pytest.approx(0.8)
        assert record['F'] == pytest.approx(1.0, abs=1e-9)

    def test_oracle_estimate(self, tmp_path):
        code, text = run_cli(['run', '--scheme', 'end', '--eta', '0.25', '--format', 'json',
                              '--shots', '20000', '--seed', '3'], tmp_path)
        assert code == 0
        assert json.loads(text)['oracle']['shots'] == 20000

    def test_distance_and_eta_conflict(self, tmp_path):
        code, _ = run_cli(['run', '--eta', '0.3', '--distance-km', '10'], tmp_path)
        assert code == 2

    def test_out_of_range_value(self, tmp_path):
        code, _ = run_cli(['run', '--tau', '1.5'], tmp_path)
        assert code == 2

    def test_degenerate_herald_exit_code(self, tmp_path):
        code, text = run_cli(['run', '--scheme', 'end', '--eta', '0.5', '--eps1', '0', '--eps2', '0'], tmp_path)
        assert code == 3
        assert text is None

    def test_unknown_flag(self, tmp_path):
        code, _ = run_cli(['run', '--gain', '2'], tmp_path)
        assert code == 2


class TestConfigFile:

    def test_values_and_flag_override(self, tmp_path):
        config_file = tmp_path / 'config.json'
        config_file.write_text(json.dumps({'scheme': 'direct', 'eta': 0.5, 'eps1': 0.5}))
        code, text = run_cli(['run', '--config', str(config_file), '--eta', '0.3'], tmp_path)
        assert code == 0
        row = read_sweep_csv(tmp_path / 'out.txt').iloc[0]
        assert row['p'] == pytest.approx(0.15, abs=1e-12)

    def test_unknown_key(self, tmp_path):
        config_file = tmp_path / 'config.json'
        config_file.write_text(json.dumps({'scheme': 'end', 'gain': 2.0}))
        code, _ = run_cli(['run', '--config', str(config_file)], tmp_path)
        assert code == 2
        with pytest.raises(ConfigError) as info:
            load_config_file(config_file)
        assert info.value.key == 'gain'

    def test_malformed_json(self, tmp_path):
        config_file = tmp_path / 'config.json'
        config_file.write_text('{"scheme": ')
        code, _ = run_cli(['run', '--config', str(config_file)], tmp_path)
        assert code == 2

    def test_preset(self, tmp_path):
        code, text = run_cli(['run', '--scheme', 'direct', '--eta', '0.5', '--preset', 'methods'], tmp_path)
        assert code == 0
        row = read_sweep_csv(tmp_path / 'out.txt').iloc[0]
        assert row['p'] == pytest.approx(0.85 * 0.5 * 0.8, abs=1e-12)

    def test_unknown_preset(self, tmp_path):
        code, _ = run_cli(['run', '--preset', 'lab'], tmp_path)
        assert code == 2


class TestSweepCommand:

    def test_distance_grid_rows(self, tmp_path):
        code, _ = run_cli(['sweep', '--variable', 'distance_km', '--grid', '0:250:10', '--scheme', 'middle',
                           '--preset', 'methods'], tmp_path, 'sweep.csv')
        assert code == 0
        table = read_sweep_csv(tmp_path / 'sweep.csv')
        assert len(table) == 26
        assert table['distance_km'].tolist() == [float(d) for d in range(0, 251, 10)]
        assert list(table.columns) == SWEEP_COLUMNS

    def test_byte_identical_outputs(self, tmp_path):
        args = ['sweep', '--grid', '0.05,0.1,0.2', '--schemes', 'end,middle,direct', '--preset', 'methods']
        run_cli(args + ['--jobs', '1'], tmp_path, 'first.csv')
        run_cli(args + ['--jobs', '3'], tmp_path, 'second.csv')
        assert (tmp_path / 'first.csv').read_bytes() == (tmp_path / 'second.csv').read_bytes()

    def test_decreasing_grid(self, tmp_path):
        code, _ = run_cli(['sweep', '--grid', '0.3,0.2'], tmp_path)
        assert code == 2

    def test_json_format(self, tmp_path):
        code, text = run_cli(['sweep', '--grid', '0.1,0.2', '--scheme', 'end', '--format', 'json'], tmp_path)
        assert code == 0
        assert [row['eta'] for row in json.loads(text)] == [0.1, 0.2]

    def test_json_direct_rows_are_strict(self, tmp_path):
        code, text = run_cli(['sweep', '--grid', '0.1,0.2', '--scheme', 'direct', '--format', 'json'], tmp_path)
        assert code == 0
        assert 'NaN' not in text
        rows = json.loads(text, parse_constant=lambda name: pytest.fail(f"non-standard constant {name}"))
        assert [row['t'] for row in rows] == [None, None]


class TestCsvRoundTrip:

    def test_parsed_table_matches_memory(self, tmp_path):
        spec = SweepSpec('eta', (0.013, 0.1, 0.37), schemes=('end', 'middle', 'direct'), preset='methods')
        table = run_sweep(spec)
        path = tmp_path / 'table.csv'
        write_sweep_csv(table, path)
        parsed = read_sweep_csv(path)
        for column in SWEEP_COLUMNS:
            if table[column].dtype == object or table[column].dtype == bool:
                assert parsed[column].tolist() == table[column].tolist()
                continue
            expected = table[column].to_numpy(dtype=float)
            got = parsed[column].to_numpy(dtype=float)
            assert np.allclose(got, expected, rtol=1e-11, atol=0, equal_nan=True)


class TestTuneAndCrossover:

    def test_tune_json(self, tmp_path):
        code, text = run_cli(['tune', '--scheme', 'middle', '--tau', '0.5', '--eta', '0.1'], tmp_path)
        assert code == 0
        record = json.loads(text)
        assert set(record) >= {'t_star', 'F_star', 'iterations'}
        assert record['t_star'] == pytest.approx(0.5, abs=1e-3)

    def test_tune_direct_rejected(self, tmp_path):
        code, _ = run_cli(['tune', '--scheme', 'direct'], tmp_path)
        assert code == 2

    def test_crossover_json(self, tmp_path):
        code, text = run_cli(['crossover', '--max-km', '300'], tmp_path)
        assert code == 0
        record = json.loads(text)
        assert record['found']
        assert 60.0 <= record['distance_km'] <= 150.0
        lo, hi = record['bracket_km']
        assert lo < hi <= lo + 1e-6

    def test_crossover_policy_flags(self, tmp_path):
        code, text = run_cli(['crossover', '--max-km', '300', '--herald-policy', 'both_patterns',
                              '--no-fold-char-efficiency'], tmp_path)
        assert code == 0
        assert json.loads(text)['distance_km'] < 60.0


class TestGridParsing:

    def test_inclusive_range(self):
        assert parse_grid('0:250:10') == tuple(float(d) for d in range(0, 251, 10))

    def test_fractional_step(self):
        assert parse_grid('0.1:0.3:0.1') == (0.1, 0.2, 0.3)

    def test_comma_list(self):
        assert parse_grid('0.5, 0.25') == (0.5, 0.25)
