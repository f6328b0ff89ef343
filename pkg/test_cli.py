import io
import json

import pytest
from rich.console import Console

from cli import EXIT_OK, EXIT_USAGE, _dims, build_parser, main
from results import file_sha256, read_csv
from terminal import ReportTerminal


@pytest.fixture
def terminal():
    return ReportTerminal(Console(file=io.StringIO(), width=140, color_system=None))


def output(terminal):
    return terminal.console.file.getvalue()


def test_dims_parsing():
    assert _dims("2,2,1") == (2, 2, 1)
    assert _dims("3x2x1") == (3, 2, 1)
    with pytest.raises(Exception):
        _dims("2,2")


def test_parser_routes_overrides():
    args = build_parser().parse_args(['--seed', '4', 'gauge-cool', '--dims', '2,2,1', '--sweeps', '3'])
    assert args.experiment == 'gauge-cool'
    assert args.run__master_seed == 4
    assert args.gauge__dims == (2, 2, 1)
    assert args.gauge__sweeps == 3


@pytest.mark.parametrize("argv", [
    [],
    ['teleport'],
    ['toric-cool', '--engine', 'quantum'],
    ['toric-cool', '--L', 'four'],
    ['gauge-ramp', '--dims', '2,2'],
])
def test_usage_errors_exit_with_one(argv, terminal):
    assert main(argv, terminal) == EXIT_USAGE
    assert "ERROR" in output(terminal)


def test_invalid_values_are_reported(terminal):
    assert main(['toric-cool', '--L', '1'], terminal) == EXIT_USAGE
    assert "[toric] L" in output(terminal)


def test_config_errors_carry_line_numbers(tmp_path, terminal):
    path = tmp_path / "bad.cfg"
    path.write_text("[run]\nmaster_seed = 3\nsweeps = many\n")
    assert main(['--config', str(path), 'ryd-params'], terminal) == EXIT_USAGE
    assert "Line 3" in output(terminal)


def test_missing_config_file(tmp_path, terminal):
    assert main(['--config', str(tmp_path / "absent.cfg"), 'ryd-params'], terminal) == EXIT_USAGE


def test_ryd_params_prints_json(terminal):
    assert main(['ryd-params'], terminal) == EXIT_OK
    assert "gate_time_s" in output(terminal)


def test_verify_writes_summary(tmp_path, terminal):
    assert main(['--out', str(tmp_path), 'verify', '--skip-engines'], terminal) == EXIT_OK
    summary = json.loads((tmp_path / "verify" / "summary.json").read_text())
    assert summary['experiment'] == 'verify'
    assert all(check['passed'] for check in summary['aggregates'].values())
    assert "PASS" in output(terminal)


def test_toric_walker_run_is_worker_independent(tmp_path, terminal):
    base = ['--seed', '1', 'toric-cool', '--L', '3', '--engine', 'walker', '--sweeps', '10',
            '--trajectories', '20', '--traces', '5', '--p-heat', '0.05']
    hashes = []
    for workers in (1, 2):
        out = tmp_path / f"w{workers}"
        assert main(['--workers', str(workers), '--out', str(out)] + base, terminal) == EXIT_OK
        folder = out / "toric_cool"
        hashes.append((file_sha256(str(folder / "mean.csv")), file_sha256(str(folder / "traces.csv"))))
    assert hashes[0] == hashes[1]

    summary = json.loads((tmp_path / "w1" / "toric_cool" / "summary.json").read_text())
    assert summary['seed'] == 1
    assert "T_eff" in summary["derived"]
    assert set(summary["checksums"]) == {"mean.csv", "traces.csv"}
    rows = read_csv(str(tmp_path / "w1" / "toric_cool" / "mean.csv"))
    assert len(rows) == 11 * 3
    assert {row["observable_name"] for row in rows} == {"density", "density_plaquette", "density_vertex"}


def test_gauge_ramp_writes_ramp_csv(tmp_path, terminal):
    argv = ['--out', str(tmp_path), 'gauge-ramp', '--dims', '2,2,1', '--phi-scales', '0.5',
            '--duration', '1.0']
    assert main(argv, terminal) == EXIT_OK
    folder = tmp_path / "gauge_ramp"
    assert (folder / "ramp.csv").exists()
    summary = json.loads((folder / "summary.json").read_text())
    assert set(summary['aggregates']['final_errors']) == {'0.5'}
