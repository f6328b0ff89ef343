import json

import numpy as np
import pytest

from channels import TrajectoryRecord
from results import (
    AGGREGATE_COLUMNS, SCHEMA_LINE, TRAJECTORY_COLUMNS, RunSummary, file_sha256,
    model_hash, read_csv, write_aggregate_csv, write_ramp_csv, write_trajectory_csv,
)


def make_records():
    records = []
    for tid in (1, 0):
        record = TrajectoryRecord(tid, 5)
        for sweep in range(3):
            record.record(float(sweep), density=0.5 / (sweep + 1 + tid))
        records.append(record)
    return records


def test_trajectory_csv_layout(tmp_path):
    path = write_trajectory_csv(str(tmp_path / "out" / "traces.csv"), make_records())
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == SCHEMA_LINE
    assert lines[1] == ','.join(TRAJECTORY_COLUMNS)
    assert lines[2] == "0,0,0.0,density,0.5"
    rows = read_csv(path)
    assert len(rows) == 6
    assert [r['trajectory_id'] for r in rows] == ['0'] * 3 + ['1'] * 3


def test_csv_bytes_depend_only_on_records(tmp_path):
    a = write_trajectory_csv(str(tmp_path / "a.csv"), make_records())
    b = write_trajectory_csv(str(tmp_path / "b.csv"), list(reversed(make_records())))
    assert file_sha256(a) == file_sha256(b)


def test_aggregate_csv(tmp_path):
    path = write_aggregate_csv(str(tmp_path / "mean.csv"), [0.0, 1.0],
                               {'rk_fidelity': [0.1, 0.2], 'charge_density': [1.0, 0.5]},
                               {'rk_fidelity': [0.0, 0.01], 'charge_density': [0.0, 0.02]})
    rows = read_csv(path)
    assert tuple(rows[0]) == AGGREGATE_COLUMNS
    assert [r['observable_name'] for r in rows[:2]] == ['charge_density', 'rk_fidelity']
    assert float(rows[3]['stderr']) == 0.01


def test_ramp_csv(tmp_path):
    class Trace:
        phi_scale = 0.1

        def rows(self):
            yield 0, 0.0, 1.0, -2.0, -2.0
            yield 1, 0.1, 0.99, -1.9, -1.95

    rows = read_csv(write_ramp_csv(str(tmp_path / "ramp.csv"), [Trace()]))
    assert rows[1]['V_over_J'] == '0.99'
    assert rows[1]['exact_energy'] == '-1.95'


def test_read_rejects_missing_schema(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(str(path))


def test_model_hash_is_canonical():
    assert model_hash({'L': 2, 'theta': 1.5}) == model_hash({'theta': 1.5, 'L': 2})
    assert model_hash({'dims': (2, 2, 1)}) == model_hash({'dims': [2, 2, 1]})
    assert model_hash({'L': 2}) != model_hash({'L': 3})


def test_summary_json(tmp_path):
    csv_path = write_trajectory_csv(str(tmp_path / "traces.csv"), make_records())
    summary = RunSummary('toric-cool', 5, {'run': {'sweeps': 3}}, model={'L': 2},
                         aggregates={'final': np.float64(0.25)})
    summary.add_file(csv_path)
    summary.finish()
    summary.save(str(tmp_path / "summary.json"))
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data['checksums'] == {'traces.csv': file_sha256(csv_path)}
    assert data['model_hash'] == model_hash({'L': 2})
    assert data['aggregates']['final'] == 0.25
    assert data['code_version'] == '1.0.0'
    assert 'started' not in data
    assert data['wall_time_s'] >= 0
