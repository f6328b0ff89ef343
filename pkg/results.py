"""
Result Files
CSV time series and JSON run summaries

Features:
- Versioned CSV writers ("# schema=1" header line) for trajectory rows,
  per-sweep aggregates and ramp traces
- RunSummary with config echo, code version, aggregates, derived values,
  model hash and per-file sha256 checksums

CSV bytes depend only on the records, never on wall time or worker count.
"""

import csv
import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Sequence

import numpy as np

from channels import TrajectoryRecord

logger = logging.getLogger(__name__)

SCHEMA_LINE = "# schema=1"
CODE_VERSION = "1.0.0"

TRAJECTORY_COLUMNS = ('trajectory_id', 'sweep', 'time_s', 'observable_name', 'value')
AGGREGATE_COLUMNS = ('sweep', 'time_s', 'observable_name', 'mean', 'stderr')
RAMP_COLUMNS = ('phi_scale', 'step', 'time_in_hbar_over_J', 'V_over_J', 'energy', 'exact_energy')


def _number(value: float) -> str:
    return repr(float(value))


def _write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='') as fh:
        fh.write(SCHEMA_LINE + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    logger.debug("Wrote %s", path)
    return path


def write_trajectory_csv(path: str, records: Sequence[TrajectoryRecord]) -> str:
    """One row per (trajectory, sweep, observable), trajectories in id order"""
    def rows():
        for record in sorted(records, key=lambda r: r.trajectory_id):
            for tid, sweep, t, name, value in record.rows():
                yield tid, sweep, _number(t), name, _number(value)
    return _write_csv(path, TRAJECTORY_COLUMNS, rows())


def write_aggregate_csv(path: str, times: Sequence[float], means: Dict[str, Sequence[float]],
                        errors: Dict[str, Sequence[float]]) -> str:
    def rows():
        for k, t in enumerate(times):
            for name in sorted(means):
                yield k, _number(t), name, _number(means[name][k]), _number(errors[name][k])
    return _write_csv(path, AGGREGATE_COLUMNS, rows())


def write_ramp_csv(path: str, results: Sequence[object]) -> str:
    """Rows of every RampResult, grouped by phi_scale in the given order"""
    def rows():
        for result in results:
            for step, t, v, e, exact in result.rows():
                yield (_number(result.phi_scale), step, _number(t), _number(v),
                       _number(e), _number(exact))
    return _write_csv(path, RAMP_COLUMNS, rows())


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, newline='') as fh:
        header = fh.readline().rstrip("\n")
        if header != SCHEMA_LINE:
            raise ValueError(f"{path}: expected '{SCHEMA_LINE}', got {header!r}")
        return list(csv.DictReader(fh))


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


def model_hash(description: Dict[str, object]) -> str:
    """sha256 of the canonical JSON form of a model description"""
    text = json.dumps(_plain(description), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode()).hexdigest()


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


@dataclass
class RunSummary:
    experiment: str
    seed: int
    config: Dict[str, object]
    model: Dict[str, object] = field(default_factory=dict)
    aggregates: Dict[str, object] = field(default_factory=dict)
    derived: Dict[str, object] = field(default_factory=dict)
    checksums: Dict[str, str] = field(default_factory=dict)
    code_version: str = CODE_VERSION
    wall_time_s: float = 0.0
    started: float = field(default_factory=time.time, repr=False)

    @property
    def model_hash(self) -> str:
        return model_hash(self.model)

    def add_file(self, path: str):
        self.checksums[os.path.basename(path)] = file_sha256(path)

    def finish(self):
        self.wall_time_s = time.time() - self.started

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data.pop('started')
        data['model_hash'] = self.model_hash
        return _plain(data)

    def save(self, path: str) -> str:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        logger.info("Run summary written to %s", path)
        return path
