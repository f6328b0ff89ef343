"""
Run Configuration
Experiment settings with a flat key = value on-disk form

Features:
- RunConfig with [run], [toric], [gauge], [ramp] and [rydberg] sections
- Lossless round trip through configparser text
- Line-numbered error collection while parsing
- DIGISIM_WORKERS (optionally from a .env file) as the default worker count
"""

import configparser
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Tuple

import numpy as np

# Try to load dotenv for .env file support
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

logger = logging.getLogger(__name__)

WORKERS_ENV = 'DIGISIM_WORKERS'
EXPERIMENTS = ('toric-cool', 'gauge-cool', 'gauge-ramp', 'verify', 'ryd-params')


def default_workers() -> int:
    value = os.getenv(WORKERS_ENV)
    if not value:
        return 1
    try:
        workers = int(value)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {value!r}")
    if workers < 1:
        raise ValueError(f"{WORKERS_ENV} must be at least 1, got {workers}")
    return workers


@dataclass
class RunSection:
    experiment: str = 'toric-cool'
    master_seed: int = 0
    workers: int = field(default_factory=default_workers)
    out_dir: str = 'results'
    trajectories: int = 1000
    sweeps: int = 40
    traces: int = 3


@dataclass
class ToricSection:
    L: int = 2
    engine: str = 'dense'
    e0: float = 1.0
    phi: float = 0.0
    theta: float = float(np.pi / 2)
    q_norm: float = 0.1
    q: str = ''
    errors: bool = False
    p_heat: Optional[float] = None
    schedule: str = 'round_robin'
    walker_order: str = 'schedule'
    tau: float = 1.0


@dataclass
class GaugeSection:
    dims: Tuple[int, ...] = (2, 2, 1)
    u: float = 1.0
    j: float = 1.0
    v: float = 1.0
    theta: float = float(np.pi / 2)
    tau: float = 1.0
    initial: str = 'all_down'
    sweeps: int = 40
    trajectories: int = 8
    constraint_sweeps: Optional[int] = None


@dataclass
class RampSection:
    phi_scales: Tuple[float, ...] = (0.2, 0.1, 0.05)
    duration: float = 10.0


@dataclass
class RydbergSection:
    omega_p: float = float(2 * np.pi * 100e6)
    omega_c: float = float(2 * np.pi * 100e6)
    delta: float = float(2 * np.pi * 1.2e9)
    c6: Optional[float] = None
    tau: Optional[float] = None
    z: int = 4
    gates_per_sublattice: int = 2
    overhead: float = 1.2


SECTIONS = {
    'run': RunSection,
    'toric': ToricSection,
    'gauge': GaugeSection,
    'ramp': RampSection,
    'rydberg': RydbergSection,
}


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    toric: ToricSection = field(default_factory=ToricSection)
    gauge: GaugeSection = field(default_factory=GaugeSection)
    ramp: RampSection = field(default_factory=RampSection)
    rydberg: RydbergSection = field(default_factory=RydbergSection)

    def validate(self):
        errors = []
        if self.run.experiment not in EXPERIMENTS:
            errors.append(f"[run] experiment: unknown experiment {self.run.experiment!r}")
        for name in ('trajectories', 'sweeps', 'workers'):
            if getattr(self.run, name) < 1:
                errors.append(f"[run] {name}: must be at least 1")
        if self.run.traces < 0:
            errors.append("[run] traces: must be non-negative")
        if self.toric.engine not in ('dense', 'walker'):
            errors.append(f"[toric] engine: unknown engine {self.toric.engine!r}")
        if self.toric.L < 2:
            errors.append("[toric] L: must be at least 2")
        if len(self.gauge.dims) != 3:
            errors.append(f"[gauge] dims: need three sizes, got {self.gauge.dims}")
        if self.gauge.initial not in ('all_down', 'covering'):
            errors.append(f"[gauge] initial: unknown initial state {self.gauge.initial!r}")
        if not self.ramp.phi_scales or any(s <= 0 for s in self.ramp.phi_scales):
            errors.append("[ramp] phi_scales: need positive values")
        if errors:
            raise ValueError("Invalid configuration:\n  " + "\n  ".join(errors))
        return self

    def to_text(self) -> str:
        lines = []
        for name in SECTIONS:
            lines.append(f"[{name}]")
            section = getattr(self, name)
            for f in fields(section):
                lines.append(f"{f.name} = {_format(getattr(section, f.name))}")
            lines.append("")
        return "\n".join(lines)

    def as_dict(self) -> Dict[str, Dict[str, object]]:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def save(self, path: str):
        with open(path, 'w') as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> 'RunConfig':
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ValueError(f"Malformed configuration: {e}")

        config = cls()
        defaults = cls()
        errors: List[str] = []
        line_of = _line_numbers(text)
        for section_name in parser.sections():
            if section_name not in SECTIONS:
                errors.append(f"Line {line_of.get((section_name, None), '?')}: unknown section [{section_name}]")
                continue
            section = getattr(config, section_name)
            for key, raw in parser.items(section_name):
                where = f"Line {line_of.get((section_name, key), '?')}"
                if not hasattr(section, key):
                    errors.append(f"{where}: unknown key '{key}' in [{section_name}]")
                    continue
                try:
                    setattr(section, key, _parse(raw, getattr(defaults, section_name), key))
                except ValueError as e:
                    errors.append(f"{where}: [{section_name}] {key}: {e}")
        if errors:
            raise ValueError("Configuration errors:\n  " + "\n  ".join(errors))
        return config

    @classmethod
    def load(cls, path: str) -> 'RunConfig':
        with open(path) as fh:
            config = cls.from_text(fh.read())
        logger.debug("Loaded configuration from %s", path)
        return config


def _format(value: object) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ', '.join(_format(v) for v in value)
    return str(value)


def _parse(raw: str, defaults: object, key: str) -> object:
    """Convert raw text using the type of the section's default (None-able keys listed below)"""
    raw = raw.strip()
    default = getattr(defaults, key)
    optional = key in _OPTIONAL.get(type(defaults).__name__, ())
    if optional and raw == '':
        return None
    if isinstance(default, bool):
        if raw.lower() in ('true', 'yes', 'on', '1'):
            return True
        if raw.lower() in ('false', 'no', 'off', '0'):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        item = type(default[0]) if default else float
        return tuple(item(part.strip()) for part in raw.split(',') if part.strip())
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float) or optional:
        kind = int if key in _OPTIONAL_INT else float
        return kind(raw)
    return raw


_OPTIONAL = {
    'ToricSection': ('p_heat',),
    'GaugeSection': ('constraint_sweeps',),
    'RydbergSection': ('c6', 'tau'),
}
_OPTIONAL_INT = ('constraint_sweeps',)


def _line_numbers(text: str) -> Dict[Tuple[str, Optional[str]], int]:
    """(section, key) -> 1-based line number, for error messages"""
    out: Dict[Tuple[str, Optional[str]], int] = {}
    section = None
    for num, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith('[') and stripped.endswith(']'):
            section = stripped[1:-1].strip()
            out[(section, None)] = num
        elif section is not None and '=' in stripped and not stripped.startswith(('#', ';')):
            out[(section, stripped.split('=', 1)[0].strip())] = num
    return out
