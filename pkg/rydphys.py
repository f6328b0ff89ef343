"""
Rydberg Gate Timing and Energy Scales
Closed-form estimates for the mesoscopic Rydberg gate and the toolbox energy scales

Features:
- Raman-limited gate time T_gate = 16 pi Delta / (3 Omega_p^2)
- Blockade radius r = (4 Delta C6 / Omega_c^2)^(1/6) and its inversion for C6
- Coupling energy E = hbar phi / tau and damping rate kappa = theta^2 / tau
- Stroboscopic step time from sublattice count, gates per sublattice and overhead
- Parameter report for the command line

All frequencies are angular (rad/s); C6 is in rad/s * m^6.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.constants import hbar

logger = logging.getLogger(__name__)

DEFAULT_OVERHEAD = 1.2


def _require_positive(**values: float):
    for name, value in values.items():
        if value is None or not np.isfinite(value) or value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")


def gate_time(delta: float, omega_p: float) -> float:
    """Seconds; Delta may be 0 (instantaneous limit)"""
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    _require_positive(omega_p=omega_p)
    return 16 * np.pi * delta / (3 * omega_p ** 2)


def blockade_radius(delta: float, omega_c: float, c6: float) -> float:
    """Distance at which 4 Delta C6 / (Omega_c^2 r^6) = 1 (meters when C6 is in rad/s m^6)"""
    _require_positive(delta=delta, omega_c=omega_c, c6=c6)
    return (4 * delta * c6 / omega_c ** 2) ** (1 / 6)


def c6_for_radius(radius: float, delta: float, omega_c: float) -> float:
    _require_positive(radius=radius, delta=delta, omega_c=omega_c)
    return radius ** 6 * omega_c ** 2 / (4 * delta)


@dataclass(frozen=True)
class EnergyScales:
    energy_joule: float
    energy_rad_per_s: float
    kappa_per_s: float

    def as_dict(self) -> Dict[str, float]:
        return {
            'E_J': self.energy_joule,
            'E_over_hbar_rad_s': self.energy_rad_per_s,
            'kappa_1_s': self.kappa_per_s,
        }


def energy_scales(phi: float, theta: float, tau: float) -> EnergyScales:
    """E = hbar phi / tau, kappa = theta^2 / tau"""
    _require_positive(tau=tau)
    return EnergyScales(hbar * phi / tau, phi / tau, theta ** 2 / tau)


def sweep_time(z: int, per_sublattice_gate_count: int, t_gate: float,
               overhead: float = DEFAULT_OVERHEAD) -> float:
    """tau = z * gates per sublattice * T_gate * overhead (single-qubit pulses)"""
    _require_positive(z=z, per_sublattice_gate_count=per_sublattice_gate_count,
                      t_gate=t_gate, overhead=overhead)
    return z * per_sublattice_gate_count * t_gate * overhead


@dataclass
class RydbergParams:
    """Experimental knobs; C6 has no default and must be supplied for the radius"""
    omega_p: float = 2 * np.pi * 100e6
    omega_c: float = 2 * np.pi * 100e6
    delta: float = 2 * np.pi * 1.2e9
    c6: Optional[float] = None
    tau: Optional[float] = None
    z: int = 4
    gates_per_sublattice: int = 2
    overhead: float = DEFAULT_OVERHEAD

    def __post_init__(self):
        _require_positive(omega_p=self.omega_p, omega_c=self.omega_c, delta=self.delta,
                          z=self.z, gates_per_sublattice=self.gates_per_sublattice,
                          overhead=self.overhead)
        if self.c6 is not None:
            _require_positive(c6=self.c6)
        if self.tau is not None:
            _require_positive(tau=self.tau)


def parameter_report(params: RydbergParams, phi: float = 1.0,
                     theta: float = np.pi / 2) -> Dict[str, object]:
    """Gate time, blockade radius (when C6 is known), step time and energy scales"""
    t_gate = gate_time(params.delta, params.omega_p)
    tau_estimate = sweep_time(params.z, params.gates_per_sublattice, t_gate, params.overhead)
    tau = params.tau if params.tau is not None else tau_estimate

    report: Dict[str, object] = {
        'inputs': {
            'omega_p_rad_s': params.omega_p,
            'omega_c_rad_s': params.omega_c,
            'delta_rad_s': params.delta,
            'c6_rad_s_m6': params.c6,
            'z': params.z,
            'gates_per_sublattice': params.gates_per_sublattice,
            'overhead': params.overhead,
        },
        'gate_time_s': t_gate,
        'sweep_time_estimate_s': tau_estimate,
        'tau_s': tau,
        'energy_scales': {'phi': phi, 'theta': theta, **energy_scales(phi, theta, tau).as_dict()},
    }
    if params.c6 is None:
        report['blockade_radius_m'] = None
        report['blockade_radius_note'] = "C6 not given; pass --c6 to compute the blockade radius"
    else:
        report['blockade_radius_m'] = blockade_radius(params.delta, params.omega_c, params.c6)
    logger.debug("Parameter report: %s", report)
    return report
