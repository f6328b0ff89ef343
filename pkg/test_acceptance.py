"""End-to-end behaviour of the three experiments and the oracle suite"""

import numpy as np
import pytest

from cli import main
from gates import ErrorModel
from gauge import GaugeModel, adiabatic_ramp, cool_gauge
from lattice import build_toric
from results import file_sha256
from toric import ToricModel, cool_toric
from verification import (
    check_decompositions, check_error_expansion, check_gate_identity, check_reduction,
    check_rydberg_numbers,
)


def _all_passed(outcome):
    checks = outcome if isinstance(outcome, list) else [outcome]
    failed = [c.name for c in checks if not c.passed]
    assert not failed, failed


def test_gate_identity_for_random_phases(rng):
    _all_passed(check_gate_identity(rng))


def test_dissipative_step_reduces_to_lindblad(rng):
    _all_passed(check_reduction(rng))


def test_imperfect_gate_expansion():
    _all_passed(check_error_expansion())


def test_gauge_decompositions():
    _all_passed(check_decompositions())


def test_rydberg_timing():
    _all_passed(check_rydberg_numbers())


@pytest.mark.slow
def test_toric_cooling_empties_small_lattice():
    model = ToricModel(build_toric(2), schedule='random')
    result = cool_toric(model, 40, 1000, 'dense', master_seed=11, workers=2)
    assert result.mean[-1] < 0.01
    assert result.mean[-1] <= result.mean[0]


@pytest.mark.slow
def test_gate_errors_leave_stationary_plateau():
    model = ToricModel(build_toric(2), error=ErrorModel(q_norm=0.1, enabled=True),
                       schedule='random')
    result = cool_toric(model, 60, 400, 'dense', master_seed=12, workers=2)
    level, err = result.plateau()
    assert level > 5 * err > 0
    assert result.stationarity_pvalue() > 0.01
    assert np.isfinite(result.effective_temperature())


@pytest.mark.slow
def test_gauge_cooling_removes_charge(cubic221):
    result = cool_gauge(GaugeModel(cubic221), sweeps=40, trajectories=10, master_seed=13)
    assert result.mean('charge')[-1] < 0.01


@pytest.mark.slow
def test_gauge_cooling_reaches_rk_state(cubic221):
    result = cool_gauge(GaugeModel(cubic221), sweeps=60, trajectories=10, master_seed=14,
                        initial='covering')
    assert result.mean('rk_fidelity')[-1] >= 0.99


@pytest.mark.slow
def test_ramp_error_shrinks_with_step(cubic221):
    results = [adiabatic_ramp(GaugeModel(cubic221), scale) for scale in (0.4, 0.2, 0.1)]
    assert all(r.errors[0] < 1e-9 for r in results)
    final = [r.final_error for r in results]
    assert final[0] > final[1] > final[2]


@pytest.mark.slow
def test_toric_cli_output_is_worker_independent(tmp_path):
    hashes = []
    for workers in (1, 3):
        out = tmp_path / str(workers)
        argv = ['--seed', '21', '--workers', str(workers), '--out', str(out), 'toric-cool',
                '--L', '2', '--engine', 'dense', '--sweeps', '8', '--trajectories', '24',
                '--traces', '4']
        assert main(argv) == 0
        hashes.append([file_sha256(str(out / "toric_cool" / name))
                       for name in ("mean.csv", "traces.csv")])
    assert hashes[0] == hashes[1]
