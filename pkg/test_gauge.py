import numpy as np
import pytest
from scipy.linalg import eigh

from gauge import (
    GaugeModel, adiabatic_ramp, build_model_spec, charge_density,
    constraint_jump_step, constraint_terms, cool_gauge, covering_sectors,
    enumerate_dimer_coverings, energy, exact_ground_state, hamiltonian_sparse,
    initial_gauge_state, ring_exchange_terms, rk_jump_step, rk_state, rk_terms,
)
from pauli import operator_sums_commute, to_matrix, to_sparse
from statevec import StateVector, trajectory_rng


def test_constraint_terms_are_squared_charge():
    matrix = to_matrix(constraint_terms(range(6)), 6)
    labels = np.arange(64)
    charge = sum(1 - 2 * ((labels >> s) & 1) for s in range(6))
    np.testing.assert_allclose(matrix, np.diag(charge ** 2), atol=1e-12)
    with pytest.raises(ValueError):
        constraint_terms(range(5))


def test_rk_terms_square_the_ring_exchange():
    b = to_matrix(ring_exchange_terms((0, 1, 2, 3)), 4)
    np.testing.assert_allclose(b @ b, to_matrix(rk_terms((0, 1, 2, 3)), 4), atol=1e-12)
    assert np.count_nonzero(np.diag(b @ b).real > 0.5) == 2


def test_coverings_are_closed_under_flips(cubic221):
    coverings = enumerate_dimer_coverings(cubic221)
    assert coverings
    known = set(coverings)
    for covering in coverings:
        assert covering.is_valid(cubic221)
        assert len(covering.dimers(cubic221)) == 6
        for p in covering.flippable(cubic221):
            assert covering.flipped(cubic221, p) in known


def test_sectors_partition_the_coverings(cubic221):
    coverings = enumerate_dimer_coverings(cubic221)
    sectors = covering_sectors(cubic221, coverings)
    flat = [c for sector in sectors for c in sector]
    assert sorted(flat) == coverings
    assert [len(s) for s in sectors] == sorted((len(s) for s in sectors), reverse=True)


def test_ring_exchange_preserves_the_constraint(cubic221):
    for plaquette in cubic221.plaquettes:
        for octahedron in cubic221.octahedra:
            assert operator_sums_commute(ring_exchange_terms(plaquette), constraint_terms(octahedron),
                                         n=cubic221.link_count)


def test_charge_density(cubic221):
    n = cubic221.link_count
    assert charge_density(StateVector.basis(n, (1 << n) - 1), cubic221) == 1.0
    covering = enumerate_dimer_coverings(cubic221)[0]
    assert charge_density(StateVector.basis(n, covering.label), cubic221) == 0.0


def test_rk_state_is_dark(cubic221):
    n = cubic221.link_count
    sector = covering_sectors(cubic221)[0]
    psi = rk_state(cubic221, sector[0]).amplitudes
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    for plaquette in cubic221.plaquettes:
        b_psi = to_sparse(ring_exchange_terms(plaquette), n) @ psi
        bb_psi = to_sparse(rk_terms(plaquette), n) @ psi
        np.testing.assert_allclose(b_psi, bb_psi, atol=1e-10)


def test_rk_state_is_ground_state_at_rk_point(cubic221):
    model = GaugeModel(cubic221, u=1.0, j=1.0, v=1.0)
    n = cubic221.link_count
    sector = covering_sectors(cubic221)[0]
    h = hamiltonian_sparse(model)
    rk_energy = energy(rk_state(cubic221, sector[0]), h, n)
    ground, psi = exact_ground_state(model, sector=sector)
    assert rk_energy == pytest.approx(ground, abs=1e-9)
    residual = h @ psi.amplitudes - ground * psi.amplitudes
    assert np.linalg.norm(residual) < 1e-8
    for covering in sector:
        assert rk_energy <= energy(StateVector.basis(n, covering.label), h, n) + 1e-12


def test_exact_ground_state_matches_dense_block(cubic221):
    model = GaugeModel(cubic221, v=0.3)
    sector = covering_sectors(cubic221)[0]
    idx = [c.label for c in sector]
    block = hamiltonian_sparse(model)[idx][:, idx].toarray()
    assert exact_ground_state(model, sector=sector)[0] == pytest.approx(eigh(block, eigvals_only=True)[0])


class TestJumpSteps:
    def test_neutral_octahedron_never_jumps(self):
        state = StateVector.basis(7, 0b000111)
        outcome = constraint_jump_step(state, 6, range(6), np.pi / 2, trajectory_rng(0, 0))
        assert outcome == 0
        assert abs(state.amplitudes[0b000111]) == pytest.approx(1.0)

    def test_charged_octahedron_flips_scheduled_spin(self):
        state = StateVector.basis(7, 0)
        constraint_jump_step(state, 6, range(6), np.pi / 2, trajectory_rng(0, 1), sweep=2)
        assert abs(state.amplitudes[0b000100]) == pytest.approx(1.0)

    def test_unflippable_plaquette_is_invariant(self):
        state = StateVector.basis(6, 0b0011)
        outcome = rk_jump_step(state, 4, (0, 1, 2, 3), np.pi / 2, trajectory_rng(0, 2))
        assert outcome == 0
        assert abs(state.amplitudes[0b0011]) == pytest.approx(1.0)

    def test_symmetric_flippable_pair_is_invariant(self):
        vector = np.zeros(64, dtype=complex)
        vector[[0b0101, 0b1010]] = 1 / np.sqrt(2)
        state = StateVector(6, vector)
        outcome = rk_jump_step(state, 4, (0, 1, 2, 3), np.pi / 2, trajectory_rng(0, 3))
        assert outcome == 0
        assert abs(np.vdot(vector, state.amplitudes)) == pytest.approx(1.0)


def test_model_spec_stages(cubic221):
    model = GaugeModel(cubic221)
    both = build_model_spec(model, stage='both', coherent=False)
    assert both.n_ancilla == 2
    assert len(both.jumps) == 16
    assert all(j.enabled for j in both.jumps)
    constraint_only = build_model_spec(model, stage='constraint', coherent=False)
    assert [j.enabled for j in constraint_only.jumps] == [True] * 4 + [False] * 12
    coherent = build_model_spec(model, stage=None)
    assert coherent.jumps == []
    assert coherent.n_ancilla == 1
    assert all(not t.string.is_identity() for t in coherent.terms)
    with pytest.raises(ValueError):
        build_model_spec(model, stage='neither')


def test_initial_states(cubic221):
    n = cubic221.link_count
    assert initial_gauge_state(cubic221, 'all_down').amplitudes[(1 << n) - 1] == 1.0
    state = initial_gauge_state(cubic221, 'covering')
    assert charge_density(state, cubic221) == 0.0
    with pytest.raises(ValueError):
        initial_gauge_state(cubic221, 'random')


def test_ramp_schedule(cubic221):
    model = GaugeModel(cubic221, j=2.0)
    assert model.ramp_v(0.0) == 2.0
    assert model.ramp_v(5.0) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        adiabatic_ramp(model, 0.0)


def test_ramp_starts_in_ground_state(cubic221):
    result = adiabatic_ramp(GaugeModel(cubic221), 0.2, steps=3)
    assert len(result.steps) == 4
    assert result.errors[0] < 1e-9
    assert result.v_over_j[0] == 1.0
    assert result.times[-1] == pytest.approx(0.6)
    assert list(result.rows())[0][0] == 0


@pytest.mark.slow
def test_covering_start_keeps_charge_zero(cubic221):
    result = cool_gauge(GaugeModel(cubic221), sweeps=3, trajectories=2, master_seed=5,
                        initial='covering')
    np.testing.assert_allclose(result.charge, 0.0, atol=1e-12)
    assert result.rk_fidelity.shape == (2, 4)


@pytest.mark.slow
def test_cooling_from_all_down_removes_charges(cubic221):
    result = cool_gauge(GaugeModel(cubic221), sweeps=12, trajectories=4, master_seed=6)
    assert result.mean('charge')[-1] < result.mean('charge')[0]
    assert result.mean('charge')[0] == 1.0


@pytest.mark.slow
def test_smaller_ramp_steps_track_the_ground_state_better(cubic221):
    model = GaugeModel(cubic221)
    errors = [adiabatic_ramp(model, scale).final_error for scale in (0.2, 0.1)]
    assert errors[1] < errors[0]
