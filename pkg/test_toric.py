import numpy as np
import pytest

from gates import ErrorModel
from lattice import build_toric
from statevec import StateVector, expectation
from toric import (
    CALIBRATED_P_HEAT, ESTIMATED_P_HEAT, HEATING_CALIBRATION, AnyonConfig, ToricModel,
    anyon_density, build_model_spec, calibrate_heating, cool_toric, effective_temperature,
    heating_probability_estimate, init_all_down,
    sample_initial_anyons, sampled_anyons, sector_densities, toric_jump_specs, walker_sweep,
)


class TestEffectiveTemperature:
    def test_reference_values(self):
        assert effective_temperature(np.exp(-1)) == pytest.approx(1.0)
        assert effective_temperature(0.1) == pytest.approx(0.4343, abs=1e-4)
        assert effective_temperature(0.1, e0=2.0) == pytest.approx(0.8686, abs=1e-4)

    @pytest.mark.parametrize("n", [0.0, 1.0, -0.2])
    def test_out_of_range(self, n):
        with pytest.raises(ValueError):
            effective_temperature(n)


def test_heating_probability_resolution():
    assert ESTIMATED_P_HEAT == pytest.approx(np.sin(np.pi / 20) ** 2)
    model = ToricModel(build_toric(2), error=ErrorModel(q_norm=0.1, enabled=True))
    assert model.heating_probability() == CALIBRATED_P_HEAT
    assert model.describe()['p_heat'] == CALIBRATED_P_HEAT
    stronger = ToricModel(build_toric(2), error=ErrorModel(q_norm=0.2, enabled=True))
    assert stronger.heating_probability() == pytest.approx(heating_probability_estimate(np.pi / 2, 0.2))
    assert ToricModel(build_toric(2)).heating_probability() == 0.0
    assert ToricModel(build_toric(2), p_heat=0.3).heating_probability() == 0.3
    with pytest.raises(ValueError):
        ToricModel(build_toric(2), p_heat=1.5)


def test_anyon_config_parity(toric3):
    with pytest.raises(ValueError):
        AnyonConfig(np.eye(1, 9, 0, dtype=bool)[0], np.zeros(9, dtype=bool))
    config = AnyonConfig.empty(toric3)
    assert config.count() == 0
    assert config.density() == 0.0


def test_anyon_density(toric2, toric3):
    plaquettes = np.zeros(9, dtype=bool)
    plaquettes[[0, 1]] = True
    config = AnyonConfig(plaquettes, np.zeros(9, dtype=bool))
    assert anyon_density(config, toric3) == pytest.approx(2 / 18)
    # one link flipped up out of all-down marks its two vertices
    state = StateVector.basis(8, 0b11111110)
    assert anyon_density(state, toric2) == pytest.approx(0.25)


def test_all_down_state_has_clean_vertices(toric2):
    state = init_all_down(toric2)
    assert state.n == toric2.link_count + 1
    plaquette, vertex = sector_densities(state, toric2)
    assert vertex == 0.0
    # plaquette expectations vanish, so the thresholded count sees no anyon
    assert plaquette == 0.0


def test_sampled_anyons_collapse_the_state(toric2, rng):
    control = toric2.link_count
    state = init_all_down(toric2)
    config = sampled_anyons(state, toric2, control, rng)
    assert not config.vertices.any()
    assert config.plaquettes.sum() % 2 == 0
    # all-down is no plaquette eigenstate; afterwards every stabilizer is sharp
    for p in range(len(toric2.plaquettes)):
        value = -1.0 if config.plaquettes[p] else 1.0
        assert expectation(state, toric2.plaquette_stabilizer(p)) == pytest.approx(value, abs=1e-12)
    for s in range(len(toric2.vertices)):
        assert expectation(state, toric2.vertex_stabilizer(s)) == pytest.approx(1.0, abs=1e-12)
    assert state.prob_one(control) == pytest.approx(0.0, abs=1e-12)
    # a repeated readout of a collapsed state returns the same anyons
    again = sampled_anyons(state, toric2, control, rng)
    np.testing.assert_array_equal(again.plaquettes, config.plaquettes)
    np.testing.assert_array_equal(again.vertices, config.vertices)


def test_initial_anyons_are_even(toric3, rng):
    for _ in range(20):
        config = sample_initial_anyons(toric3, rng)
        assert config.plaquettes.sum() % 2 == 0
        assert not config.vertices.any()


class TestWalker:
    def test_pair_annihilates_across_shared_link(self, toric3, rng):
        link = toric3.plaquettes[0][0]
        other = toric3.neighbor_across('plaquette', 0, link)
        plaquettes = np.zeros(9, dtype=bool)
        plaquettes[[0, other]] = True
        config = AnyonConfig(plaquettes, np.zeros(9, dtype=bool))
        out = walker_sweep(config, toric3, rng, 0.0, sweep=0, order='schedule',
                           link_choice='round_robin')
        assert out.count() in (0, 2)
        assert config.count() == 2

    def test_cools_to_zero_without_heating(self, rng):
        lattice = build_toric(4)
        config = sample_initial_anyons(lattice, rng)
        for sweep in range(400):
            config = walker_sweep(config, lattice, rng, 0.0, sweep)
        assert config.count() == 0

    def test_heating_keeps_parity(self, toric3, rng):
        config = AnyonConfig.empty(toric3)
        for sweep in range(50):
            config = walker_sweep(config, toric3, rng, 0.2, sweep)
            assert config.plaquettes.sum() % 2 == 0
            assert config.vertices.sum() % 2 == 0

    def test_rejects_bad_arguments(self, toric3, rng):
        config = AnyonConfig.empty(toric3)
        with pytest.raises(ValueError):
            walker_sweep(config, toric3, rng, 1.5)
        with pytest.raises(ValueError):
            walker_sweep(config, toric3, rng, 0.1, order='spiral')


def test_toric_jump_specs(toric2):
    specs = toric_jump_specs(toric2, theta=0.4)
    assert len(specs) == 8
    assert [s.flip_letter for s in specs] == ["Z"] * 4 + ["X"] * 4
    assert specs[0].name == "c_p0"
    assert all(s.theta == 0.4 for s in specs)
    assert all(len(s.flip_sites) == 4 for s in specs)


def test_model_spec_layout(toric2):
    spec = build_model_spec(ToricModel(toric2, phi=0.1))
    assert spec.n_system == 8
    assert spec.total_qubits == 9
    assert len(spec.jumps) == 8
    assert len(spec.terms) == 8
    assert build_model_spec(ToricModel(toric2)).terms == []


def test_flip_spin_schedule_defaults_to_round_robin(toric2):
    spec = build_model_spec(ToricModel(toric2))
    assert {jump.schedule for jump in spec.jumps} == {'round_robin'}
    assert [spec.jumps[0].flip_site(s) for s in range(4)] == list(spec.jumps[0].flip_sites)
    spec = build_model_spec(ToricModel(toric2, schedule='random'))
    assert {jump.schedule for jump in spec.jumps} == {'random'}
    assert ToricModel(toric2).describe()['schedule'] == 'round_robin'


def test_dense_cooling_reaches_ground_state(toric2):
    model = ToricModel(toric2, schedule='random')
    result = cool_toric(model, sweeps=30, trajectories=20, engine='dense', master_seed=3)
    assert result.times[0] == 0.0
    assert len(result.times) == 31
    assert result.mean[0] > 0.1
    assert result.mean[-1] < 0.05
    _, vertex = result.sector_means()
    np.testing.assert_allclose(vertex, 0.0)


def test_walker_cooling_is_seed_deterministic(toric3):
    model = ToricModel(toric3, p_heat=0.05)
    a = cool_toric(model, 20, 30, 'walker', master_seed=9)
    b = cool_toric(model, 20, 30, 'walker', master_seed=9, workers=2)
    np.testing.assert_array_equal(a.densities, b.densities)
    c = cool_toric(model, 20, 30, 'walker', master_seed=10)
    assert not np.array_equal(a.densities, c.densities)


def test_walker_plateau_with_heating():
    model = ToricModel(build_toric(4), p_heat=0.05)
    result = cool_toric(model, 80, 40, 'walker', master_seed=1)
    level, err = result.plateau()
    assert 0 < level < 0.5
    assert err >= 0
    assert 0.0 <= result.stationarity_pvalue() <= 1.0
    assert result.effective_temperature() == pytest.approx(effective_temperature(level))


def test_cool_toric_argument_checks(toric2):
    with pytest.raises(ValueError):
        cool_toric(ToricModel(toric2), 10, 10, engine='quantum')
    with pytest.raises(ValueError):
        cool_toric(ToricModel(toric2), 0, 10)


def test_calibration_needs_errors(toric2):
    with pytest.raises(ValueError):
        calibrate_heating(ToricModel(toric2))


@pytest.mark.slow
def test_gate_errors_raise_the_plateau(toric2):
    clean = cool_toric(ToricModel(toric2, schedule='random'), 40, 100, 'dense', master_seed=4)
    noisy_model = ToricModel(toric2, error=ErrorModel(q_norm=0.1, enabled=True), schedule='random')
    noisy = cool_toric(noisy_model, 40, 100, 'dense', master_seed=4)
    assert noisy.plateau()[0] > clean.plateau()[0]


@pytest.mark.slow
def test_engines_agree_on_small_lattice(toric2):
    model = ToricModel(toric2, schedule='random')
    dense = cool_toric(model, 6, 200, 'dense', master_seed=7)
    walker = cool_toric(model, 6, 200, 'walker', master_seed=8)
    sigma = np.sqrt(dense.stderr ** 2 + walker.stderr ** 2)
    gap = np.abs(dense.mean - walker.mean)
    assert np.all(gap <= 3 * sigma + 1e-12)


@pytest.mark.slow
def test_recorded_heating_matches_dense_plateau():
    run = HEATING_CALIBRATION
    model = ToricModel(build_toric(run['L']), theta=run['theta'], schedule=run['schedule'],
                       error=ErrorModel(q_norm=run['q_norm'], enabled=True))
    assert model.heating_probability() == CALIBRATED_P_HEAT
    dense = cool_toric(model, run['sweeps'], run['trajectories'], 'dense', run['master_seed'], workers=2)
    walker = cool_toric(model, run['sweeps'], run['trajectories'], 'walker', run['master_seed'] + 1,
                        workers=2)
    (dense_level, dense_err), (walker_level, walker_err) = dense.plateau(), walker.plateau()
    assert abs(dense_level - walker_level) <= 3 * np.hypot(dense_err, walker_err)
