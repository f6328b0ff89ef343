import pytest

from run_config import WORKERS_ENV, RunConfig, RunSection, default_workers


def test_text_round_trip():
    config = RunConfig()
    config.toric.p_heat = 0.02
    config.gauge.dims = (2, 2, 2)
    config.ramp.phi_scales = (0.3, 0.15)
    again = RunConfig.from_text(config.to_text())
    assert again == config
    assert again.rydberg.c6 is None


def test_partial_text_keeps_defaults():
    config = RunConfig.from_text("[toric]\nL = 4\nerrors = yes\n")
    assert config.toric.L == 4
    assert config.toric.errors is True
    assert config.toric.engine == 'dense'
    assert config.toric.schedule == 'round_robin'
    assert RunConfig.from_text("[toric]\nschedule = random\n").toric.schedule == 'random'
    assert config.gauge.dims == (2, 2, 1)


def test_errors_carry_line_numbers():
    text = "[run]\nsweeps = many\nbogus = 1\n\n[extra]\nkey = 2\n"
    with pytest.raises(ValueError) as info:
        RunConfig.from_text(text)
    message = str(info.value)
    assert "Line 2: [run] sweeps" in message
    assert "Line 3: unknown key 'bogus'" in message
    assert "Line 5: unknown section [extra]" in message


def test_malformed_text():
    with pytest.raises(ValueError):
        RunConfig.from_text("no section header\n")


def test_validate():
    config = RunConfig()
    config.run.experiment = 'toric-heat'
    config.toric.L = 1
    with pytest.raises(ValueError) as info:
        config.validate()
    assert "[run] experiment" in str(info.value)
    assert "[toric] L" in str(info.value)
    assert RunConfig().validate().run.sweeps == 40


def test_save_and_load(tmp_path):
    config = RunConfig()
    config.run.master_seed = 17
    path = tmp_path / "run.ini"
    config.save(str(path))
    assert RunConfig.load(str(path)).run.master_seed == 17


def test_workers_from_environment(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert default_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert default_workers() == 3
    assert RunSection().workers == 3
    for bad in ("zero", "0"):
        monkeypatch.setenv(WORKERS_ENV, bad)
        with pytest.raises(ValueError):
            default_workers()


def test_as_dict_sections():
    data = RunConfig().as_dict()
    assert set(data) == {'run', 'toric', 'gauge', 'ramp', 'rydberg'}
    assert data['gauge']['dims'] == (2, 2, 1)
