import pytest

from msnn.config import ConfigError, dump_config, load_config


def test_presets_size_the_networks():
    paper = load_config("type2", preset="paper")
    desk = load_config("type2", preset="desk")
    assert (paper.network.n_input, paper.network.n_exc, paper.network.n_inh) == (1024, 320, 320)
    assert (desk.network.n_input, desk.network.n_exc) == (256, 64)
    t1 = load_config("type1")
    assert t1.preset == "paper" and t1.network.n_exc == 1024 and t1.network.dt == 2e-9


def test_precedence_file_then_set_then_flags(tmp_path):
    f = tmp_path / "run.ini"
    f.write_text("[experiment]\nseed = 4\nepochs = 3\n[network]\ndt = 1e-9\n")
    cfg = load_config("type1", f)
    assert (cfg.experiment.seed, cfg.experiment.epochs, cfg.network.dt) == (4, 3, 1e-9)
    cfg = load_config("type1", f, ["experiment.epochs=7", "stdp.tau_pre=2e-6"], seed=9, dt=3e-9)
    assert (cfg.experiment.seed, cfg.experiment.epochs, cfg.network.dt) == (9, 7, 3e-9)
    assert cfg.stdp.tau_pre == 2e-6


def test_preset_named_in_file(tmp_path):
    f = tmp_path / "run.ini"
    f.write_text("[experiment]\npreset = desk\n")
    assert load_config("type1", f).network.n_exc == 256


def test_memristor_keys_are_per_device():
    cfg = load_config("neuron", overrides=["neuron.r_on2=2000", "neuron.m2_drive=rest"])
    assert cfg.mif.m2.r_on == 2000 and cfg.mif.m1.r_on == 1000
    assert cfg.mif.m2_drive == "rest"


@pytest.mark.parametrize("override, match", [
    ("stdp.nope=1", "unknown key"),
    ("bogus.dt=1", "unknown section"),
    ("network.dt=fast", "cannot parse"),
    ("network_dt=1", "section.key=value"),
    ("network.scheme=rk4", "scheme"),
])
def test_bad_overrides(override, match):
    with pytest.raises(ConfigError, match=match):
        load_config("type1", overrides=[override])


def test_bad_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("type1", tmp_path / "missing.ini")
    f = tmp_path / "bad.ini"
    f.write_text("no section header\n")
    with pytest.raises(ConfigError, match="malformed"):
        load_config("type1", f)
    with pytest.raises(ConfigError, match="preset"):
        load_config("type1", preset="huge")


def test_resolved_dump_reloads_identically(tmp_path):
    cfg = load_config("type2", preset="desk", seed=11, overrides=["stdp.u_pre=3.3e-9"])
    dump_config(cfg, tmp_path / "config_resolved")
    again = load_config("type2", tmp_path / "config_resolved")
    assert again == cfg
