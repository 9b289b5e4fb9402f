import pytest

from ssflab.config import ConfigError, parse_config

GOOD = """
[domain]
dimension = 1
side = 8.0
spacing = 0.0625

[perturbation]
kind = "square_bump"
amplitude = 10.0
support_radius = 0.5
center = [0.0]
"""


def test_minimal_config_parses():
    cfg = parse_config(GOOD)
    assert cfg.domain.dimension == 1
    assert cfg.domain.spacing == 0.0625
    assert cfg.background.kind == "zero"
    assert cfg.perturbation.amplitude == 10.0
    assert cfg.mc.n_paths == 10000  # defaults fill in
    assert cfg.text == GOOD


def test_center_defaults_to_the_origin():
    cfg = parse_config(GOOD.replace("center = [0.0]\n", ""))
    assert cfg.perturbation.center == (0.0,)


@pytest.mark.parametrize(
    "mangle",
    [
        lambda s: s.replace("[domain]", "[domian]"),
        lambda s: s.replace("side = 8.0", "side = -8.0"),
        lambda s: s.replace("dimension = 1", "dimension = 3"),
        lambda s: s.replace("kind = \"square_bump\"", "kind = \"quartic\""),
        lambda s: s.replace("amplitude = 10.0", "amplitude = \"big\""),
        lambda s: s.replace("center = [0.0]", "center = [0.0, 0.0]"),
        lambda s: s.replace("[perturbation]", "[perturbation]\nwobble = 2"),
        lambda s: s + "\n[mc]\nn_paths = 0\n",
        lambda s: s + "\n[mc]\nmaster_seed = -1\n",
        lambda s: s + "\n[tolerances]\nfoo = \"tight\"\n",
        lambda s: s + "\nnot toml ][",
    ],
)
def test_defective_files_raise_config_error(mangle):
    with pytest.raises(ConfigError):
        parse_config(mangle(GOOD))


def test_missing_perturbation_table_rejected():
    head, _, _ = GOOD.partition("[perturbation]")
    with pytest.raises(ConfigError, match="perturbation"):
        parse_config(head)


def test_experiment_lists_coerce_to_float_tuples():
    cfg = parse_config(GOOD + "\n[experiment]\nsides = [6, 8.0]\nweight_lo = 0.0\n")
    assert cfg.experiment["sides"] == (6.0, 8.0)
    assert cfg.experiment["weight_lo"] == 0.0


def test_negative_background_amplitude_is_admitted():
    # attractive backgrounds are allowed; only perturbations must be >= 0
    text = GOOD + "\n[background]\nkind = \"cosine\"\namplitude = -2.0\nperiod = 1.0\n"
    cfg = parse_config(text)
    assert cfg.background.amplitude == -2.0


def test_mc_section_round_trips():
    cfg = parse_config(GOOD + "\n[mc]\nt = 0.5\nn_paths = 123\nmaster_seed = 42\n")
    assert cfg.mc.t == 0.5
    assert cfg.mc.n_paths == 123
    assert cfg.mc.master_seed == 42
    assert cfg.mc.n_steps == 128
