import pytest
import yaml

from phfl.config import config_to_dict, dump_config, load_config, parse_config
from phfl.errors import ConfigError, IoError
from conftest import small_raw


def test_round_trip(tmp_path):
    cfg = parse_config(small_raw(profiles={"overrides": [{"ue": 3, "p_max_dbm": 30.0}]}))
    path = tmp_path / "c.yaml"
    dump_config(cfg, path)
    again = load_config(path)
    assert again == cfg
    assert config_to_dict(again) == config_to_dict(cfg)


def test_example_config_loads():
    cfg = load_config("configs/example.yaml")
    assert parse_config(config_to_dict(cfg)) == cfg


def test_dbm_conversion():
    cfg = parse_config(small_raw(profiles={"p_max_dbm": [30.0, 30.0]},
                                 channel={"noise_psd_dbm_per_hz": -174.0}))
    assert cfg.profiles.p_max == pytest.approx((1.0, 1.0), rel=1e-12)
    assert cfg.channel.noise_psd == pytest.approx(10 ** (-20.4), rel=1e-12)


def test_missing_deadline_names_field():
    raw = small_raw()
    del raw["optimizer"]["t_th_s"]
    with pytest.raises(ConfigError, match="optimizer.t_th_s"):
        parse_config(raw)


@pytest.mark.parametrize("raw, field", [
    ({"schedule": {"kappa9": 1}}, "schedule.kappa9"),
    ({"bogus": 1}, "bogus"),
    ({"learner": {"eta": -1.0}}, "learner.eta"),
    ({"optimizer": {"delta_th": 1.5}}, "optimizer.delta_th"),
    ({"baseline": "fedprox"}, "baseline"),
    ({"channel": {"pathloss_exponent": 1.5}}, "channel.pathloss_exponent"),
    ({"profiles": {"overrides": [{"p_max_dbm": 20.0}]}}, "overrides[0].ue"),
])
def test_invalid_values_name_the_field(raw, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(small_raw(**raw))


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(IoError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("a: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_scalar_counts_expand():
    cfg = parse_config(small_raw())
    t = cfg.topology
    assert t.sbs_per_mbs == [2, 2]
    assert t.ues_per_vc == [[[2, 2], [2, 2]], [[2, 2], [2, 2]]]
    assert yaml.safe_load(yaml.safe_dump(config_to_dict(cfg)))["topology"]["mbs"] == 2
