import pytest

from mdcvanet.config import OUTPUT_DIR_ENV, PRESETS, load_config
from mdcvanet.errors import ConfigError
from mdcvanet.trace import Description

from conftest import light_frames


def write_ini(tmp_path, body, trace="t.trace"):
    path = tmp_path / "c.ini"
    path.write_text(f"[scenario]\ntrace = {trace}\n" + body)
    return path


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name, monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    cfg = load_config(name)
    assert cfg.trace_path.is_file()
    assert cfg.queue_capacity == 50
    assert cfg.mapper_config.qth_low == 20 and cfg.mapper_config.qth_high == 45
    assert cfg.mapper_config.p_descrip == {Description.D1: 0.0, Description.D2: 0.6}


def test_scenario2_has_background():
    cfg = load_config("scenario2")
    assert sorted(b.target_ac for b in cfg.background) == [0, 1, 3]
    assert not load_config("scenario1").background


def test_relative_trace_and_fields(tmp_path, write_frames):
    write_frames(light_frames(10))
    cfg = load_config(write_ini(tmp_path, "seed = 9\n[mac]\nphy_rate_mbps = 12\nparameter_set = CCH\n"))
    assert cfg.trace_path == tmp_path / "t.trace"
    assert cfg.seed == 9 and cfg.phy_rate == 12e6 and cfg.parameter_set == "CCH"


def test_env_overrides_output(tmp_path, write_frames, monkeypatch):
    write_frames(light_frames(10))
    path = write_ini(tmp_path, "output_dir = from_file\n")
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert load_config(path).output_dir == tmp_path / "env"
    monkeypatch.delenv(OUTPUT_DIR_ENV)
    assert str(load_config(path).output_dir) == "from_file"


@pytest.mark.parametrize(
    "body, field",
    [
        ("[mapper]\nmapper = red\n", "mapper.mapper"),
        ("[mac]\nphy_rate_mbps = fast\n", "mac.phy_rate_mbps"),
        ("seed = -1\n", "scenario.seed"),
        ("[video]\nmtu = 0\n", "video.mtu"),
    ],
)
def test_errors_name_field(tmp_path, write_frames, body, field):
    write_frames(light_frames(10))
    with pytest.raises(ConfigError) as info:
        load_config(write_ini(tmp_path, body))
    assert info.value.field == field
    assert str(tmp_path / "c.ini") in str(info.value)


def test_missing_trace(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write_ini(tmp_path, "", trace="missing.trace"))
    assert info.value.field == "scenario.trace"


def test_invalid_thresholds(tmp_path, write_frames):
    write_frames(light_frames(10))
    with pytest.raises(ConfigError):
        load_config(write_ini(tmp_path, "[mapper]\nqth_low = 45\nqth_high = 20\n"))


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_config("scenario9")
