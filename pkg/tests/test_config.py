import math
import warnings

import pytest

from mmpflow.config import ConfigError, emit_config, parse_config

from conftest import CONFIGS, SMALL_CONFIG


def edit(text, section, key, value):
    out, current = [], None
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("["):
            current = s[1:-1]
        elif current == section and s.split("=")[0].strip() == key:
            line = f"{key} = {value}" if value is not None else ""
        out.append(line)
    return "\n".join(out)


def test_round_trip(small_config):
    again = parse_config(emit_config(small_config))
    assert again == small_config
    assert emit_config(again) == emit_config(small_config)


@pytest.mark.parametrize("name", ["audit.ini", "stability.ini", "decay.ini"])
def test_shipped_configs_round_trip(name):
    cfg = parse_config((CONFIGS / name).read_text())
    assert parse_config(emit_config(cfg)) == cfg


def test_pi_lengths(small_config):
    assert small_config.grid.l1 == 2 * math.pi
    cfg = parse_config(edit(SMALL_CONFIG, "grid", "l1", "pi"))
    assert cfg.grid.l1 == math.pi
    cfg = parse_config(edit(SMALL_CONFIG, "grid", "l1", "3.5"))
    assert cfg.grid.l1 == 3.5


def test_defaults(small_config):
    assert small_config.sigma == 0.8
    assert small_config.time.cfl_safety == 0.5
    assert small_config.init.horizontal_mean_free is False
    assert small_config.init.k_vertical is None


def test_sigma_out_of_range():
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL_CONFIG + "\n[diagnostics]\nsigma = 1.5\n")
    assert info.value.key == "diagnostics.sigma"
    assert "sigma" in str(info.value)


def test_sigma_outside_window_warns():
    with pytest.warns(UserWarning, match="sigma"):
        cfg = parse_config(SMALL_CONFIG + "\n[diagnostics]\nsigma = 0.6\n")
    assert cfg.sigma == 0.6
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_config(SMALL_CONFIG + "\n[diagnostics]\nsigma = 0.9\n")


def test_empty_text_lists_required_keys():
    with pytest.raises(ConfigError) as info:
        parse_config("")
    msg = str(info.value)
    for key in ("grid.n1", "params.mu", "init.seed", "time.t_end", "output.series"):
        assert key in msg
    assert "diagnostics.sigma" not in msg


def test_missing_single_key():
    with pytest.raises(ConfigError) as info:
        parse_config(edit(SMALL_CONFIG, "params", "chi", None))
    assert info.value.key == "params.chi"


def test_unknown_key_named():
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL_CONFIG.replace("[params]", "[params]\nviscosity = 1"))
    assert info.value.key == "params.viscosity"


def test_unknown_section_named():
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL_CONFIG + "\n[extras]\na = 1\n")
    assert info.value.key == "extras"


def test_keys_are_case_sensitive():
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL_CONFIG.replace("eps_B", "eps_b"))
    assert "eps_b" in str(info.value)


@pytest.mark.parametrize(
    "section, key, value",
    [("grid", "n1", "sixteen"), ("params", "mu", "fast"), ("init", "horizontal_mean_free", "maybe")],
)
def test_type_mismatch_named(section, key, value):
    text = SMALL_CONFIG
    if key == "horizontal_mean_free":
        text = text.replace("eps_w = 0.05", f"eps_w = 0.05\n{key} = {value}")
    else:
        text = edit(text, section, key, value)
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == f"{section}.{key}"


@pytest.mark.parametrize(
    "section, key, value",
    [
        ("grid", "n1", "15"),
        ("params", "mu", "-1"),
        ("params", "chi", "0"),
        ("init", "eps_u", "-0.1"),
        ("time", "dt_max", "0"),
        ("time", "t_end", "-1"),
        ("time", "sample_interval", "0"),
    ],
)
def test_range_violation_named(section, key, value):
    with pytest.raises(ConfigError) as info:
        parse_config(edit(SMALL_CONFIG, section, key, value))
    assert info.value.key == f"{section}.{key}"


def test_degenerate_override():
    text = edit(SMALL_CONFIG, "params", "chi", "0").replace("chi = 0", "chi = 0\nallow_degenerate = true")
    cfg = parse_config(text)
    assert cfg.params.chi == 0 and cfg.params.allow_degenerate


def test_malformed_text():
    with pytest.raises(ConfigError):
        parse_config("no section header\n")
