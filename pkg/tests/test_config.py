import pytest
from hypothesis import given, settings, strategies as st

from longoil.config import (
    REGISTRY,
    SCENARIOS,
    echo_config,
    parse_config,
    parse_quantity,
    parse_text,
)
from longoil.errors import ConfigError


def test_empty_file_gives_defaults():
    cfg = parse_text("")
    assert cfg.scenario == "hom-locked"
    assert cfg["alice.linewidth"] == 5e6 and cfg["bob.linewidth"] == 5e6
    assert cfg["injection.power"] == 4e-6
    assert cfg["bob.power"] == 10e-3
    assert cfg["histogram.bin_width"] == 0.5e-9
    assert cfg["fiber.oil_length"] == 25.0 and cfg["fiber.bob_charlie_length"] == 50.0
    assert cfg["bs.pol_overlap"] == 0.98
    assert cfg.kappa_coeff() == pytest.approx(2.194e10, rel=1e-3)


def test_linewidth_with_unit():
    cfg = parse_text("linewidth = 5 MHz")
    assert cfg["alice.linewidth"] == 5.0e6
    assert parse_text("alice.linewidth = 2.5 MHz")["alice.linewidth"] == 2.5e6


def test_unknown_unit_names_key_and_line():
    with pytest.raises(ConfigError) as err:
        parse_text("# comment\nlinewidth = 5 parsecs")
    assert err.value.key == "linewidth"
    assert err.value.line == 2
    assert "parsecs" in str(err.value) and "MHz" in str(err.value)


def test_unit_free_physical_value_rejected():
    with pytest.raises(ConfigError, match="no unit"):
        parse_text("injection.power = 4e-6")


@pytest.mark.parametrize("text", ["bogus = 1", "scenario = teleport", "seed = 1.5", "bs.pol_overlap = 1.2",
                                  "no equals sign", "trials = 0", "seed = 1\nseed = 2",
                                  "sweep.nothing = 1, 2\nscenario = sweep", "sweep.seed = 1, 2"])
def test_invalid_inputs(text):
    with pytest.raises(ConfigError):
        parse_text(text)


@pytest.mark.parametrize("text,key,value", [
    ("injection.power = 4 uW", "injection.power", 4e-6),
    ("injection.power = 4 μW", "injection.power", 4e-6),
    ("bob.power = 10 mW", "bob.power", 10e-3),
    ("fiber.oil_length = 25000 m", "fiber.oil_length", 25.0),
    ("histogram.bin_width = 500 ps", "histogram.bin_width", 0.5e-9),
    ("bob.drift_rate = 100 MHz/hour", "bob.drift_rate", 100e6),
    ("aom.shift = 0.08 GHz", "aom.shift", 80e6),
    ("fiber.attenuation = 0.2 dB/km", "fiber.attenuation", 0.2),
])
def test_units(text, key, value):
    assert parse_text(text)[key] == pytest.approx(value)


def test_scenario_defaults():
    assert parse_text("scenario = hom-unlocked")["bob.offset"] == 153e6
    assert parse_text("scenario = hom-unlocked")["injection.power"] == 0.0
    assert parse_text("scenario = lockband")["injection.power"] == 12e-6
    drift = parse_text("scenario = drift")
    assert drift["bob.drift"] == "linear" and drift["bob.drift_rate"] == 100e6
    # Explicit values win over scenario defaults.
    assert parse_text("scenario = hom-unlocked\nbob.offset = 0 Hz")["bob.offset"] == 0.0


def test_detector_alias_sets_both():
    cfg = parse_text("detector.efficiency = 1.0\ndetector.dead_time = 0 s")
    assert cfg["detector1.efficiency"] == cfg["detector2.efficiency"] == 1.0
    assert cfg.detector(2).dead_time == 0.0


def test_sweep_axes():
    cfg = parse_text("scenario = sweep\nsweep.base = hom-unlocked\nsweep.bob.offset = 100 MHz, 153 MHz")
    assert cfg.sweeps == {"bob.offset": (100e6, 153e6)}
    assert cfg["bob.offset"] == 153e6
    with pytest.raises(ConfigError):
        parse_text("sweep.bob.offset = 1 MHz")


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_echo_round_trip(scenario):
    cfg = parse_text(f"scenario = {scenario}\nalice.linewidth = 3.3 MHz")
    back = parse_text(echo_config(cfg))
    assert back.values == cfg.values


def test_parse_config_file(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("scenario = beat\n")
    cfg = parse_config(p)
    assert cfg.scenario == "beat" and cfg.source == str(p)
    with pytest.raises(FileNotFoundError):
        parse_config(tmp_path / "missing.cfg")


def test_with_overrides_keeps_explicit():
    cfg = parse_text("scenario = hom-unlocked\nbob.offset = 10 MHz")
    new = cfg.with_overrides({"seed": 7})
    assert new["seed"] == 7 and new["bob.offset"] == 10e6


def test_every_key_has_valid_default_echo():
    cfg = parse_text("")
    for key in REGISTRY:
        assert f"{key} = " in echo_config(cfg)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(1e-6, 1e6))
def test_quantity_prefixes(x):
    assert parse_quantity(f"{x!r} MHz", "frequency") == pytest.approx(x * 1e6)
    assert parse_quantity(f"{x!r} ns", "time") == pytest.approx(x * 1e-9)
    assert parse_quantity(f"{x!r} km", "length") == pytest.approx(x)
