"""Scenario configuration files: ``key = value unit`` lines with strict units.

Example::

    scenario = hom-locked
    seed = 7
    # lasers
    alice.linewidth = 5 MHz
    bob.offset = 267 MHz
    injection.power = 4 uW
    fiber.bob_charlie_length = 50 km
    histogram.bin_width = 0.5 ns

Every physical quantity must carry a unit. Unknown keys are rejected.
``sweep.<key> = v1, v2, ...`` lines declare sweep axes for the ``sweep``
scenario, ``sweep.base`` names the scenario being swept.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SCENARIOS = ("beat", "lockband", "hom-locked", "hom-unlocked", "drift", "sweep")

UNITS = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6, "μW": 1e-6, "nW": 1e-9, "pW": 1e-12},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9, "ps": 1e-12,
             "fs": 1e-15, "min": 60.0, "h": 3600.0, "hour": 3600.0},
    "length": {"m": 1e-3, "km": 1.0},  # stored in km
    "attenuation": {"dB/km": 1.0},
    "drift": {f"{p}/{t}": m / 1.0 for p, m in
              (("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)) for t in ("hour", "h")},
}
CANONICAL_UNIT = {"frequency": "Hz", "power": "W", "time": "s", "length": "km",
                  "attenuation": "dB/km", "drift": "Hz/hour"}


@dataclass(frozen=True)
class Key:
    kind: str  # one of UNITS, or number / int / text / choice / bool
    default: object
    choices: tuple = ()
    auto: bool = False  # accepts the literal "auto" (default resolved per scenario)
    is_list: bool = False
    minimum: float | None = None
    maximum: float | None = None


def _k(kind, default, **kw):
    return Key(kind, default, **kw)


REGISTRY: dict[str, Key] = {
    "scenario": _k("choice", "hom-locked", choices=SCENARIOS),
    "seed": _k("int", 1, minimum=0),
    "trials": _k("int", None, auto=True, minimum=1),
    "workers": _k("int", 1, minimum=1),
    "out": _k("text", "out"),
    "alice.offset": _k("frequency", 0.0),
    "alice.linewidth": _k("frequency", 5e6, minimum=0),
    "alice.drift": _k("choice", "none", choices=("none", "linear", "random-walk")),
    "alice.drift_rate": _k("drift", 0.0, minimum=0),
    "bob.offset": _k("frequency", None, auto=True),
    "bob.linewidth": _k("frequency", 5e6, minimum=0),
    "bob.power": _k("power", 10e-3, minimum=0),
    "bob.drift": _k("choice", None, auto=True, choices=("none", "linear", "random-walk")),
    "bob.drift_rate": _k("drift", None, auto=True, minimum=0),
    "injection.power": _k("power", None, auto=True, minimum=0),
    "injection.kappa_coeff": _k("frequency", None, auto=True, minimum=0),
    "injection.noise_factor": _k("number", 1.0, minimum=0),
    "calibration.power": _k("power", 12e-6, minimum=0),
    "calibration.slave_power": _k("power", 10e-3, minimum=0),
    "calibration.bandwidth": _k("frequency", 760e6, minimum=0),
    "fiber.oil_length": _k("length", 25.0, minimum=0),
    "fiber.bob_charlie_length": _k("length", 50.0, minimum=0),
    "fiber.alice_charlie_length": _k("length", 0.0, minimum=0),
    "fiber.attenuation": _k("attenuation", 0.2, minimum=0),
    "fiber.group_index": _k("number", 1.468, minimum=1),
    "aom.shift": _k("frequency", 80e6),
    "bs.pol_overlap": _k("number", 0.98, minimum=0, maximum=1),
    "bs.power_ratio": _k("number", 1.0, minimum=0),
    "bs.power": _k("power", 1e-6, minimum=0),
    "histogram.bin_width": _k("time", 0.5e-9, minimum=0),
    "histogram.max_tau": _k("time", None, auto=True, minimum=0),
    "histogram.pairs": _k("number", 2e7, minimum=1),
    "detector.click_rate": _k("frequency", None, auto=True, minimum=0),
    "grid.dt": _k("time", None, auto=True, minimum=0),
    "grid.valid_span": _k("time", None, auto=True, minimum=0),
    "beat.expected_fwhm": _k("frequency", None, auto=True, minimum=0),
    "beat.max_freq": _k("frequency", 500e6, minimum=0),
    "lock.noise": _k("choice", "off", choices=("off", "on")),
    "lockband.step": _k("frequency", 10e6, minimum=0),
    "lockband.max_detuning": _k("frequency", 1.5e9, minimum=0),
    "lockband.window": _k("time", 5e-6, minimum=0),
    "lockband.powers": _k("power", (1e-6, 2e-6, 4e-6, 8e-6, 12e-6, 16e-6, 20e-6), is_list=True, minimum=0),
    "lockband.check_power": _k("power", 4e-6, minimum=0),
    "fp.fsr": _k("frequency", 1.5e9, minimum=0),
    "fp.finesse": _k("number", 100.0, minimum=1),
    "fp.points": _k("int", 9001, minimum=3),
    "drift.duration": _k("time", 3600.0, minimum=0),
    "drift.windows": _k("int", 60, minimum=1),
    "drift.window": _k("time", 5e-6, minimum=0),
    "sweep.base": _k("choice", "hom-locked", choices=SCENARIOS[:-1]),
}
for _i in ("1", "2"):
    REGISTRY[f"detector{_i}.efficiency"] = _k("number", 0.8, minimum=0, maximum=1)
    REGISTRY[f"detector{_i}.dark_rate"] = _k("frequency", 100.0, minimum=0)
    REGISTRY[f"detector{_i}.dead_time"] = _k("time", 50e-12, minimum=0)
    REGISTRY[f"detector{_i}.jitter"] = _k("time", 50e-12, minimum=0)
DETECTOR_FIELDS = ("efficiency", "dark_rate", "dead_time", "jitter")

# Per-scenario defaults for keys whose value depends on the experiment.
SCENARIO_DEFAULTS = {
    "beat": {"bob.offset": 267e6, "injection.power": 4e-6, "trials": 16, "grid.valid_span": 200e-6},
    "lockband": {"bob.offset": 267e6, "injection.power": 12e-6, "trials": 1},
    "hom-locked": {"bob.offset": 267e6, "injection.power": 4e-6, "trials": 8, "grid.valid_span": 300e-6},
    "hom-unlocked": {"bob.offset": 153e6, "injection.power": 0.0, "trials": 8, "grid.valid_span": 300e-6},
    "drift": {"bob.offset": 267e6, "injection.power": 12e-6, "trials": 1,
              "bob.drift": "linear", "bob.drift_rate": 100e6},
    "sweep": {"trials": 1},
}
FALLBACK_DEFAULTS = {"bob.drift": "none", "bob.drift_rate": 0.0}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VALUE_RE = re.compile(rf"^\s*({_NUMBER})\s*(\S.*?)?\s*$")


@dataclass
class ScenarioConfig:
    """Fully resolved scenario configuration (SI units; fiber lengths in km)."""

    values: dict
    explicit: set = field(default_factory=set)
    sweeps: dict = field(default_factory=dict)
    source: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    @property
    def scenario(self) -> str:
        return self.values["scenario"]

    def with_overrides(self, overrides: dict) -> "ScenarioConfig":
        raw = {k: v for k, v in self.values.items() if k in self.explicit}
        raw.update(overrides)
        return resolve(raw, source=self.source)

    # Component builders -------------------------------------------------
    def laser(self, who: str):
        from .phasenoise import DriftModel, LaserSpec

        v = self.values
        power = v["bob.power"] if who == "bob" else 1e-3
        return LaserSpec(nu_offset=v[f"{who}.offset"], linewidth_fwhm=v[f"{who}.linewidth"], power=power,
                         drift=DriftModel(v[f"{who}.drift"], v[f"{who}.drift_rate"]))

    def fiber(self, name: str):
        from .channel import FiberSpec

        return FiberSpec(length=self.values[f"fiber.{name}_length"], attenuation=self.values["fiber.attenuation"],
                         group_index=self.values["fiber.group_index"])

    def kappa_coeff(self) -> float:
        from .injection import calibrate_kappa

        v = self.values
        if v["injection.kappa_coeff"] is not None:
            return v["injection.kappa_coeff"]
        return calibrate_kappa([(v["calibration.power"], v["calibration.slave_power"], v["calibration.bandwidth"])])

    def injection(self, power: float | None = None):
        from .injection import InjectionConfig

        v = self.values
        return InjectionConfig(injection_power=v["injection.power"] if power is None else power,
                               slave_power=v["bob.power"], kappa_coeff=self.kappa_coeff(),
                               slave_spec=self.laser("bob"), noise_factor=v["injection.noise_factor"])

    def detector(self, i: int):
        from .detect import DetectorSpec

        v = self.values
        return DetectorSpec(efficiency=v[f"detector{i}.efficiency"], dark_rate=v[f"detector{i}.dark_rate"],
                            dead_time=v[f"detector{i}.dead_time"], jitter_sigma=v[f"detector{i}.jitter"])


def parse_quantity(text: str, kind: str, key: str | None = None, line: int | None = None) -> float:
    """Convert ``"5 MHz"`` into 5e6 for a quantity of the given kind."""
    m = _VALUE_RE.match(text)
    units = UNITS[kind]
    expected = ", ".join(units)
    if not m:
        raise ConfigError(f"cannot read {text!r} as a {kind} (expected a number followed by one of: {expected})",
                          key, line)
    number, unit = m.group(1), m.group(2)
    if unit is None:
        raise ConfigError(f"{kind} value {text!r} has no unit (expected one of: {expected})", key, line)
    if unit not in units:
        raise ConfigError(f"unknown {kind} unit {unit!r} (expected one of: {expected})", key, line)
    value = float(number) * units[unit]
    if not math.isfinite(value):
        raise ConfigError(f"value {text!r} is not finite", key, line)
    return value


def _parse_scalar(text: str, spec: Key, key: str, line: int | None):
    text = text.strip()
    if spec.auto and text == "auto":
        return None
    if spec.kind == "choice":
        if text not in spec.choices:
            raise ConfigError(f"{text!r} is not one of {', '.join(spec.choices)}", key, line)
        return text
    if spec.kind == "text":
        if not text:
            raise ConfigError("empty value", key, line)
        return text
    if spec.kind in ("number", "int"):
        try:
            value = int(text) if spec.kind == "int" else float(text)
        except ValueError:
            what = "an integer" if spec.kind == "int" else "a plain (unit-free) number"
            raise ConfigError(f"expected {what}, got {text!r}", key, line) from None
        if spec.kind == "number" and not math.isfinite(value):
            raise ConfigError(f"value {text!r} is not finite", key, line)
    else:
        value = parse_quantity(text, spec.kind, key, line)
    if spec.minimum is not None and value < spec.minimum:
        raise ConfigError(f"value {text!r} is below the minimum {spec.minimum:g}", key, line)
    if spec.maximum is not None and value > spec.maximum:
        raise ConfigError(f"value {text!r} is above the maximum {spec.maximum:g}", key, line)
    return value


def parse_value(key: str, text: str, line: int | None = None, label: str | None = None):
    """Parse ``text`` for registry ``key``; errors name ``label`` (the key as written)."""
    spec = REGISTRY.get(key)
    label = label or key
    if spec is None:
        raise ConfigError("unknown key", label, line)
    if spec.is_list:
        parts = text.split(",")
        if not all(p.strip() for p in parts):
            raise ConfigError("empty list element", label, line)
        return tuple(_parse_scalar(p, spec, label, line) for p in parts)
    return _parse_scalar(text, spec, label, line)


# Shorthand keys that set the same field on both lasers or both detectors.
LASER_ALIASES = {"linewidth": ("alice.linewidth", "bob.linewidth")}


def expand_alias(key: str) -> list[str]:
    if key in LASER_ALIASES:
        return list(LASER_ALIASES[key])
    name = key.split(".", 1)[-1]
    if key.startswith("detector.") and name in DETECTOR_FIELDS:
        return [f"detector1.{name}", f"detector2.{name}"]
    return [key]


def parse_text(text: str, source: str | None = None) -> ScenarioConfig:
    raw: dict = {}
    sweeps: dict = {}
    seen: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", None, lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", None, lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", key, lineno)
        seen[key] = lineno
        if key.startswith("sweep.") and key != "sweep.base":
            target = key[len("sweep."):]
            targets = expand_alias(target)
            if targets[0] not in REGISTRY or target in ("scenario", "sweep.base") or target.startswith("sweep."):
                raise ConfigError(f"sweep axis names unknown key '{target}'", key, lineno)
            parts = [p.strip() for p in value.split(",")]
            if not all(parts):
                raise ConfigError("empty sweep value", key, lineno)
            sweeps[target] = tuple(parse_value(targets[0], p, lineno, label=key) for p in parts)
            continue
        for k in expand_alias(key):
            if k not in REGISTRY:
                raise ConfigError("unknown key", key, lineno)
            raw[k] = parse_value(k, value, lineno, label=key)
    cfg = resolve(raw, source=source)
    cfg.sweeps = sweeps
    if sweeps and cfg.scenario != "sweep":
        raise ConfigError("sweep axes given but scenario is not 'sweep'", "scenario")
    return cfg


def resolve(raw: dict, source: str | None = None) -> ScenarioConfig:
    """Fill defaults (global, then per-scenario) around explicitly set ``raw`` values."""
    for k in raw:
        if k not in REGISTRY:
            raise ConfigError("unknown key", k)
    values = {k: spec.default for k, spec in REGISTRY.items()}
    scenario = raw.get("scenario", values["scenario"])
    effective = raw.get("sweep.base", values["sweep.base"]) if scenario == "sweep" else scenario
    defaults = dict(FALLBACK_DEFAULTS)
    defaults.update(SCENARIO_DEFAULTS[effective])
    if scenario == "sweep":
        defaults.update(SCENARIO_DEFAULTS["sweep"])
    for k, v in defaults.items():
        values[k] = v
    values.update({k: v for k, v in raw.items() if v is not None})
    return ScenarioConfig(values=values, explicit=set(k for k, v in raw.items() if v is not None), source=source)


def parse_config(path) -> ScenarioConfig:
    """Parse and validate a scenario file; omitted keys take their defaults."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    return parse_text(text, source=str(path))


def format_value(key: str, value) -> str:
    spec = REGISTRY[key]
    if value is None:
        return "auto"
    if spec.is_list:
        return ", ".join(format_value_scalar(spec, v) for v in value)
    return format_value_scalar(spec, value)


def format_value_scalar(spec: Key, value) -> str:
    if spec.kind in ("choice", "text"):
        return str(value)
    if spec.kind == "int":
        return str(int(value))
    if spec.kind == "number":
        return repr(float(value))
    return f"{float(value)!r} {CANONICAL_UNIT[spec.kind]}"


def echo_config(cfg: ScenarioConfig) -> str:
    """Resolved configuration in the file format (parses back to the same values)."""
    lines = []
    for key in REGISTRY:
        lines.append(f"{key} = {format_value(key, cfg.values[key])}")
    for axis, vals in cfg.sweeps.items():
        target = expand_alias(axis)[0]
        lines.append(f"sweep.{axis} = " + ", ".join(format_value_scalar(REGISTRY[target], v) for v in vals))
    return "\n".join(lines) + "\n"
