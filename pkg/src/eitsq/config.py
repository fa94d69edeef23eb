"""Scenario configuration: INI sections with unit-suffixed values."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .eit import EitParams
from .measurement import AnalyzerConfig, LoConfig
from .opo import OpoParams
from .pulse import GateFunction, TimeGrid
from .spectral import FrequencyGrid


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


class MissingCalibrationError(LookupError):
    """A scenario needs a calibrated quantity that nobody supplied."""


_PREFIX = {"": 1.0, "k": 1e3, "M": 1e6, "G": 1e9, "m": 1e-3, "u": 1e-6, "µ": 1e-6, "n": 1e-9}

# kind -> accepted base units and their SI factor
_UNITS = {
    "freq": {"Hz": 1.0},
    "rate": {"rad/s": 1.0, "Hz": 2 * np.pi},
    "power": {"W": 1.0},
    "time": {"s": 1.0},
    "db": {"dB": 1.0},
    "kappa": {"rad2/s2/W": 1.0},
}

SCHEMA: dict[str, dict[str, str]] = {
    "source": {
        "gamma_hwhm": "freq",
        "target_sqz": "db",
        "target_antisqz": "db",
        "target_detuning": "freq",
        "x": "float",
        "eta_esc": "float",
    },
    "medium": {
        "optical_depth": "float",
        "gamma_e": "rate",
        "gamma_0": "rate",
        "control_power": "power",
        "powers": "power_list",
        "kappa": "kappa",
        "eta_path": "float",
    },
    "measurement": {
        "lo": "str",
        "epsilon": "freq",
        "rbw": "freq",
        "vbw": "freq",
        "grid_spacing": "freq",
    },
    "pulse": {
        "gate_shape": "str",
        "gate_fwhm": "time",
        "gate_center": "time",
        "gate_floor": "float",
        "n_samples": "int",
        "dt": "time",
        "method": "str",
        "seed": "int",
        "mc_samples": "int",
    },
    "scan": {
        "delta_c_min": "freq",
        "delta_c_max": "freq",
        "delta_c_step": "freq",
        "theta_points": "int",
    },
    "calibration": {
        "resonance_sqz": "db",
        "resonance_power": "power",
        "target_delay": "time",
        "delay_power": "power",
        "max_window": "freq",
        "record": "path",
    },
    "output": {"plots": "bool"},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return i
        elif current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


def parse_quantity(raw: str, kind: str) -> float:
    match = _QUANTITY.match(raw)
    if not match:
        raise ValueError(f"cannot read {raw!r} as a number with unit")
    value, unit = float(match.group(1)), match.group(2)
    if kind == "float":
        if unit:
            raise ValueError(f"dimensionless value {raw!r} must not carry a unit")
        return value
    if not unit:
        raise ValueError(f"{raw!r} needs an explicit unit ({', '.join(_UNITS[kind])})")
    for base, factor in _UNITS[kind].items():
        if unit == base:
            return value * factor
        if unit.endswith(base) and unit[: -len(base)] in _PREFIX and kind != "db":
            return value * factor * _PREFIX[unit[: -len(base)]]
    raise ValueError(f"unit {unit!r} not accepted here (expected {', '.join(_UNITS[kind])})")


def _convert(raw: str, kind: str) -> Any:
    if kind == "str":
        return raw.strip()
    if kind == "path":
        return Path(raw.strip())
    if kind == "int":
        try:
            return int(raw.strip())
        except ValueError:
            raise ValueError(f"{raw!r} is not an integer") from None
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("yes", "true", "on", "1"):
            return True
        if low in ("no", "false", "off", "0"):
            return False
        raise ValueError(f"{raw!r} is not a boolean")
    if kind == "power_list":
        return tuple(parse_quantity(part, "power") for part in raw.split(","))
    return parse_quantity(raw, kind)


def _read(text: str, origin: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            line = _line_of(text, section, None)
            raise ConfigError(f"{origin}:{line}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                line = _line_of(text, section, key)
                raise ConfigError(f"{origin}:{line}: unknown key {key!r} in [{section}]")
            try:
                _convert(raw, SCHEMA[section][key])
            except ValueError as exc:
                line = _line_of(text, section, key)
                raise ConfigError(f"{origin}:{line}: [{section}] {key}: {exc}") from None
            out.setdefault(section, {})[key] = raw.strip()
    return out


def default_text() -> str:
    return resources.files("eitsq").joinpath("data/default.ini").read_text(encoding="utf-8")


@dataclass
class ScenarioConfig:
    """Resolved configuration: built-in defaults overlaid by a user file."""

    raw: dict[str, dict[str, str]]
    user_keys: set = field(default_factory=set)
    origin: str = "<defaults>"

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ScenarioConfig":
        raw = _read(default_text(), "<defaults>")
        user_keys = set()
        origin = "<defaults>"
        if path is not None:
            path = Path(path)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
            user = _read(text, str(path))
            for section, items in user.items():
                raw.setdefault(section, {}).update(items)
                user_keys.update((section, k) for k in items)
            origin = str(path)
        cfg = cls(raw, user_keys, origin)
        cfg.validate()
        return cfg

    def validate(self):
        """Build every structured value once so bad settings fail before any work."""
        try:
            self.lo()
            self.analyzer()
            self.time_grid()
            self.gate()
            self.scan()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{self.origin}: {exc}") from None

    def has(self, section: str, key: str) -> bool:
        return key in self.raw.get(section, {})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        if not self.has(section, key):
            if default is not None:
                return default
            raise ConfigError(f"missing [{section}] {key}")
        return _convert(self.raw[section][key], SCHEMA[section][key])

    def set(self, section: str, key: str, raw: str):
        _convert(raw, SCHEMA[section][key])
        self.raw.setdefault(section, {})[key] = raw
        self.user_keys.add((section, key))

    def to_text(self) -> str:
        """Resolved configuration in the input format (round-trips through ``load``)."""
        lines = []
        for section in SCHEMA:
            items = self.raw.get(section)
            if not items:
                continue
            lines.append(f"[{section}]")
            lines += [f"{k} = {items[k]}" for k in SCHEMA[section] if k in items]
            lines.append("")
        return "\n".join(lines)

    # -- builders -------------------------------------------------------------------

    def lo(self, theta: float = 0.0) -> LoConfig:
        return LoConfig(self.get("measurement", "lo"), self.get("measurement", "epsilon"), theta)

    def analyzer(self) -> AnalyzerConfig:
        return AnalyzerConfig(self.get("measurement", "rbw"), self.get("measurement", "vbw"))

    def cw_grid(self) -> FrequencyGrid:
        eps = self.get("measurement", "epsilon")
        rbw = self.get("measurement", "rbw")
        return FrequencyGrid.covering(2 * eps + rbw, self.get("measurement", "grid_spacing"))

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.get("pulse", "n_samples"), self.get("pulse", "dt"))

    def pulse_grid(self) -> FrequencyGrid:
        tg = self.time_grid()
        return FrequencyGrid(tg.n_samples, 1.0 / tg.span)

    def gate(self) -> GateFunction:
        return GateFunction(
            self.get("pulse", "gate_shape"),
            self.get("pulse", "gate_fwhm"),
            self.get("pulse", "gate_center"),
            self.get("pulse", "gate_floor"),
        )

    def eit_base(self, gamma_0: float) -> EitParams:
        return EitParams(self.get("medium", "optical_depth"), self.get("medium", "gamma_e"), gamma_0)

    def scan(self) -> np.ndarray:
        lo, hi = self.get("scan", "delta_c_min"), self.get("scan", "delta_c_max")
        step = self.get("scan", "delta_c_step")
        if not step > 0 or hi < lo:
            raise ValueError("scan needs delta_c_step > 0 and delta_c_max >= delta_c_min")
        n = int(round((hi - lo) / step))
        return lo + step * np.arange(n + 1)


@dataclass(frozen=True)
class Resolved:
    """Calibrated quantities after merging config overrides and a record."""

    opo: OpoParams | None
    kappa: float | None
    gamma_0: float
    eta_path: float | None

    def require(self, *names: str):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise MissingCalibrationError(
                f"scenario needs {', '.join(missing)}: run 'eitsq calibrate' or set them in the config"
            )
