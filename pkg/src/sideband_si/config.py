"""Run configuration: INI-style sections or the equivalent JSON object.

Sections: ``[params]``, ``[drive]``, ``[sweep]``, ``[simulate]``, ``[fit]``,
``[synth]``, ``[output]``.  The unit system (``units = hz|rad``) must be
stated, either in ``[params]`` or on the command line; with ``hz`` every
rate and frequency is multiplied by 2*pi on input.  Times (``dt``,
``duration``) are always in seconds and outputs are always in rad/s.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidConfig, ParameterError
from .params import DriveParams, OmParams

RATE_KEYS = ("mech_freq", "optical_decay", "mech_decay", "coupling", "detuning")
SWEEPABLE = ("nbar",) + RATE_KEYS
SECTIONS = ("params", "drive", "sweep", "simulate", "fit", "synth", "output")


@dataclass
class RunConfig:
    units: str
    params: dict
    drive: dict | None = None
    sweep: dict | None = None
    simulate: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    source: str = ""

    @property
    def factor(self):
        return 2.0 * math.pi if self.units == "hz" else 1.0

    def om_params(self, **override) -> OmParams:
        vals = {}
        for k in RATE_KEYS:
            if k in self.params:
                vals[k] = self.params[k] * self.factor
        for k in ("mech_freq", "optical_decay", "mech_decay"):
            if k not in vals:
                raise InvalidConfig(f"missing field params.{k}")
        vals.update(override)
        try:
            return OmParams(**vals)
        except ParameterError as exc:
            raise InvalidConfig(str(exc)) from exc

    def drive_params(self):
        if not self.drive:
            return None
        d = self.drive
        try:
            return DriveParams(
                pump_power=_need(d, "pump_power", "drive"),
                pump_freq=_need(d, "pump_freq", "drive") * self.factor,
                external_coupling=d.get("external_coupling", 1.0),
            )
        except ParameterError as exc:
            raise InvalidConfig(str(exc)) from exc

    def sweep_grid(self):
        """(variable, values) with rate variables converted to rad/s."""
        import numpy as np

        s = self.sweep
        if not s:
            raise InvalidConfig("missing [sweep] section")
        var = s.get("variable")
        if var not in SWEEPABLE:
            raise InvalidConfig(f"sweep.variable must be one of {', '.join(SWEEPABLE)}")
        start, stop = _need(s, "start", "sweep"), _need(s, "stop", "sweep")
        n = int(_need(s, "points", "sweep"))
        scale = s.get("scale", "linear")
        if n < 1:
            raise InvalidConfig("sweep.points must be >= 1")
        if not stop > start and not (n == 1 and stop == start):
            raise InvalidConfig("sweep range is empty (need stop > start)")
        if scale == "log":
            if start <= 0:
                raise InvalidConfig("log sweep needs start > 0")
            vals = np.logspace(math.log10(start), math.log10(stop), n)
        elif scale == "linear":
            vals = np.linspace(start, stop, n)
        else:
            raise InvalidConfig("sweep.scale must be linear or log")
        if var != "nbar":
            vals = vals * self.factor
        return var, vals


def _need(d, key, section):
    if key not in d:
        raise InvalidConfig(f"missing field {section}.{key}")
    return d[key]


def _coerce(value):
    if isinstance(value, (int, float, bool)) or value is None:
        return value
    v = str(value).strip()
    low = v.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def _sections_from_file(path: Path):
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidConfig("JSON config must be an object")
        return {k: dict(v) for k, v in raw.items()}
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise InvalidConfig(str(exc)) from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def load_config(path=None, units=None, overrides=None) -> RunConfig:
    """Read and validate a configuration.

    ``units`` from the command line wins over the file; one of them must be
    given.  ``overrides`` maps section -> {key: value} and is applied last.
    """
    raw = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise InvalidConfig(f"config file not found: {p}")
        raw = _sections_from_file(p)
    for sec, vals in (overrides or {}).items():
        raw.setdefault(sec, {}).update(vals)
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise InvalidConfig(f"unknown section(s): {', '.join(sorted(unknown))}")
    sec = {k: {kk: _coerce(vv) for kk, vv in raw.get(k, {}).items()} for k in SECTIONS}
    u = units or sec["params"].pop("units", None)
    sec["params"].pop("units", None)
    if u not in ("hz", "rad"):
        raise InvalidConfig("units must be given explicitly as hz or rad")
    for k, v in sec["params"].items():
        if isinstance(v, str):
            raise InvalidConfig(f"params.{k} must be numeric, got {v!r}")
    return RunConfig(
        units=u,
        params=sec["params"],
        drive=sec["drive"] or None,
        sweep=sec["sweep"] or None,
        simulate=sec["simulate"],
        fit=sec["fit"],
        synth=sec["synth"],
        output=sec["output"],
        source=str(path or ""),
    )
