"""Structured run configuration: JSON file sections, defaults and overrides.

Sections: ``scenario``, ``modulation``, ``noise``, ``isi``, ``search``, ``sim``.
An effective configuration is always fully explicit, so writing it out and
loading it back reproduces the run.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .channel import MediumSpec
from .interval import IsiCriteria, SearchGrid
from .montecarlo import SimConfig
from .scenario import HEXOSE_D, PRESETS, Scenario, Settings

SECTIONS = ("scenario", "modulation", "noise", "isi", "search", "sim")

DEFAULTS: dict[str, dict[str, Any]] = {
    "scenario": {},
    "modulation": {"n": 1000, "alphabet_size": 4, "policy": "erasure"},
    "noise": {"snr_db": 20.0, "variance_model": "power", "reference": "shared"},
    "isi": {"A": 0.8, "epsilon": 0.001, "delta": 1e-6},
    "search": {"t_min": 1e-4, "t_max": 1e6, "resolution": 1e-2, "rtol": 1e-9, "tau_points": 512},
    "sim": {"dt": None, "t_max": None, "trials": 100_000, "seed": 42, "crossing": "bridge",
            "symbols": 100_000},
}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _num(value):
    """Float from JSON, accepting the strings "inf" / "-inf"."""
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"not a number: {value!r}") from None
    return value


def load(path: Optional[str]) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for section, values in raw.items():
        if not isinstance(values, dict):
            raise ConfigError(f"section {section!r} must be an object")
        if section != "scenario":
            extra = set(values) - set(DEFAULTS[section])
            if extra:
                raise ConfigError(f"unknown keys in {section!r}: {sorted(extra)}")
        cfg[section].update(values)
    return cfg


def apply_overrides(cfg: dict, overrides: dict[str, dict[str, Any]]) -> dict:
    """Layer command-line values (``None`` meaning "not given") over ``cfg``.

    A preset named on the command line replaces the file's scenario section.
    """
    cfg = copy.deepcopy(cfg)
    for section, values in overrides.items():
        given = {k: v for k, v in values.items() if v is not None}
        if section == "scenario" and "preset" in given:
            cfg["scenario"] = {}
        cfg[section].update(given)
    return cfg


@dataclass(frozen=True)
class Run:
    scenario: Scenario
    settings: Settings
    sim: SimConfig
    snr_db: float
    symbols: int
    preset: Optional[str]
    config: dict


def build(cfg: dict) -> Run:
    try:
        scenario, preset = _scenario(cfg["scenario"])
        mod, noise, isi, search, sim = (cfg[k] for k in ("modulation", "noise", "isi", "search", "sim"))
        settings = Settings(
            n=int(mod["n"]),
            alphabet_size=int(mod["alphabet_size"]),
            policy=str(mod["policy"]),
            criteria=IsiCriteria(A=float(isi["A"]), epsilon=float(isi["epsilon"])),
            delta=float(isi["delta"]),
            grid=SearchGrid(t_min=float(search["t_min"]), t_max=float(search["t_max"]),
                            resolution=float(search["resolution"]), rtol=float(search["rtol"])),
            variance_model=str(noise["variance_model"]),
            noise_reference=str(noise["reference"]),
            tau_points=int(search["tau_points"]),
        )
        settings.modulation()
        simcfg = SimConfig(
            dt=None if sim["dt"] is None else float(sim["dt"]),
            t_max=None if sim["t_max"] is None else float(sim["t_max"]),
            trials=int(sim["trials"]),
            seed=int(sim["seed"]),
            crossing=str(sim["crossing"]),
        )
        snr = float(_num(noise["snr_db"]))
        symbols = int(sim["symbols"])
        if symbols < 1:
            raise ValueError("symbols must be at least 1")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return Run(scenario, settings, simcfg, snr, symbols, preset, effective(cfg, scenario, preset))


def _scenario(sc: dict) -> tuple[Scenario, Optional[str]]:
    preset = sc.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]
        ch = base.channel
        fields = {"distance": ch.distance, "velocity": ch.velocity, "diffusion": ch.diffusion}
        for key in fields:
            if sc.get(key) is not None:
                fields[key] = float(sc[key])
        if sc.get("medium") is not None:
            fields["diffusion"] = None
        name = sc.get("name") or preset
    else:
        missing = [k for k in ("distance", "velocity") if sc.get(k) is None]
        if missing:
            raise ConfigError(f"scenario needs a preset or {missing}")
        fields = {k: sc.get(k) for k in ("distance", "velocity", "diffusion")}
        if fields["diffusion"] is None and sc.get("medium") is None:
            fields["diffusion"] = HEXOSE_D
        name = sc.get("name") or "custom"
    medium = None
    if sc.get("medium") is not None:
        m = sc["medium"]
        medium = MediumSpec(float(m["temperature"]), float(m["viscosity"]), float(m["radius_nm"]),
                            float(m.get("boltzmann", MediumSpec.__dataclass_fields__["boltzmann"].default)))
    try:
        diffusion = None if fields["diffusion"] is None else float(fields["diffusion"])
        scenario = Scenario.build(name, float(fields["distance"]), float(fields["velocity"]), diffusion, medium)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return scenario, preset


def effective(cfg: dict, scenario: Scenario, preset: Optional[str] = None) -> dict:
    out = copy.deepcopy(cfg)
    ch = scenario.channel
    sc = {"name": scenario.name, "distance": ch.distance, "velocity": ch.velocity}
    if preset is not None:
        sc["preset"] = preset
    if scenario.medium is not None:
        m = scenario.medium
        sc["medium"] = {"temperature": m.temperature, "viscosity": m.viscosity, "radius_nm": m.radius_nm,
                        "boltzmann": m.boltzmann}
    else:
        sc["diffusion"] = ch.diffusion
    out["scenario"] = sc
    return jsonable(out)


def jsonable(obj):
    """Replace non-finite floats by the strings "inf", "-inf", "nan"."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
