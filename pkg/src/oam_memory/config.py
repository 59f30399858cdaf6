"""Run configuration: JSON schema, defaults, profiles, sweep expansion.

A config is a JSON object with up to four sections::

    {
      "scenario": {"kind": "...", "storage_time": ..., ...},
      "physical": {"atom_count": ..., ...},       # PhysicalParams overrides
      "sweep":    {"coupling_ratio": [...], ...}, # cartesian sweep axes
      "output":   {"label": "...", "trajectory": true, ...}
    }

Unknown keys are rejected anywhere. An empty config resolves to the default
profile: the single-photon scenario on the reference sodium parameter set at
coupling ratio 4. Resolution is deterministic and the resolved object's
canonical JSON is hashed into the run digest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Any

from . import model
from .protocols import InitialStateTerms, ScenarioConfig


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_SCENARIO_DEFAULTS: dict[str, Any] = {
    "kind": "single",
    "storage_time": 6.125e-4,
    "coupling_ratio": 4.0,
    "coupling_source": "ratio",
    "interactions_enabled": False,
    "cutoff": None,
    "t_off_offset": 0.0,
    "initial_state": None,
}

_PHYSICAL_FIELDS = {f.name for f in dataclasses.fields(model.PhysicalParams)}

_SWEEP_AXES = (
    "coupling_ratio",
    "storage_time",
    "winding_number",
    "oam_index",
    "t_off_offset",
    "interactions_enabled",
    "initial_state",
)

_OUTPUT_DEFAULTS: dict[str, Any] = {
    "label": "run",
    "trajectory": None,  # None = auto: on for single points, off for sweeps
    "density_matrices": True,
    "wigner": None,  # None = auto: on for fock_series
    "figures": True,
}


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object, got {type(value).__name__}")
    return value


def _check_keys(section: dict, allowed, where: str):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def parse_initial_state(raw, where: str = "initial_state") -> InitialStateTerms:
    """Parse [{"amplitude": a, "occupations": [n, ...]}, ...] into terms.

    Amplitudes are numbers or [re, im] pairs; normalization happens later.
    """
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where} must be a non-empty list of terms")
    terms = []
    for k, term in enumerate(raw):
        term = _require_mapping(term, f"{where}[{k}]")
        _check_keys(term, ("amplitude", "occupations"), f"{where}[{k}]")
        if "occupations" not in term:
            raise ConfigError(f"{where}[{k}] is missing 'occupations'")
        occs = term["occupations"]
        if not isinstance(occs, list) or not all(
            isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in occs
        ):
            raise ConfigError(f"{where}[{k}].occupations must be non-negative integers")
        amp_raw = term.get("amplitude", 1.0)
        if isinstance(amp_raw, list):
            if len(amp_raw) != 2:
                raise ConfigError(f"{where}[{k}].amplitude pair must be [re, im]")
            amp = complex(
                _as_number(amp_raw[0], f"{where}[{k}].amplitude[0]"),
                _as_number(amp_raw[1], f"{where}[{k}].amplitude[1]"),
            )
        else:
            amp = complex(_as_number(amp_raw, f"{where}[{k}].amplitude"), 0.0)
        terms.append((amp, tuple(occs)))
    return tuple(terms)


def state_label(terms: InitialStateTerms) -> str:
    """Compact human label, e.g. '|1>' or '|0>+|1>'."""
    amps = [amp for amp, _ in terms]
    kets = ["|" + ",".join(str(n) for n in occs) + ">" for _, occs in terms]
    if all(abs(a - amps[0]) < 1e-12 for a in amps) and amps[0].imag == 0:
        return "+".join(kets)
    parts = []
    for amp, ket in zip(amps, kets):
        parts.append(f"({amp.real:g}{amp.imag:+g}j){ket}")
    return "+".join(parts)


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def available_profiles() -> list[str]:
    root = resources.files("oam_memory").joinpath("profiles")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_profile(name: str) -> dict:
    root = resources.files("oam_memory").joinpath("profiles")
    candidate = root.joinpath(f"{name}.json")
    try:
        text = candidate.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(
            f"unknown profile {name!r}; available: {', '.join(available_profiles())}"
        ) from None
    return json.loads(text)


def load_config(path: str | Path | None = None, profile: str | None = None) -> dict:
    """Read, merge and fully resolve a run configuration.

    Precedence: built-in defaults < named profile < config file. A missing
    path resolves to the defaults (optionally through the profile).
    """
    merged: dict = {}
    if profile is not None:
        merged = _deep_merge(merged, load_profile(profile))
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            user = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config parse error in {path}: {exc}") from exc
        merged = _deep_merge(merged, _require_mapping(user, "config"))
    return resolve(merged)


def resolve(raw: dict) -> dict:
    """Validate a raw config dict and fill in every default."""
    raw = _require_mapping(raw, "config")
    _check_keys(raw, ("scenario", "physical", "sweep", "output"), "config")

    scenario = _deep_merge(_SCENARIO_DEFAULTS, _require_mapping(raw.get("scenario", {}), "scenario"))
    _check_keys(scenario, _SCENARIO_DEFAULTS, "scenario")

    physical = dict(_require_mapping(raw.get("physical", {}), "physical"))
    _check_keys(physical, _PHYSICAL_FIELDS, "physical")
    for key, value in physical.items():
        if key in ("atom_count", "winding_number", "oam_index"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"physical.{key} must be an integer, got {value!r}")
        else:
            physical[key] = _as_number(value, f"physical.{key}")

    sweep = dict(_require_mapping(raw.get("sweep", {}), "sweep"))
    _check_keys(sweep, _SWEEP_AXES, "sweep")
    for axis, values in sweep.items():
        if axis == "storage_time" and isinstance(values, dict):
            _check_keys(values, ("start", "stop", "points_per_decade"), "sweep.storage_time")
            for k in ("start", "stop"):
                if k not in values:
                    raise ConfigError(f"sweep.storage_time needs '{k}'")
            continue
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{axis} must be a non-empty list")

    output = _deep_merge(_OUTPUT_DEFAULTS, _require_mapping(raw.get("output", {}), "output"))
    _check_keys(output, _OUTPUT_DEFAULTS, "output")

    resolved = {"scenario": scenario, "physical": physical, "sweep": sweep, "output": output}
    # construct once to surface validation errors at load time
    base_scenario_config(resolved)
    expand_sweep(resolved)
    return resolved


def config_digest(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _physical_params(resolved: dict, extra: dict | None = None) -> model.PhysicalParams:
    overrides = dict(resolved["physical"])
    if extra:
        overrides.update(extra)
    try:
        return model.PhysicalParams(**overrides)
    except (model.ModelError, TypeError) as exc:
        raise ConfigError(f"invalid physical parameters: {exc}") from exc


def base_scenario_config(resolved: dict, axis_values: dict | None = None) -> ScenarioConfig:
    """ScenarioConfig for one sweep point (axis overrides applied)."""
    axis_values = axis_values or {}
    scen = dict(resolved["scenario"])
    physical_extra = {}
    for axis, value in axis_values.items():
        if axis in ("winding_number", "oam_index"):
            physical_extra[axis] = value
        else:
            scen[axis] = value
    params = _physical_params(resolved, physical_extra)
    initial = scen.get("initial_state")
    if initial is not None and not isinstance(initial, tuple):
        initial = parse_initial_state(initial)
    cutoff = scen.get("cutoff")
    if cutoff is not None and (isinstance(cutoff, bool) or not isinstance(cutoff, int)):
        raise ConfigError(f"scenario.cutoff must be an integer, got {cutoff!r}")
    try:
        return ScenarioConfig(
            kind=scen["kind"],
            physical=params,
            storage_time=_as_number(scen["storage_time"], "scenario.storage_time"),
            coupling_ratio=_as_number(scen["coupling_ratio"], "scenario.coupling_ratio"),
            coupling_source=scen["coupling_source"],
            interactions_enabled=bool(scen["interactions_enabled"]),
            cutoff=cutoff,
            initial_state=initial,
            t_off_offset=_as_number(scen["t_off_offset"], "scenario.t_off_offset"),
        )
    except Exception as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def _storage_axis_values(spec) -> list[float]:
    if isinstance(spec, dict):
        import numpy as np

        start = _as_number(spec["start"], "sweep.storage_time.start")
        stop = _as_number(spec["stop"], "sweep.storage_time.stop")
        per_decade = spec.get("points_per_decade", 25)
        if start <= 0 or stop <= start:
            raise ConfigError("sweep.storage_time needs 0 < start < stop")
        decades = np.log10(stop / start)
        n = max(2, int(round(per_decade * decades)) + 1)
        return [float(x) for x in np.logspace(np.log10(start), np.log10(stop), n)]
    return [_as_number(v, "sweep.storage_time[]") for v in spec]


def expand_sweep(resolved: dict) -> list[dict]:
    """Cartesian product of sweep axes, in canonical axis order.

    Returns a list of {axis: value} dicts; empty sweep gives one empty dict.
    """
    sweep = resolved["sweep"]
    axes: list[tuple[str, list]] = []
    for axis in _SWEEP_AXES:
        if axis not in sweep:
            continue
        values = sweep[axis]
        if axis == "storage_time":
            axes.append((axis, _storage_axis_values(values)))
        elif axis == "initial_state":
            axes.append((axis, [parse_initial_state(v, f"sweep.initial_state[{i}]")
                                for i, v in enumerate(values)]))
        else:
            axes.append((axis, list(values)))
    points: list[dict] = [{}]
    for axis, values in axes:
        points = [dict(p, **{axis: v}) for p in points for v in values]
    return points
