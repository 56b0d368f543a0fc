"""Run configuration: a YAML document plus ``SIDEBAND_*`` environment overrides.

Recognized keys (all optional, defaults in brackets)::

    experiment: name                       [run]
    preparation:
      beta_re, beta_im: EOM displacement   [0, 0]
      kappa: lower-sideband attenuation    [1]
      beta0_sq: modulation energy          [0]
    cavity:
      r0_intensity                         [0.04]
      bandwidth_mhz                        [6.0]
      coupling: over | under               [over]
      eta: mode matching                   [1]
    omega_mhz: sideband frequency          [17.0]
    gamma_mhz: must equal cavity.bandwidth_mhz when both are given
    phase_grid: {start, stop, count}       [0, 2pi, 100]
    detuning_grid: {start, stop, count}    [-8, 8, 161]
    visibility                             [1]
    noise: {samples_per_point, seed}       [absent: noiseless]
    workers                                [1]
    output_dir                             [out]

Any key can be overridden with ``SIDEBAND_<PATH>`` where ``PATH`` is the
upper-cased key path joined by ``_`` (``SIDEBAND_CAVITY_ETA``).  Leaf names
that occur once may be used alone (``SIDEBAND_ETA``, ``SIDEBAND_KAPPA``).
Values are parsed as YAML scalars.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cavity import CavityParams
from .detection import NoiseModel
from .errors import SidebandError
from .preparation import PreparationParams

ENV_PREFIX = "SIDEBAND_"

DEFAULTS = {
    "experiment": "run",
    "preparation": {"beta_re": 0.0, "beta_im": 0.0, "kappa": 1.0, "beta0_sq": 0.0},
    "cavity": {"r0_intensity": 0.04, "bandwidth_mhz": 6.0, "coupling": "over", "eta": 1.0},
    "omega_mhz": 17.0,
    "gamma_mhz": None,
    "phase_grid": {"start": 0.0, "stop": 2 * np.pi, "count": 100},
    "detuning_grid": {"start": -8.0, "stop": 8.0, "count": 161},
    "visibility": 1.0,
    "noise": {"samples_per_point": None, "seed": None},
    "workers": 1,
    "output_dir": "out",
}


class ConfigError(SidebandError):
    pass


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "run"
    preparation: PreparationParams = field(default_factory=PreparationParams)
    cavity: CavityParams = field(default_factory=lambda: CavityParams(0.04, 6.0))
    omega_mhz: float = 17.0
    gamma_mhz: float = 6.0
    phase_grid: GridSpec = GridSpec(0.0, 2 * np.pi, 100)
    detuning_grid: GridSpec = GridSpec(-8.0, 8.0, 161)
    visibility: float = 1.0
    noise: NoiseModel | None = None
    workers: int = 1
    output_dir: Path = Path("out")

    @property
    def omega_over_gamma(self) -> float:
        return self.omega_mhz / self.gamma_mhz


def _leaf_paths(tree: dict, prefix=()):
    for k, v in tree.items():
        if isinstance(v, dict):
            yield from _leaf_paths(v, prefix + (k,))
        else:
            yield prefix + (k,)


def _env_overrides(doc: dict, environ) -> None:
    paths = list(_leaf_paths(DEFAULTS))
    leaf_count: dict[str, int] = {}
    for p in paths:
        leaf_count[p[-1]] = leaf_count.get(p[-1], 0) + 1
    for p in paths:
        names = [ENV_PREFIX + "_".join(p).upper()]
        if len(p) > 1 and leaf_count[p[-1]] == 1:
            names.append(ENV_PREFIX + p[-1].upper())
        for name in names:
            if name in environ:
                node = doc
                for k in p[:-1]:
                    node = node.setdefault(k, {})
                    if not isinstance(node, dict):
                        raise ConfigError(f"{name}: config key {'.'.join(p[:-1])} is not a mapping")
                try:
                    node[p[-1]] = yaml.safe_load(environ[name])
                except yaml.YAMLError as exc:
                    raise ConfigError(f"{name}: cannot parse value ({exc})") from None
                break


def _merge(base: dict, over: dict, where=()) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {'.'.join(where + (k,))!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {'.'.join(where + (k,))!r} must be a mapping")
            out[k] = _merge(base[k], v, where + (k,))
        else:
            out[k] = v
    return out


def _num(doc, path, kind=float):
    node = doc
    for k in path:
        node = node[k]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"{'.'.join(path)} must be a number, got {node!r}")
    if kind is int:
        if float(node) != int(node):
            raise ConfigError(f"{'.'.join(path)} must be an integer, got {node!r}")
        return int(node)
    return float(node)


def _grid(doc, key, minimum=4) -> GridSpec:
    g = GridSpec(_num(doc, (key, "start")), _num(doc, (key, "stop")), _num(doc, (key, "count"), int))
    if g.count < minimum:
        raise ConfigError(f"{key}.count must be >= {minimum}, got {g.count}")
    return g


def build_config(doc: dict) -> RunConfig:
    """Validate a merged configuration mapping."""
    try:
        prep = PreparationParams(
            complex(_num(doc, ("preparation", "beta_re")), _num(doc, ("preparation", "beta_im"))),
            _num(doc, ("preparation", "kappa")),
            _num(doc, ("preparation", "beta0_sq")),
        )
        cav = doc["cavity"]
        cavity = CavityParams(
            _num(doc, ("cavity", "r0_intensity")),
            _num(doc, ("cavity", "bandwidth_mhz")),
            str(cav["coupling"]),
            _num(doc, ("cavity", "eta")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    omega = _num(doc, ("omega_mhz",))
    gamma = cavity.bandwidth_mhz
    if doc.get("gamma_mhz") is not None:
        gamma = _num(doc, ("gamma_mhz",))
        if gamma != cavity.bandwidth_mhz:
            raise ConfigError(f"gamma_mhz ({gamma}) disagrees with cavity.bandwidth_mhz ({cavity.bandwidth_mhz})")
    if not gamma > 0:
        raise ConfigError("gamma_mhz must be positive")
    visibility = _num(doc, ("visibility",))
    if not 0 < visibility <= 1:
        raise ConfigError(f"visibility must lie in (0, 1], got {visibility}")
    noise = None
    n, seed = doc["noise"]["samples_per_point"], doc["noise"]["seed"]
    if n is not None:
        if seed is None:
            raise ConfigError("noise.seed is required when noise.samples_per_point is set")
        try:
            noise = NoiseModel(_num(doc, ("noise", "samples_per_point"), int), _num(doc, ("noise", "seed"), int))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    workers = _num(doc, ("workers",), int)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return RunConfig(
        experiment=str(doc["experiment"]),
        preparation=prep,
        cavity=cavity,
        omega_mhz=omega,
        gamma_mhz=gamma,
        phase_grid=_grid(doc, "phase_grid"),
        detuning_grid=_grid(doc, "detuning_grid"),
        visibility=visibility,
        noise=noise,
        workers=workers,
        output_dir=Path(str(doc["output_dir"])),
    )


def load_config(path=None, environ=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the YAML file, then environment, then explicit overrides."""
    doc = copy.deepcopy(DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            user = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = f":{mark.line + 1}" if mark is not None else ""
            raise ConfigError(f"{path}{line}: invalid YAML ({getattr(exc, 'problem', exc)})") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        doc = _merge(doc, user)
    _env_overrides(doc, os.environ if environ is None else environ)
    if overrides:
        doc = _merge(doc, overrides)
    return build_config(doc)
