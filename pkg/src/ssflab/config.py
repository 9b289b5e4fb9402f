"""TOML run configuration for the command line tools.

A run file has up to six tables: [domain], [background], [perturbation],
[experiment], [mc], [tolerances].  Keys inside each table are named exactly
as the fields of the objects they build (BoxGrid, PotentialSpec, the Monte
Carlo driver arguments).  Anything the file gets wrong raises ConfigError
before any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

try:
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from .hamiltonian import BoxGrid
from .potentials import PotentialSpec

_SECTIONS = ("domain", "background", "perturbation", "experiment", "mc", "tolerances")

_DOMAIN_KEYS = ("dimension", "side", "spacing")
_POTENTIAL_KEYS = ("kind", "amplitude", "support_radius", "center", "period")
_MC_KEYS = ("t", "n_paths", "n_steps", "master_seed", "n_threads", "reach_sigmas")


class ConfigError(Exception):
    """A run file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class McConfig:
    t: float = 1.0
    n_paths: int = 10000
    n_steps: int = 128
    master_seed: int = 0
    n_threads: int = 1
    reach_sigmas: float = 5.0


@dataclass(frozen=True)
class RunConfig:
    """Validated run file plus its verbatim text for the manifest."""

    domain: BoxGrid
    background: PotentialSpec
    perturbation: PotentialSpec
    experiment: Mapping[str, object] = field(default_factory=dict)
    mc: McConfig = McConfig()
    tolerances: Mapping[str, float] = field(default_factory=dict)
    text: str = ""
    path: str = ""


def _require_table(doc: Mapping, name: str) -> Mapping:
    try:
        sec = doc[name]
    except KeyError:
        raise ConfigError(f"missing required [{name}] table") from None
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _check_keys(sec: Mapping, allowed, name: str) -> None:
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{name}], expected one of {allowed}")


def _float(sec: Mapping, key: str, name: str, default=None) -> float:
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{name}] is missing required key {key!r}")
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"[{name}].{key} must be a number, got {val!r}")
    return float(val)


def _int(sec: Mapping, key: str, name: str, default=None) -> int:
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{name}] is missing required key {key!r}")
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"[{name}].{key} must be an integer, got {val!r}")
    return val


def _domain(sec: Mapping) -> BoxGrid:
    _check_keys(sec, _DOMAIN_KEYS, "domain")
    dim = _int(sec, "dimension", "domain")
    side = _float(sec, "side", "domain")
    spacing = _float(sec, "spacing", "domain")
    try:
        return BoxGrid(dimension=dim, side=side, spacing=spacing)
    except ValueError as exc:
        raise ConfigError(f"[domain] rejected: {exc}") from None


def _potential(sec: Mapping, name: str, dimension: int) -> PotentialSpec:
    _check_keys(sec, _POTENTIAL_KEYS, name)
    kind = sec.get("kind")
    if not isinstance(kind, str):
        raise ConfigError(f"[{name}].kind must be a string")
    center = sec.get("center", [0.0] * dimension)
    if not isinstance(center, list) or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in center
    ):
        raise ConfigError(f"[{name}].center must be a list of numbers")
    if len(center) != dimension:
        raise ConfigError(
            f"[{name}].center has {len(center)} coordinates for a "
            f"{dimension}-dimensional domain"
        )
    try:
        return PotentialSpec(
            kind=kind,
            amplitude=_float(sec, "amplitude", name, 0.0),
            support_radius=_float(sec, "support_radius", name, 0.0),
            center=tuple(float(c) for c in center),
            period=_float(sec, "period", name, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[{name}] rejected: {exc}") from None


def _mc(sec: Mapping) -> McConfig:
    _check_keys(sec, _MC_KEYS, "mc")
    cfg = McConfig(
        t=_float(sec, "t", "mc", 1.0),
        n_paths=_int(sec, "n_paths", "mc", 10000),
        n_steps=_int(sec, "n_steps", "mc", 128),
        master_seed=_int(sec, "master_seed", "mc", 0),
        n_threads=_int(sec, "n_threads", "mc", 1),
        reach_sigmas=_float(sec, "reach_sigmas", "mc", 5.0),
    )
    if cfg.t <= 0.0:
        raise ConfigError("[mc].t must be positive")
    if cfg.n_paths <= 0 or cfg.n_steps <= 0 or cfg.n_threads <= 0:
        raise ConfigError("[mc] path, step, and thread counts must be positive")
    if not 0 <= cfg.master_seed < 2**64:
        raise ConfigError("[mc].master_seed must fit in an unsigned 64-bit integer")
    return cfg


def _experiment(sec: Mapping) -> dict:
    out = {}
    for key, val in sec.items():
        if isinstance(val, list):
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
                raise ConfigError(f"[experiment].{key} list entries must be numbers")
            out[key] = tuple(float(v) for v in val)
        elif isinstance(val, bool) or isinstance(val, (int, float, str)):
            out[key] = val
        else:
            raise ConfigError(f"[experiment].{key} has unsupported type {type(val).__name__}")
    return out


def _tolerances(sec: Mapping) -> dict:
    out = {}
    for key, val in sec.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"[tolerances].{key} must be a number")
        out[key] = float(val)
    return out


def parse_config(text: str, path: str = "<string>") -> RunConfig:
    """Validate TOML text into a RunConfig; raises ConfigError on any defect."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML: {exc}") from None
    for name in doc:
        if name not in _SECTIONS:
            raise ConfigError(f"unknown table [{name}], expected one of {_SECTIONS}")
    domain = _domain(_require_table(doc, "domain"))
    if "background" in doc:
        background = _potential(_require_table(doc, "background"), "background", domain.dimension)
    else:
        background = PotentialSpec(kind="zero", center=(0.0,) * domain.dimension)
    perturbation = _potential(
        _require_table(doc, "perturbation"), "perturbation", domain.dimension
    )
    experiment = _experiment(doc.get("experiment", {}))
    mc = _mc(doc.get("mc", {}))
    tolerances = _tolerances(doc.get("tolerances", {}))
    return RunConfig(
        domain=domain,
        background=background,
        perturbation=perturbation,
        experiment=experiment,
        mc=mc,
        tolerances=tolerances,
        text=text,
        path=path,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a TOML run file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    return parse_config(text, path=path)
