"""Run configuration: a flat ``section.key = value`` text file.

Example::

    case = Case1a
    material.mu = 1.0
    material.lambda = 1.0
    material.gamma = 0.5
    mesh.nx = 64
    sweep.beta = 0.5, 1, 2

``#`` starts a comment. ``material.mu``, ``material.lambda`` and
``material.gamma`` are required; everything else has a default. Any key can be
overridden from the environment as ``SLCRACK_<SECTION>__<KEY>``, e.g.
``SLCRACK_MATERIAL__BETA=2`` or ``SLCRACK_CASE=Case2b``.
"""

from __future__ import annotations

import configparser
import enum
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .assembly import LoadKind, LoadProfile
from .constitutive import FiberAxis, MaterialModel
from .picard import PicardConfig
from .solver import SolverConfig

ENV_PREFIX = "SLCRACK_"

REQUIRED_KEYS = ("material.mu", "material.lambda", "material.gamma")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class Case(str, enum.Enum):
    CASE_1A = "Case1a"
    CASE_1B = "Case1b"
    CASE_2A = "Case2a"
    CASE_2B = "Case2b"
    UNIFORM_X = "UniformX"
    UNIFORM_Y = "UniformY"
    CUSTOM = "Custom"

    @classmethod
    def parse(cls, value) -> "Case":
        for c in cls:
            if c.value.lower() == str(value).strip().lower():
                return c
        raise ValueError(f"unknown case {value!r}; expected one of {[c.value for c in cls]}")


# Fiber axis and load shape fixed by each named benchmark case.
CASE_PRESETS: dict[Case, tuple[FiberAxis, LoadKind]] = {
    Case.CASE_1A: (FiberAxis.X, LoadKind.SLOPE),
    Case.CASE_1B: (FiberAxis.Y, LoadKind.SLOPE),
    Case.CASE_2A: (FiberAxis.X, LoadKind.SINE),
    Case.CASE_2B: (FiberAxis.Y, LoadKind.SINE),
    Case.UNIFORM_X: (FiberAxis.X, LoadKind.UNIFORM),
    Case.UNIFORM_Y: (FiberAxis.Y, LoadKind.UNIFORM),
}


@dataclass(frozen=True)
class MeshSpec:
    width: float = 2.0
    height: float = 1.0
    crack_length: float = 1.0
    nx: int = 64
    ny: int = 32
    grading: float = 2.0


@dataclass(frozen=True)
class SweepSpec:
    alpha: tuple[float, ...] | None = None
    beta: tuple[float, ...] | None = None
    sigma_t: tuple[float, ...] | None = None


@dataclass(frozen=True)
class CompareSpec:
    loads: tuple[LoadKind, ...] = (LoadKind.UNIFORM, LoadKind.SLOPE, LoadKind.SINE)
    sigma_t: tuple[float, ...] = (0.001, 0.01, 0.1)
    fiber_axes: tuple[FiberAxis, ...] | None = None


@dataclass(frozen=True)
class RunConfig:
    case: Case = Case.CASE_1A
    material: MaterialModel = field(default_factory=MaterialModel)
    load: LoadProfile = field(default_factory=LoadProfile)
    mesh: MeshSpec = field(default_factory=MeshSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    picard: PicardConfig = field(default_factory=PicardConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    compare: CompareSpec = field(default_factory=CompareSpec)
    output_dir: Path = Path("output")

    @property
    def case_name(self) -> str:
        return self.case.value

    def with_case(self, case: Case) -> "RunConfig":
        fiber, kind = CASE_PRESETS[case]
        return replace(self, case=case, material=self.material.replace(fiber_axis=fiber),
                       load=LoadProfile(kind, self.load.sigma_t))


def _float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", key) from None


def _int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", key) from None


def _floats(key, raw):
    items = [t.strip() for t in raw.replace(";", ",").split(",") if t.strip()]
    if not items:
        raise ConfigError("sweep list must not be empty", key)
    return tuple(_float(key, t) for t in items)


def _enum_list(key, raw, parse):
    items = [t.strip() for t in raw.split(",") if t.strip()]
    if not items:
        raise ConfigError("list must not be empty", key)
    try:
        return tuple(parse(t) for t in items)
    except ValueError as exc:
        raise ConfigError(str(exc), key) from None


# key -> (group, attribute, converter)
_SCHEMA = {
    "case": (None, "case", lambda k, v: Case.parse(v)),
    "output_dir": (None, "output_dir", lambda k, v: Path(v)),
    "material.mu": ("material", "mu", _float),
    "material.lambda": ("material", "lam", _float),
    "material.gamma": ("material", "gamma", _float),
    "material.fiber_axis": ("material", "fiber_axis", lambda k, v: FiberAxis.parse(v)),
    "material.alpha": ("material", "alpha", _float),
    "material.beta": ("material", "beta", _float),
    "load.kind": ("load", "kind", lambda k, v: LoadKind.parse(v)),
    "load.sigma_t": ("load", "sigma_t", _float),
    "mesh.width": ("mesh", "width", _float),
    "mesh.height": ("mesh", "height", _float),
    "mesh.crack_length": ("mesh", "crack_length", _float),
    "mesh.nx": ("mesh", "nx", _int),
    "mesh.ny": ("mesh", "ny", _int),
    "mesh.grading": ("mesh", "grading", _float),
    "solver.method": ("solver", "method", lambda k, v: v),
    "solver.rel_tol": ("solver", "rel_tol", _float),
    "solver.max_iter": ("solver", "max_iter", _int),
    "solver.preconditioner": ("solver", "preconditioner", lambda k, v: v),
    "picard.tol": ("picard", "tol", _float),
    "picard.max_iter": ("picard", "max_iter", _int),
    "picard.stagnation_window": ("picard", "stagnation_window", _int),
    "picard.stagnation_rel": ("picard", "stagnation_rel", _float),
    "picard.relaxation": ("picard", "relaxation", _float),
    "sweep.alpha": ("sweep", "alpha", _floats),
    "sweep.beta": ("sweep", "beta", _floats),
    "sweep.sigma_t": ("sweep", "sigma_t", _floats),
    "compare.loads": ("compare", "loads", lambda k, v: _enum_list(k, v, LoadKind.parse)),
    "compare.sigma_t": ("compare", "sigma_t", _floats),
    "compare.fiber_axes": ("compare", "fiber_axes", lambda k, v: _enum_list(k, v, FiberAxis.parse)),
}

_DEFAULT_MATERIAL = {"alpha": 1.0, "beta": 1.0, "fiber_axis": FiberAxis.X}


def parse_text(text: str) -> dict[str, str]:
    """Raw ``key -> value`` pairs from the flat config format."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return {k.strip(): v.strip() for k, v in parser["run"].items()}


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower().replace("__", ".")
            out[key] = value
    return out


def build_config(raw: Mapping[str, str]) -> RunConfig:
    """Validate raw pairs and build a :class:`RunConfig`."""
    unknown = sorted(set(raw) - set(_SCHEMA))
    if unknown:
        raise ConfigError("unknown configuration key", unknown[0])
    for key in REQUIRED_KEYS:
        if key not in raw or raw[key] == "":
            raise ConfigError("required field is missing", key)

    groups: dict[str | None, dict] = {None: {}, "material": dict(_DEFAULT_MATERIAL), "load": {},
                                      "mesh": {}, "solver": {}, "picard": {}, "sweep": {}, "compare": {}}
    for key, value in raw.items():
        group, attr, conv = _SCHEMA[key]
        try:
            groups[group][attr] = conv(key, value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc), key) from None

    case = groups[None].get("case", Case.CASE_1A)
    if case in CASE_PRESETS:
        fiber, kind = CASE_PRESETS[case]
        if "fiber_axis" in groups["material"] and "material.fiber_axis" in raw and groups["material"]["fiber_axis"] is not fiber:
            raise ConfigError(f"{case.value} requires fiber_axis={fiber.value}", "material.fiber_axis")
        if "kind" in groups["load"] and groups["load"]["kind"] is not kind:
            raise ConfigError(f"{case.value} requires load kind {kind.value}", "load.kind")
        groups["material"]["fiber_axis"] = fiber
        groups["load"]["kind"] = kind

    def make(cls, group, prefix):
        try:
            return cls(**groups[group])
        except ValueError as exc:
            raise ConfigError(str(exc), prefix) from None

    return RunConfig(
        case=case,
        material=make(MaterialModel, "material", "material"),
        load=make(LoadProfile, "load", "load"),
        mesh=make(MeshSpec, "mesh", "mesh"),
        solver=make(SolverConfig, "solver", "solver"),
        picard=make(PicardConfig, "picard", "picard"),
        sweep=SweepSpec(**groups["sweep"]),
        compare=CompareSpec(**groups["compare"]),
        output_dir=groups[None].get("output_dir", Path("output")),
    )


def load_config(path: Path | str, environ: Mapping[str, str] | None = None) -> RunConfig:
    """Read a config file and apply ``SLCRACK_*`` environment overrides."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    raw = parse_text(text)
    raw.update(env_overrides(environ))
    return build_config(raw)
