"""JSON run configuration: schema, validation and conversion to package objects.

Every section is a dataclass; unknown keys are rejected with the line of the
offending key in the source document.  Node lists are either explicit JSON
arrays or ``{"start": a, "stop": b, "num": n}`` / ``{"start": a, "stop": b,
"step": s}`` objects.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import numpy as np

from .errors import ConfigError
from .fdtd import FdtdConfig
from .solver import ProblemSpec, QuadConfig
from .spectral import MaterialParams
from .transforms import BoundaryForcing, GaussianBump, InitialData, TimeProfile

SCHEMA_VERSION = 1


@dataclass
class MaterialSection:
    # JSON keys are "lambda" and "mu"; "lambda" is renamed on load
    lam: float = 2.0
    mu: float = 1.0


@dataclass
class ProfileSection:
    kind: str = "heaviside"
    rise: float = 0.0
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)


@dataclass
class ForcingSection:
    kind: str = "none"
    sigma0: float = 0.0
    profile: ProfileSection = field(default_factory=ProfileSection)
    speed: float = 0.0
    mollifier: float = 0.0


@dataclass
class BumpSection:
    amplitude: float = 0.0
    x0: float = 0.0
    y0: float = 1.0
    width: float = 0.1


@dataclass
class InitialSection:
    kind: str = "zero"
    bumps: dict = field(default_factory=dict)  # name -> list of BumpSection


@dataclass
class ProblemSection:
    initial: InitialSection = field(default_factory=InitialSection)
    forcing: ForcingSection = field(default_factory=ForcingSection)


@dataclass
class EvalSection:
    x: object = field(default_factory=lambda: [0.0])
    y: object = field(default_factory=lambda: [0.5])
    t: object = field(default_factory=lambda: [1.0])
    mode: str = "general"


@dataclass
class QuadSection:
    tol: float = 1e-6
    floor: float = 0.1
    L_l: float | None = None
    L_k: float | None = None
    clearance: float = 0.05
    path_mode: str = "low"
    max_growth: float = 9.0
    k_panel: float = 2.0
    k_notch: float = 1e-4
    y_min: float = 1e-2
    max_panel: float = 1.0
    max_panels: int = 60000
    conj_symmetry: bool = True


@dataclass
class OracleSection:
    h: float = 1 / 64
    dt: float | None = None
    X: float = 3.5
    Y: float = 3.5
    layer: float | None = None
    sponge_strength: float = 30.0
    convergence: bool = False


@dataclass
class AppendixSection:
    t_grid: object = field(default_factory=lambda: {"start": 0.0, "stop": 2.0, "num": 401})
    k_list: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    inversion_nodes: int = 64
    trace_y: float = 0.0


@dataclass
class CompareSection:
    threshold: float = 0.05


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    material: MaterialSection = field(default_factory=MaterialSection)
    problem: ProblemSection = field(default_factory=ProblemSection)
    eval: EvalSection = field(default_factory=EvalSection)
    quad: QuadSection = field(default_factory=QuadSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    appendix: AppendixSection = field(default_factory=AppendixSection)
    compare: CompareSection = field(default_factory=CompareSection)
    normalization: str = "fourier-consistent"
    denominators: str = "per-unknown"
    output: str = "out"

    # ------------------------------------------------------------------ conversion
    def material_params(self) -> MaterialParams:
        try:
            return MaterialParams(float(self.material.lam), float(self.material.mu))
        except ValueError as exc:
            raise ConfigError(f"material: {exc}") from exc

    def forcing(self) -> BoundaryForcing:
        f = self.problem.forcing
        pr = f.profile
        try:
            prof = TimeProfile(pr.kind, float(pr.rise), tuple(pr.times), tuple(pr.values))
            return BoundaryForcing(f.kind, float(f.sigma0), prof, float(f.speed), float(f.mollifier))
        except ValueError as exc:
            raise ConfigError(f"problem.forcing: {exc}") from exc

    def initial(self) -> InitialData:
        ini = self.problem.initial
        try:
            if ini.kind == "zero":
                return InitialData()
            bumps = {name: tuple(GaussianBump(**asdict(b)) for b in lst) for name, lst in ini.bumps.items()}
            return InitialData(ini.kind, bumps)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"problem.initial: {exc}") from exc

    def problem_spec(self) -> ProblemSpec:
        try:
            return ProblemSpec(self.material_params(), self.initial(), self.forcing(), self.normalization,
                               self.denominators)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def quad_config(self) -> QuadConfig:
        try:
            return QuadConfig(**asdict(self.quad))
        except ValueError as exc:
            raise ConfigError(f"quad: {exc}") from exc

    def fdtd_config(self) -> FdtdConfig:
        o = self.oracle
        try:
            return FdtdConfig(self.material_params(), X=o.X, Y=o.Y, h=o.h, dt=o.dt, layer=o.layer,
                              sponge_strength=o.sponge_strength)
        except ValueError as exc:
            raise ConfigError(f"oracle: {exc}") from exc

    def nodes(self, name):
        spec = getattr(self.eval, name) if name in ("x", "y", "t") else self.appendix.t_grid
        return node_list(spec, name)

    def to_dict(self):
        d = asdict(self)
        d["material"] = {"lambda": d["material"].pop("lam"), "mu": d["material"]["mu"]}
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def node_list(spec, name="nodes"):
    if isinstance(spec, (int, float)):
        return np.array([float(spec)])
    if isinstance(spec, list):
        try:
            return np.array([float(v) for v in spec])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: node list must contain numbers") from exc
    if isinstance(spec, dict):
        keys = set(spec)
        if keys == {"start", "stop", "num"}:
            n = int(spec["num"])
            if n < 1:
                raise ConfigError(f"{name}: num must be >= 1")
            return np.linspace(float(spec["start"]), float(spec["stop"]), n)
        if keys == {"start", "stop", "step"}:
            a, b, s = float(spec["start"]), float(spec["stop"]), float(spec["step"])
            if s <= 0:
                raise ConfigError(f"{name}: step must be positive")
            n = int(math.floor((b - a) / s + 1e-9)) + 1
            return a + s * np.arange(n)
        raise ConfigError(f"{name}: node object needs keys start/stop/num or start/stop/step")
    raise ConfigError(f"{name}: unsupported node specification")


# ---------------------------------------------------------------------- parsing

def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _build(cls, data, path, text):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    names = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        attr = "lam" if (cls is MaterialSection and key == "lambda") else key
        if attr not in names or (cls is MaterialSection and key == "lam"):
            line = _line_of(text, key)
            where = f" (line {line})" if line else ""
            raise ConfigError(f"unknown key '{path + '.' if path else ''}{key}'{where}")
        default = names[attr].default_factory() if callable(names[attr].default_factory) else None
        if is_dataclass(default):
            kwargs[attr] = _build(type(default), value, f"{path + '.' if path else ''}{key}", text)
        elif cls is InitialSection and attr == "bumps":
            if not isinstance(value, dict):
                raise ConfigError("problem.initial.bumps must be an object")
            bumps = {}
            for name, lst in value.items():
                if name not in ("u0", "u1", "v0", "v1"):
                    line = _line_of(text, name)
                    raise ConfigError(f"unknown initial field '{name}'" + (f" (line {line})" if line else ""))
                bumps[name] = [_build(BumpSection, b, f"problem.initial.bumps.{name}", text) for b in lst]
            kwargs[attr] = bumps
        else:
            kwargs[attr] = value
    return cls(**kwargs)


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate key '{k}'")
        out[k] = v
    return out


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse a JSON document (plus ``key.path=value`` overrides) into a validated RunConfig."""
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicates) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' must look like key.path=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override '{key}' descends into a non-object")
        node[parts[-1]] = value
    cfg = _build(RunConfig, data, "", text)
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version {cfg.schema_version} is not supported (expected {SCHEMA_VERSION})")
    # re-check physical invariants eagerly
    cfg.material_params()
    cfg.problem_spec()
    cfg.quad_config()
    if cfg.eval.mode not in ("general", "prop2"):
        raise ConfigError("eval.mode must be general or prop2")
    for name in ("x", "y", "t"):
        cfg.nodes(name)
    node_list(cfg.appendix.t_grid, "appendix.t_grid")
    return cfg


def load_config(path=None, overrides=()) -> RunConfig:
    text = ""
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, overrides)
