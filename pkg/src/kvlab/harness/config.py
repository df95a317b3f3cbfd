"""Strict sectioned key = value configuration files.

Example::

    [params]
    omega_len = 1
    n = 256
    a = 1
    D = 1
    T_star = 1

    [material]
    gamma = 1
    Gamma = 1
    f = 0
    F = (1+s)^0.5 - 1
    gamma_lo = 1
    gamma_hi = 1
    C_F = 1
    alpha = 0.5
    lip_gamma = 0
    lip_f = 0

    [initial]
    u0 = 0.2*cos(pi*x)
    u0t = 0
    theta0 = sin(pi*x)

Unknown sections or keys, duplicates and malformed numbers are errors that
name the offending line. ``#`` starts a comment.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..grid import Grid
from ..material import LawExpr, LawSyntaxError, MaterialError, MaterialSet, builtin_family, parse_law, to_text
from ..solver import InitialData, Params, Thresholds, default_dt

MODES = ("run", "certify", "sweep", "mms", "validate")
FAMILIES = ("affine_tanh", "power_sublinear", "constant")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class SweepSpec:
    deltas: tuple = ()
    repetitions: int = 1
    gamma0: float = 1.0
    gamma_shape: LawExpr = field(default_factory=lambda: parse_law("tanh(s)"))
    f_shape: LawExpr | None = None  # defaults to s/(1+s)^(1-alpha)
    gamma_shape_lip: float = 1.0
    f_shape_lip: float = 1.0
    gamma_shape_sup: float = 1.0
    gamma_scale: float = 1.0
    f_scale: float = 1.0

    def __post_init__(self):
        d = tuple(float(x) for x in self.deltas)
        if any(x < 0 or not math.isfinite(x) for x in d):
            raise ConfigError("sweep deltas must be finite and nonnegative")
        if list(d) != sorted(d):
            raise ConfigError("sweep deltas must be sorted ascending")
        object.__setattr__(self, "deltas", d)
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")


@dataclass(frozen=True)
class SimConfig:
    omega_len: float
    n: int
    a: float
    D: float
    T_star: float
    material: MaterialSet
    u0: LawExpr
    u0t: LawExpr
    theta0: LawExpr
    dt: float | None = None
    M: float | None = None
    thresholds: Thresholds = Thresholds()
    sample_stride: int = 10
    ineq_tol: float = 1e-4
    step_change_cap: float = 0.5
    max_halvings: int = 3
    mode: str = "run"
    validate_s_max: float = 100.0
    validate_samples: int = 2001
    mms_n0: int = 17
    mms_T: float = 0.25
    mms_dt_factor: float = 0.5
    sweep: SweepSpec | None = None
    material_family: tuple | None = None  # (name, ((key, value), ...)) when built from a family
    source: str | None = field(default=None, compare=False)

    @property
    def grid(self) -> Grid:
        return Grid(self.omega_len, self.n)

    @property
    def params(self) -> Params:
        return Params(self.a, self.D)

    @property
    def effective_dt(self) -> float:
        return default_dt(self.grid, self.a, self.dt)

    def initial_data(self) -> InitialData:
        return InitialData.from_laws(self.grid, self.u0, self.u0t, self.theta0)

    def with_material(self, m: MaterialSet) -> "SimConfig":
        return replace(self, material=m, material_family=None)


# ------------------------------------------------------------ schema

# key -> (kind, required, default); kind in real, int, law, xlaw, str, reals
_SCHEMA = {
    "params": {
        "omega_len": ("real", True, None),
        "n": ("int", True, None),
        "a": ("real", True, None),
        "D": ("real", True, None),
        "T_star": ("real", True, None),
        "dt": ("real", False, None),
    },
    "material": {
        "family": ("str", False, None),
        "gamma": ("law", False, None),
        "Gamma": ("law", False, None),
        "f": ("law", False, None),
        "F": ("law", False, None),
        "gamma_lo": ("real", False, None),
        "gamma_hi": ("real", False, None),
        "C_F": ("real", False, None),
        "alpha": ("real", False, None),
        "lip_gamma": ("real", False, None),
        "lip_f": ("real", False, None),
        "gamma0": ("real", False, None),
        "delta": ("real", False, None),
        "c": ("real", False, None),
    },
    "initial": {
        "u0": ("xlaw", True, None),
        "u0t": ("xlaw", True, None),
        "theta0": ("xlaw", True, None),
        "M": ("real", False, None),
    },
    "thresholds": {
        "threshold_w12": ("real", False, 1e8),
        "threshold_linf": ("real", False, 1e8),
        "pos_tol": ("real", False, 1e-10),
    },
    "run": {
        "mode": ("str", False, "run"),
        "sample_stride": ("int", False, 10),
        "ineq_tol": ("real", False, 1e-4),
        "step_change_cap": ("real", False, 0.5),
        "max_halvings": ("int", False, 3),
        "validate_s_max": ("real", False, 100.0),
        "validate_samples": ("int", False, 2001),
        "mms_n0": ("int", False, 17),
        "mms_T": ("real", False, 0.25),
        "mms_dt_factor": ("real", False, 0.5),
    },
    "sweep": {
        "deltas": ("reals", False, ()),
        "repetitions": ("int", False, 1),
        "gamma0": ("real", False, 1.0),
        "gamma_shape": ("law", False, None),
        "f_shape": ("law", False, None),
        "gamma_shape_lip": ("real", False, 1.0),
        "f_shape_lip": ("real", False, 1.0),
        "gamma_shape_sup": ("real", False, 1.0),
        "gamma_scale": ("real", False, 1.0),
        "f_scale": ("real", False, 1.0),
    },
}
_REQUIRED_SECTIONS = ("params", "material", "initial")
_CUSTOM_KEYS = ("gamma", "Gamma", "f", "F", "gamma_lo", "gamma_hi", "C_F", "alpha", "lip_gamma", "lip_f")
_FAMILY_KEYS = {
    "affine_tanh": ("gamma0", "delta", "C_F", "alpha"),
    "power_sublinear": ("gamma0", "C_F", "alpha"),
    "constant": ("c", "C_F", "alpha"),
}
_REQUIRED_FAMILY_KEYS = {"affine_tanh": ("gamma0", "delta"), "power_sublinear": (), "constant": ("c",)}

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def parse_real(text: str) -> float:
    """Decimal real literal; nan/inf and hex forms are rejected."""
    t = text.strip()
    if not _NUMBER.match(t):
        raise ValueError(f"malformed number {text!r}")
    return float(t)


def _parse_int(text: str) -> int:
    t = text.strip()
    if not re.fullmatch(r"[+-]?\d+", t):
        raise ValueError(f"malformed integer {text!r}")
    return int(t)


def parse_reals(text: str):
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return tuple(parse_real(p) for p in parts)


def _convert(kind, raw):
    if kind == "real":
        return parse_real(raw)
    if kind == "int":
        return _parse_int(raw)
    if kind == "law":
        return parse_law(raw, "s")
    if kind == "xlaw":
        return parse_law(raw, "x")
    if kind == "reals":
        return parse_reals(raw)
    return raw.strip()


def _tokenize_config(text: str, path):
    """Yield (section, key, raw value, line number); checks structure only."""
    sections = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", stripped)
        if m:
            current = m.group(1)
            if current not in _SCHEMA:
                raise ConfigError(f"unknown section [{current}]", lineno, path)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno, path)
            sections[current] = {"__line__": lineno}
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno, path)
        if current is None:
            raise ConfigError("key outside of any section", lineno, path)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in _SCHEMA[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno, path)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno, path)
        if not raw:
            raise ConfigError(f"empty value for {key!r}", lineno, path)
        sections[current][key] = (raw, lineno)
    return sections


def loads_config(text: str, path: str | None = None) -> SimConfig:
    sections = _tokenize_config(text, path)
    for name in _REQUIRED_SECTIONS:
        if name not in sections:
            raise ConfigError(f"missing section [{name}]", None, path)

    values = {}
    lines = {}
    for sec, entries in sections.items():
        vals = {}
        for key, (kind, required, default) in _SCHEMA[sec].items():
            if key in entries:
                raw, lineno = entries[key]
                lines[(sec, key)] = lineno
                try:
                    vals[key] = _convert(kind, raw)
                except LawSyntaxError as exc:
                    raise ConfigError(f"{key}: {exc}", lineno, path) from exc
                except ValueError as exc:
                    raise ConfigError(f"{key}: {exc}", lineno, path) from exc
            elif required:
                raise ConfigError(f"missing required key {key!r} in [{sec}]", entries["__line__"], path)
            else:
                vals[key] = default
        values[sec] = vals

    def err(sec, key, msg):
        return ConfigError(msg, lines.get((sec, key), sections.get(sec, {}).get("__line__")), path)

    prm = values["params"]
    for key in ("omega_len", "a", "D", "T_star"):
        if not prm[key] > 0:
            raise err("params", key, f"{key} must be positive")
    if prm["n"] < 3:
        raise err("params", "n", "n must be at least 3")
    if prm["dt"] is not None and not prm["dt"] > 0:
        raise err("params", "dt", "dt must be positive")

    material, family = _build_material(values["material"], lines, sections["material"]["__line__"], path)

    ini = values["initial"]
    if ini["M"] is not None and ini["M"] < 0:
        raise err("initial", "M", "M must be nonnegative")

    thr = values.get("thresholds") or {k: d for k, (_, _, d) in _SCHEMA["thresholds"].items()}
    try:
        thresholds = Thresholds(thr["threshold_w12"], thr["threshold_linf"], thr["pos_tol"])
    except ValueError as exc:
        raise ConfigError(str(exc), sections.get("thresholds", {}).get("__line__"), path) from exc

    run = values.get("run") or {k: d for k, (_, _, d) in _SCHEMA["run"].items()}
    if run["mode"] not in MODES:
        raise err("run", "mode", f"mode must be one of {', '.join(MODES)}")
    for key in ("sample_stride", "validate_samples", "mms_n0"):
        if run[key] < (3 if key == "mms_n0" else 1):
            raise err("run", key, f"{key} is too small")
    for key in ("ineq_tol", "step_change_cap", "validate_s_max", "mms_T", "mms_dt_factor"):
        if not run[key] > 0:
            raise err("run", key, f"{key} must be positive")
    if run["max_halvings"] < 0:
        raise err("run", "max_halvings", "max_halvings must be nonnegative")

    sweep = None
    if "sweep" in sections:
        sw = values["sweep"]
        kwargs = {k: v for k, v in sw.items() if v is not None}
        try:
            sweep = SweepSpec(**kwargs)
        except ConfigError as exc:
            raise ConfigError(str(exc), sections["sweep"]["__line__"], path) from exc

    return SimConfig(
        omega_len=prm["omega_len"],
        n=prm["n"],
        a=prm["a"],
        D=prm["D"],
        T_star=prm["T_star"],
        dt=prm["dt"],
        material=material,
        material_family=family,
        u0=ini["u0"],
        u0t=ini["u0t"],
        theta0=ini["theta0"],
        M=ini["M"],
        thresholds=thresholds,
        sweep=sweep,
        source=path,
        **{k: run[k] for k in _SCHEMA["run"]},
    )


def _build_material(mat, lines, section_line, path):
    def line_of(key):
        return lines.get(("material", key), section_line)

    family = mat["family"]
    given = [k for k, v in mat.items() if v is not None and k != "family"]
    if family is not None:
        if family not in FAMILIES:
            raise ConfigError(f"unknown family {family!r}", line_of("family"), path)
        allowed = _FAMILY_KEYS[family]
        for key in given:
            if key not in allowed:
                raise ConfigError(f"key {key!r} is not a parameter of family {family}", line_of(key), path)
        for key in _REQUIRED_FAMILY_KEYS[family]:
            if mat[key] is None:
                raise ConfigError(f"family {family} needs {key!r}", section_line, path)
        params = tuple((k, mat[k]) for k in allowed if mat[k] is not None)
        try:
            return builtin_family(family, **dict(params)), (family, params)
        except MaterialError as exc:
            key = next((k for k in ("alpha", "delta", "c", "gamma0", "C_F") if k in given and k in str(exc)), None)
            raise ConfigError(str(exc), line_of(key) if key else section_line, path) from exc
    for key in ("gamma0", "delta", "c"):
        if mat[key] is not None:
            raise ConfigError(f"key {key!r} requires a family", line_of(key), path)
    for key in _CUSTOM_KEYS:
        if mat[key] is None:
            raise ConfigError(f"missing required key {key!r} in [material]", section_line, path)
    try:
        return MaterialSet(**{k: mat[k] for k in _CUSTOM_KEYS}), None
    except MaterialError as exc:
        key = next((k for k in _CUSTOM_KEYS if str(exc).startswith(k)), None)
        if key is None:
            key = next((k for k in _CUSTOM_KEYS if k in str(exc)), None)
        raise ConfigError(str(exc), line_of(key) if key else section_line, path) from exc


def load_config(path) -> SimConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("config file not found", None, str(path)) from None
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(path)) from exc
    return loads_config(text, str(path))


# ------------------------------------------------------------ serialize


def _fmt(value):
    if isinstance(value, LawExpr):
        return to_text(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps_config(cfg: SimConfig) -> str:
    out = ["[params]"]
    for key in ("omega_len", "n", "a", "D", "T_star", "dt"):
        value = getattr(cfg, key)
        if value is not None:
            out.append(f"{key} = {_fmt(value)}")
    out += ["", "[material]"]
    if cfg.material_family is not None:
        name, params = cfg.material_family
        out.append(f"family = {name}")
        out += [f"{k} = {_fmt(v)}" for k, v in params]
    else:
        out += [f"{k} = {_fmt(getattr(cfg.material, k))}" for k in _CUSTOM_KEYS]
    out += ["", "[initial]"]
    for key in ("u0", "u0t", "theta0", "M"):
        value = getattr(cfg, key)
        if value is not None:
            out.append(f"{key} = {_fmt(value)}")
    out += ["", "[thresholds]"]
    out += [f"{f.name} = {_fmt(getattr(cfg.thresholds, f.name))}" for f in fields(cfg.thresholds)]
    out += ["", "[run]"]
    out += [f"{k} = {_fmt(getattr(cfg, k))}" for k in _SCHEMA["run"]]
    if cfg.sweep is not None:
        out += ["", "[sweep]"]
        for key in _SCHEMA["sweep"]:
            value = getattr(cfg.sweep, key)
            if value is not None and value != ():
                out.append(f"{key} = {_fmt(value)}")
    return "\n".join(out) + "\n"


def save_config(cfg: SimConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg), encoding="utf-8", newline="\n")
