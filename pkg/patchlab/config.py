"""
Scenario configuration

Scenario files are INI documents. Every accepted section and key is listed
in SCHEMA with its type and default; anything else is rejected with the
line it appears on. ScenarioConfig keeps only the keys a file sets, so
serializing and re-parsing gives back the same config.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError
from .motion import (
    CriticalLength,
    DomainMotion,
    Drifting,
    ExponentialApproach,
    Fixed,
    PowerApproach,
    Tabulated,
)
from .quadrature import QuadratureConfig
from .reaction import Linear, Logistic, PiecewiseLinearKPP, ReactionTerm
from .solver import Bump, Grid, InitialProfile, Scenario, SineMode, TabulatedProfile

# =============== CONFIGURATION ===============

# Where artifacts go when --out is not given
OUTPUT_DIR = Path("output")

# Lossless decimal formatting for every CSV column
FLOAT_FORMAT = "%.17g"

# Exit codes: classify verdicts first, then failures
EXIT_PERSISTS = 0
EXIT_EXTINCT = 1
EXIT_INCONCLUSIVE = 2
EXIT_ERROR = 3

MOTION_FAMILIES = ("fixed", "exponential", "power", "drifting", "tabulated")
REACTION_KINDS = ("linear", "logistic", "piecewise")
INITIAL_KINDS = ("sine", "bump", "tabulated")


@dataclass(frozen=True)
class Key:
    """One accepted key: type is float, int, str, bool, floats or auto (float or 'auto')"""
    type: str
    default: Any = None
    positive: bool = False
    choices: Tuple[str, ...] = ()


SCHEMA: Dict[str, Dict[str, Key]] = {
    "physics": {
        "D": Key("float", 1.0, positive=True),
    },
    "motion": {
        "family": Key("str", "fixed", choices=MOTION_FAMILIES),
        "inner": Key("str", "fixed", choices=tuple(f for f in MOTION_FAMILIES if f != "drifting")),
        "length": Key("auto", "auto", positive=True),
        "L_crit": Key("auto", "auto", positive=True),
        "epsilon": Key("float", 0.3, positive=True),
        "alpha": Key("float", 1.0, positive=True),
        "k": Key("float", 2.0, positive=True),
        "c": Key("float", 0.0),
        "A0": Key("float", 0.0),
        "table": Key("str"),
    },
    "reaction": {
        "kind": Key("str", "linear", choices=REACTION_KINDS),
        "slope": Key("float", 1.0, positive=True),
        "k0": Key("float", 0.25, positive=True),
    },
    "initial": {
        "kind": Key("str", "sine", choices=INITIAL_KINDS),
        "amplitude": Key("float", 1.0),
        "center": Key("auto", "auto", positive=True),
        "width": Key("auto", "auto", positive=True),
        "height": Key("float", 1.0),
        "table": Key("str"),
    },
    "grid": {
        "N": Key("int", 256, positive=True),
        "dt": Key("float", 1e-3, positive=True),
        "cfl": Key("float", None, positive=True),
        "outputs": Key("int", 200, positive=True),
        "T": Key("float", 10.0, positive=True),
    },
    "quadrature": {
        "tol": Key("float", 1e-10, positive=True),
        "horizon": Key("float", 1e4, positive=True),
        "margin": Key("float", 0.10, positive=True),
        "abs_growth": Key("float", 1.0, positive=True),
        "bounded_tol": Key("float", 1e-2, positive=True),
        "floor_rtol": Key("float", 1e-2, positive=True),
    },
    "envelope": {
        "times": Key("floats", ()),
        "origin": Key("float", 0.0),
        "a": Key("float", None, positive=True),
        "b": Key("float", None),
    },
    "steady": {
        "lengths": Key("floats", ()),
        "epsilons": Key("floats", ()),
        "n_half": Key("int", 1000, positive=True),
    },
    "sweep": {
        "parameter": Key("str", "motion.k"),
        "values": Key("floats", ()),
        "simulate": Key("bool", False),
    },
}


# =============== PARSING ===============

def _locate(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """1-based line of a section header, or of a key inside that section"""
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = re.match(r"^\[([^\]]+)\]", line)
        if header:
            current = header.group(1).strip()
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section:
            name = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            if name == key:
                return number
    return None


def _convert(raw: str, entry: Key, section: str, key: str, line: Optional[int]) -> Any:
    text = raw.strip()
    try:
        if entry.type == "float":
            value = float(text)
        elif entry.type == "int":
            value = int(text)
        elif entry.type == "bool":
            lowered = text.lower()
            if lowered not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(f"not a boolean: {text!r}")
            value = lowered in ("true", "yes", "1")
        elif entry.type == "floats":
            value = tuple(float(v) for v in text.replace(",", " ").split()) if text else ()
        elif entry.type == "auto":
            value = "auto" if text.lower() == "auto" else float(text)
        else:
            value = text
    except ValueError as exc:
        raise ConfigError(f"invalid {entry.type} value {text!r} ({exc})", section, key, line) from None

    if entry.choices and value not in entry.choices:
        raise ConfigError(f"{value!r} is not one of {', '.join(entry.choices)}", section, key, line)
    if entry.positive:
        numbers = value if isinstance(value, tuple) else (value,)
        for v in numbers:
            if isinstance(v, (int, float)) and not isinstance(v, bool) and not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"must be positive and finite, got {v}", section, key, line)
    return value


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


@dataclass(frozen=True)
class ScenarioConfig:
    """Explicitly set keys, section -> key -> typed value"""
    values: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    source: Optional[str] = field(default=None, compare=False)

    @classmethod
    def parse(cls, text: str, source: Optional[str] = None) -> "ScenarioConfig":
        parser = configparser.ConfigParser(
            interpolation=None, inline_comment_prefixes=("#", ";"), default_section="__unused__"
        )
        parser.optionxform = str
        try:
            parser.read_string(text, source=source or "<config>")
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}",
                              line=line) from None

        values: Dict[str, Dict[str, Any]] = {}
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError("unknown section", section, line=_locate(text, section))
            entries = {}
            for key, raw in parser.items(section):
                line = _locate(text, section, key)
                if key not in SCHEMA[section]:
                    raise ConfigError("unknown key", section, key, line)
                entries[key] = _convert(raw, SCHEMA[section][key], section, key, line)
            values[section] = {k: entries[k] for k in SCHEMA[section] if k in entries}
        ordered = {s: values[s] for s in SCHEMA if s in values}
        return cls(ordered, source)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.parse(path.read_text(encoding="utf-8"), str(path))

    def to_text(self) -> str:
        lines: List[str] = []
        for section, entries in self.values.items():
            if lines:
                lines.append("")
            lines.append(f"[{section}]")
            lines += [f"{key} = {_format(value)}" for key, value in entries.items()]
        return "\n".join(lines) + "\n"

    def get(self, section: str, key: str) -> Any:
        if key not in SCHEMA.get(section, {}):
            raise KeyError(f"{section}.{key}")
        return self.values.get(section, {}).get(key, SCHEMA[section][key].default)

    def is_set(self, section: str, key: str) -> bool:
        return key in self.values.get(section, {})

    def with_value(self, dotted: str, value: Any) -> "ScenarioConfig":
        """Copy with one key replaced, e.g. with_value("motion.k", 1.5)"""
        section, _, key = dotted.partition(".")
        if key not in SCHEMA.get(section, {}):
            raise ConfigError("unknown sweep parameter", section, key)
        entry = SCHEMA[section][key]
        if entry.type == "int" and isinstance(value, float) and value.is_integer():
            value = int(value)
        checked = _convert(_format(value), entry, section, key, None)
        values = {s: dict(e) for s, e in self.values.items()}
        values.setdefault(section, {})[key] = checked
        values[section] = {k: values[section][k] for k in SCHEMA[section] if k in values[section]}
        return ScenarioConfig({s: values[s] for s in SCHEMA if s in values}, self.source)

    def resolved(self) -> Dict[str, Dict[str, Any]]:
        """Every key of every section, defaults filled in"""
        out = {}
        for section, keys in SCHEMA.items():
            out[section] = {}
            for key in keys:
                value = self.get(section, key)
                out[section][key] = list(value) if isinstance(value, tuple) else value
        return out


# =============== BUILDERS ===============

def build_reaction(cfg: ScenarioConfig) -> ReactionTerm:
    kind, slope = cfg.get("reaction", "kind"), cfg.get("reaction", "slope")
    if kind == "linear":
        return Linear(slope)
    if kind == "logistic":
        return Logistic(slope)
    k0 = cfg.get("reaction", "k0")
    if not k0 < 1:
        raise ConfigError(f"k0 must be below 1, got {k0}", "reaction", "k0")
    return PiecewiseLinearKPP(slope, k0)


def critical_length(cfg: ScenarioConfig, c: float = 0.0) -> CriticalLength:
    return CriticalLength(cfg.get("physics", "D"), cfg.get("reaction", "slope"), c)


def _resolve_base(path: Optional[Path], value: str) -> Path:
    p = Path(value)
    if not p.is_absolute() and path is not None:
        p = path.parent / p
    return p


def _base_motion(cfg: ScenarioConfig, family: str, c: float) -> DomainMotion:
    L_crit = cfg.get("motion", "L_crit")
    if L_crit == "auto":
        L_crit = critical_length(cfg, c).value
    if family == "fixed":
        length = cfg.get("motion", "length")
        A0 = 0.0 if cfg.get("motion", "family") == "drifting" else cfg.get("motion", "A0")
        return Fixed(L_crit if length == "auto" else length, A0)
    if family == "exponential":
        return ExponentialApproach(L_crit, cfg.get("motion", "epsilon"), cfg.get("motion", "alpha"))
    if family == "power":
        return PowerApproach(L_crit, cfg.get("motion", "epsilon"), cfg.get("motion", "k"))
    table = cfg.get("motion", "table")
    if not table:
        raise ConfigError("tabulated motion needs a table path", "motion", "table")
    source = Path(cfg.source) if cfg.source else None
    return Tabulated.from_csv(_resolve_base(source, table))


def build_motion(cfg: ScenarioConfig) -> DomainMotion:
    """Motion from [motion]; L_crit = auto means the (drifting) critical length"""
    family = cfg.get("motion", "family")
    if family == "drifting":
        c = cfg.get("motion", "c")
        inner = _base_motion(cfg, cfg.get("motion", "inner"), c)
        return Drifting(cfg.get("motion", "A0"), c, inner)
    return _base_motion(cfg, family, 0.0)


def build_initial(cfg: ScenarioConfig, L0: float) -> InitialProfile:
    kind = cfg.get("initial", "kind")
    if kind == "sine":
        return SineMode(cfg.get("initial", "amplitude"))
    if kind == "bump":
        center, width = cfg.get("initial", "center"), cfg.get("initial", "width")
        return Bump(
            0.5 * L0 if center == "auto" else center,
            0.5 * L0 if width == "auto" else width,
            cfg.get("initial", "height"),
        )
    table = cfg.get("initial", "table")
    if not table:
        raise ConfigError("tabulated initial profile needs a table path", "initial", "table")
    source = Path(cfg.source) if cfg.source else None
    return TabulatedProfile.from_csv(_resolve_base(source, table))


def build_quadrature(cfg: ScenarioConfig) -> QuadratureConfig:
    return QuadratureConfig(**{key: cfg.get("quadrature", key) for key in SCHEMA["quadrature"]})


def build_grid(cfg: ScenarioConfig) -> Grid:
    return Grid(
        N=cfg.get("grid", "N"),
        dt=cfg.get("grid", "dt"),
        cfl=cfg.get("grid", "cfl"),
        n_out=cfg.get("grid", "outputs"),
    )


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    motion = build_motion(cfg)
    return Scenario(
        motion=motion,
        reaction=build_reaction(cfg),
        D=cfg.get("physics", "D"),
        initial=build_initial(cfg, motion.initial_length),
        T=cfg.get("grid", "T"),
        grid=build_grid(cfg),
        quad=build_quadrature(cfg),
    )


# =============== HELPER FUNCTIONS ===============

def get_output_dir(out: Optional[str] = None) -> Path:
    """Output directory for a run: --out if given, else OUTPUT_DIR"""
    return Path(out) if out else OUTPUT_DIR


def ensure_directories(out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out
