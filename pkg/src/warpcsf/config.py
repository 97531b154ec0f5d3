"""Scenario configuration: INI files in, validated immutable configs out.

A scenario file has sections [warp], [initial_curve], [solver], [checks],
optional per-check sections [check:<name>], and [outputs]. Parsing collects
every validation problem before failing so a bad file reports all of its
errors at once. ``serialize`` writes a canonical form (fixed section order,
sorted keys, repr floats) and ``parse_config_text(serialize(cfg)) == cfg``
holds exactly.
"""

from __future__ import annotations

import configparser
import difflib
import hashlib
import importlib.resources
import io
import re
from dataclasses import dataclass, field

from .curve import PRESETS, make_preset
from .errors import (
    InvalidParams,
    ParseError,
    UnknownCheck,
    UnknownFamily,
    UnknownPreset,
)
from .flow import SolverParams
from .warp import FAMILY_NAMES, WarpingFunction

_INT_RE = re.compile(r"[+-]?\d+$")

KNOWN_CHECKS = (
    "graph_time",
    "graph_preserved",
    "v_monotone",
    "lemma32",
    "comparison",
    "length_decay",
    "theta_pde",
    "kappa_pde",
    "z_drop",
    "psi_decrease",
    "kappa_trend",
)

KNOWN_FORMATS = ("csv", "json", "jsonl")

_SOLVER_KEYS = (
    "cfl", "remesh_every", "remesh_ratio_trigger", "t_end", "z_floor",
    "graph_margin", "sample_dt",
)

# warp families with their accepted parameter keys
_FAMILY_PARAM_KEYS = {
    "exponential": ("c",),
    "reciprocal": (),
    "shifted_reciprocal": ("c0",),
    "constant": ("r0",),
    "even_bowl": ("r0", "q"),
}


def _coerce(text):
    text = text.strip()
    if _INT_RE.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class CheckSpec:
    name: str
    params: tuple = ()

    def get(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class OutputSpec:
    directory: str = ""
    snapshot_every: int = 0
    formats: tuple = ("csv", "json", "jsonl")


@dataclass(frozen=True)
class ScenarioConfig:
    warp: WarpingFunction
    curve_preset: str
    curve_params: tuple
    solver: SolverParams
    checks: tuple = ()
    outputs: OutputSpec = field(default_factory=OutputSpec)

    @property
    def curve(self):
        return make_preset(self.curve_preset, **dict(self.curve_params))

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        return None

    @property
    def lemma32_c0(self):
        c = self.check("lemma32")
        return float(c.get("c0", 0.0)) if c is not None else 0.0

    @property
    def comparison_bounds(self):
        c = self.check("comparison")
        if c is None:
            return None
        return float(c.get("z_lower")), float(c.get("z_upper"))

    def with_value(self, dotted_key, value):
        """Return a copy with one ``section.key`` replaced (sweep axis)."""
        section, _, key = dotted_key.partition(".")
        if not key:
            raise InvalidParams(
                f"sweep axis must look like section.key, got {dotted_key!r}"
            )
        text = serialize(self)
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if not cp.has_section(section):
            raise InvalidParams(f"unknown config section {section!r}")
        cp.set(section, key, _fmt(value))
        buf = io.StringIO()
        cp.write(buf)
        return parse_config_text(buf.getvalue())


def config_hash(cfg):
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()


def serialize(cfg):
    lines = []
    wd = cfg.warp.config_dict
    lines.append("[warp]")
    for k in sorted(wd):
        lines.append(f"{k} = {_fmt(wd[k])}")
    lines.append("")
    lines.append("[initial_curve]")
    lines.append(f"preset = {cfg.curve_preset}")
    for k, v in sorted(cfg.curve_params):
        lines.append(f"{k} = {_fmt(v)}")
    lines.append("")
    lines.append("[solver]")
    s = cfg.solver
    for k in _SOLVER_KEYS:
        lines.append(f"{k} = {_fmt(getattr(s, k))}")
    lines.append("")
    lines.append("[checks]")
    lines.append(f"names = {', '.join(c.name for c in cfg.checks)}")
    for c in cfg.checks:
        if not c.params:
            continue
        lines.append("")
        lines.append(f"[check:{c.name}]")
        for k, v in sorted(c.params):
            lines.append(f"{k} = {_fmt(v)}")
    lines.append("")
    lines.append("[outputs]")
    o = cfg.outputs
    lines.append(f"directory = {o.directory}")
    lines.append(f"snapshot_every = {o.snapshot_every}")
    lines.append(f"formats = {', '.join(o.formats)}")
    lines.append("")
    return "\n".join(lines)


class _Collector:
    def __init__(self):
        self.errors = []
        self.kinds = []

    def add(self, kind, msg):
        self.errors.append(msg)
        self.kinds.append(kind)

    def raise_if_any(self):
        if not self.errors:
            return
        if len(self.errors) == 1 and self.kinds[0] is not ParseError:
            raise self.kinds[0](self.errors)
        raise ParseError(self.errors)


def _suggest(name, pool):
    close = difflib.get_close_matches(name, pool, n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _parse_warp(cp, col):
    if not cp.has_section("warp"):
        col.add(ParseError, "missing required section [warp]")
        return None
    items = {k: v for k, v in cp.items("warp")}
    family = items.pop("family", None)
    if family is None:
        col.add(ParseError, "[warp] needs a 'family' key")
        return None
    base_family = items.pop("base_family", None)
    extend_below = items.pop("extend_below", None)
    if family == "extended" and (base_family is None or extend_below is None):
        col.add(
            ParseError,
            "family = extended needs base_family and extend_below keys",
        )
        return None
    if base_family is not None and family != "extended":
        col.add(ParseError, "base_family is only valid with family = extended")
        return None
    fam = base_family if base_family is not None else family
    if fam not in FAMILY_NAMES or fam == "extended":
        pool = [f for f in FAMILY_NAMES if f != "extended"]
        col.add(UnknownFamily, f"unknown warp family {fam!r}" + _suggest(fam, pool))
        return None
    kwargs = {}
    allowed = set(_FAMILY_PARAM_KEYS[fam]) | {"domain_upper"}
    for k, v in items.items():
        if k not in allowed:
            col.add(ParseError, f"[warp] key {k!r} is not valid for family {fam!r}")
            return None
        kwargs[k] = _coerce(v)
    try:
        w = getattr(WarpingFunction, fam)(**kwargs)
        if family == "extended":
            w = w.extend_convex_at_infinity(float(_coerce(extend_below)))
    except (InvalidParams, TypeError, ValueError) as exc:
        col.add(ParseError, f"[warp] {exc}")
        return None
    return w


def _parse_curve(cp, col):
    if not cp.has_section("initial_curve"):
        col.add(ParseError, "missing required section [initial_curve]")
        return None, ()
    items = {k: _coerce(v) for k, v in cp.items("initial_curve")}
    preset = items.pop("preset", None)
    if preset is None:
        col.add(ParseError, "[initial_curve] needs a 'preset' key")
        return None, ()
    if preset not in PRESETS:
        col.add(
            UnknownPreset,
            f"unknown curve preset {preset!r}" + _suggest(preset, list(PRESETS)),
        )
        return None, ()
    params = tuple(sorted(items.items()))
    try:
        make_preset(preset, **items)
    except (InvalidParams, TypeError) as exc:
        col.add(ParseError, f"[initial_curve] {exc}")
        return None, ()
    return preset, params


def _parse_solver(cp, col):
    items = {k: _coerce(v) for k, v in cp.items("solver")} if cp.has_section("solver") else {}
    unknown = set(items) - set(_SOLVER_KEYS)
    for k in sorted(unknown):
        col.add(ParseError, f"[solver] unknown key {k!r}" + _suggest(k, _SOLVER_KEYS))
    if unknown:
        return None
    try:
        return SolverParams(**{k: items[k] for k in items})
    except (InvalidParams, TypeError) as exc:
        col.add(ParseError, f"[solver] {exc}")
        return None


def _parse_checks(cp, col):
    names = []
    if cp.has_section("checks"):
        raw = cp.get("checks", "names", fallback="")
        names = [s.strip() for s in raw.split(",") if s.strip()]
    checks = []
    for name in names:
        if name not in KNOWN_CHECKS:
            col.add(
                UnknownCheck,
                f"unknown check {name!r}" + _suggest(name, KNOWN_CHECKS),
            )
            continue
        sect = f"check:{name}"
        params = ()
        if cp.has_section(sect):
            params = tuple(sorted((k, _coerce(v)) for k, v in cp.items(sect)))
        checks.append(CheckSpec(name, params))
    for sect in cp.sections():
        if sect.startswith("check:") and sect[6:] not in names:
            col.add(ParseError, f"section [{sect}] has no matching entry in [checks] names")
    comparison = next((c for c in checks if c.name == "comparison"), None)
    if comparison is not None:
        for key in ("z_lower", "z_upper"):
            v = comparison.get(key)
            if not isinstance(v, (int, float)):
                col.add(ParseError, f"[check:comparison] needs numeric {key!r}")
    return tuple(checks)


def _parse_outputs(cp, col):
    if not cp.has_section("outputs"):
        return OutputSpec()
    items = {k: v for k, v in cp.items("outputs")}
    directory = items.pop("directory", "")
    snapshot_every = _coerce(items.pop("snapshot_every", "0"))
    fmt_raw = items.pop("formats", ",".join(KNOWN_FORMATS))
    for k in sorted(items):
        col.add(ParseError, f"[outputs] unknown key {k!r}")
    fmts = tuple(s.strip() for s in fmt_raw.split(",") if s.strip())
    for f in fmts:
        if f not in KNOWN_FORMATS:
            col.add(ParseError, f"[outputs] unknown format {f!r}" + _suggest(f, KNOWN_FORMATS))
    if not isinstance(snapshot_every, int) or snapshot_every < 0:
        col.add(ParseError, "[outputs] snapshot_every must be a non-negative integer")
        snapshot_every = 0
    return OutputSpec(directory=directory, snapshot_every=snapshot_every, formats=fmts)


def parse_config_text(text):
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError([f"malformed config: {exc}"])
    if not cp.sections():
        raise ParseError(["empty config: no sections found"])
    col = _Collector()
    w = _parse_warp(cp, col)
    preset, params = _parse_curve(cp, col)
    solver = _parse_solver(cp, col)
    checks = _parse_checks(cp, col)
    outputs = _parse_outputs(cp, col)
    known = {"warp", "initial_curve", "solver", "checks", "outputs"}
    for sect in cp.sections():
        if sect not in known and not sect.startswith("check:"):
            col.add(ParseError, f"unknown section [{sect}]")
    col.raise_if_any()
    return ScenarioConfig(
        warp=w,
        curve_preset=preset,
        curve_params=params,
        solver=solver,
        checks=checks,
        outputs=outputs,
    )


def parse_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError([f"cannot read config {path!r}: {exc}"])
    return parse_config_text(text)


def shipped_scenarios():
    """Names of the ready-made scenario configs bundled with the package."""
    root = importlib.resources.files("warpcsf") / "scenarios"
    return sorted(p.name[: -len(".cfg")] for p in root.iterdir() if p.name.endswith(".cfg"))


def scenario_path(name):
    """Filesystem path of a bundled scenario config, by bare name."""
    p = importlib.resources.files("warpcsf") / "scenarios" / f"{name}.cfg"
    if not p.is_file():
        raise ParseError(
            [f"no bundled scenario named {name!r}; available: {', '.join(shipped_scenarios())}"]
        )
    return str(p)


__all__ = [
    "CheckSpec",
    "OutputSpec",
    "ScenarioConfig",
    "KNOWN_CHECKS",
    "parse_config",
    "parse_config_text",
    "serialize",
    "config_hash",
    "shipped_scenarios",
    "scenario_path",
]
