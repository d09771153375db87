"""Scenario configuration: TOML parsing, validation and a canonical emitter.

Grammar (all sections optional except ``[scenario]``)::

    [scenario]
    id = "fig6_below"
    model = "class_a_dc"        # class_a | class_a_dc | class_b_full | class_b_reduced | coi
    u_bar = "175 kW"            # converter operating load
    t_end = 4.0
    tol = 1e-9
    dt_out = 0.002
    theta = 0.9
    expected_outcome = "collapsed"  # optional, outcome reported by the experiment
    open_question = "..."       # optional, marks a known unresolved case

    [converter]                 # overrides of the default parameter table
    G_c = "0.83 mS"

    [machine]
    [network]

    [coi]                       # only for model = "coi"
    machines = 3
    converters = 3

    [initial]                   # physical state overrides of the operating point
    v_dc = 2400.0

    [[events]]
    time = 0.2
    kind = "state_reset"        # or "load_step"
    target = "v_dc"             # state name, or bus "c" / "g" / "total"
    value = {ref = "x_bar_2", scale = 0.999}

Quantities may be numbers in SI base units or strings with an SI prefix and
unit, e.g. ``"0.83 mS"``, ``"175 kW"``, ``"8 mF"``. Symbolic event values
(``ref`` one of x_bar_1, x_bar_2, x_m, x_tilde) are resolved against the
converter's dc-link characteristic at ``u_bar``.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from gfcstab.errors import ConfigError, GfcStabError
from gfcstab.model import ConverterParams, MachineParams, NetworkParams

MODELS = ("class_a", "class_a_dc", "class_b_full", "class_b_reduced", "coi")
STATES = {
    "class_a": ("v_dc", "phi", "omega_g_dev", "P_tau_g"),
    "class_a_dc": ("v_dc",),
    "class_b_full": ("v_dc", "phi", "omega_g_dev", "P_tau_g"),
    "class_b_reduced": ("omega_g_dev", "P_tau_g_dev"),
    "coi": ("omega_coi_dev", "P_tau_gT_dev"),
}
BUSES = {
    "class_a": ("c", "g"),
    "class_a_dc": ("c",),
    "class_b_full": ("c", "g"),
    "class_b_reduced": ("total",),
    "coi": ("total",),
}
OUTCOMES = ("converged", "collapsed", "diverged", "inconclusive")
REFS = ("x_bar_1", "x_bar_2", "x_m", "x_tilde")

UNITS = {
    "converter": {"C_c": "F", "G_c": "S", "k_c": "S", "i_dc_max": "A", "v_dc_star": "V",
                  "P_c_star": "W", "droop_gain_a": "", "k_m": "rad/s/V"},
    "machine": {"H_g": "s", "tau_g": "s", "d_pg": "", "P_g_star": "W", "omega_star": "rad/s"},
    "network": {"b": "", "P_Lg": "W", "P_Lc": "W", "S_base": "W"},
    "initial": {"v_dc": "V", "phi": "rad", "omega_g_dev": "", "P_tau_g": "",
                "P_tau_g_dev": "", "omega_coi_dev": "", "P_tau_gT_dev": ""},
}
SCENARIO_KEYS = {"id": str, "model": str, "description": str, "u_bar": "W", "t_end": "s",
                 "tol": "", "dt_out": "s", "theta": "", "expected_outcome": str, "open_question": str}
NEGLECTED = {"tau_c": "the dc source time constant is neglected in these models"}

_PREFIX = {"": 1.0, "p": 1e-12, "n": 1e-9, "u": 1e-6, "\u00b5": 1e-6, "m": 1e-3,
           "k": 1e3, "M": 1e6}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


@dataclass(frozen=True)
class EventSpec:
    time: float
    kind: str
    target: str
    value: float | None = None
    ref: str | None = None
    scale: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    id: str
    model: str
    converter: ConverterParams = field(default_factory=ConverterParams)
    machine: MachineParams = field(default_factory=MachineParams)
    network: NetworkParams = field(default_factory=NetworkParams)
    u_bar: float = 175e3
    t_end: float = 4.0
    tol: float = 1e-9
    dt_out: float = 0.0
    theta: float = 0.9
    initial: tuple[tuple[str, float], ...] = ()
    events: tuple[EventSpec, ...] = ()
    coi_machines: int = 1
    coi_converters: int = 1
    description: str = ""
    expected_outcome: str | None = None
    open_question: str | None = None


def _locate(text: str, section: str | None, key: str) -> tuple[int | None, int | None]:
    """Line/column of ``key`` (inside ``section`` if given) in the raw text."""
    current = None
    pat = re.compile(r"^\s*(" + re.escape(key) + r")\s*=")
    for n, line in enumerate(text.splitlines(), start=1):
        head = re.match(r"^\s*\[+\s*([^\]]+?)\s*\]+", line)
        if head:
            current = head.group(1)
            if current == key:
                return n, line.index(key) + 1
            continue
        m = pat.match(line)
        if m and (section in (None, "<top>") and current is None or current == section):
            return n, m.start(1) + 1
    return None, None


def parse_quantity(value, unit: str, key: str) -> float:
    """A number, or a string ``"<number> <prefix><unit>"`` converted to SI."""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got a boolean", key=key)
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a number or quantity string", key=key)
    m = _QTY.match(value)
    if not m:
        raise ConfigError(f"{key}: cannot read quantity {value!r}", key=key)
    number, suffix = float(m.group(1)), m.group(2)
    if suffix in ("", unit):
        return number
    if unit and suffix.endswith(unit):
        prefix = suffix[: -len(unit)]
        if prefix in _PREFIX:
            return number * _PREFIX[prefix]
    if not unit and suffix in ("pu", "p.u."):
        return number
    raise ConfigError(f"{key}: unit {suffix!r} does not match expected {unit or 'p.u.'!r}", key=key)


def _reject_unknown(table: dict, allowed, section: str, text: str):
    for key in table:
        if key in NEGLECTED:
            line, col = _locate(text, section, key)
            raise ConfigError(f"{section}.{key} rejected: {NEGLECTED[key]}", line, col, key)
        if key not in allowed:
            line, col = _locate(text, section, key)
            raise ConfigError(f"unknown key {section}.{key}", line, col, key)


def _params(cls, table: dict, section: str, text: str):
    units = UNITS[section]
    _reject_unknown(table, units, section, text)
    kwargs = {}
    for key, raw in table.items():
        try:
            kwargs[key] = parse_quantity(raw, units[key], f"{section}.{key}")
        except ConfigError as exc:
            line, col = _locate(text, section, key)
            raise ConfigError(str(exc), line, col, key) from None
    try:
        return cls(**kwargs)
    except GfcStabError as exc:
        bad = next((k for k in kwargs if k in str(exc)), None)
        line, col = _locate(text, section, bad) if bad else (None, None)
        raise ConfigError(f"[{section}] {exc}", line, col, bad) from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario description."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = getattr(exc, "msg", str(exc))
        raise ConfigError(f"syntax error: {msg}", getattr(exc, "lineno", None),
                          getattr(exc, "colno", None)) from None

    top = {"scenario", "converter", "machine", "network", "initial", "events", "coi"}
    _reject_unknown(doc, top, "<top>", text)
    if "scenario" not in doc:
        raise ConfigError("missing [scenario] section", key="scenario")
    sc = doc["scenario"]
    _reject_unknown(sc, SCENARIO_KEYS, "scenario", text)

    def fail(msg, key, section="scenario"):
        line, col = _locate(text, section, key)
        raise ConfigError(msg, line, col, key)

    kw: dict = {}
    for key, kind in SCENARIO_KEYS.items():
        if key not in sc:
            continue
        if kind is str:
            if not isinstance(sc[key], str):
                fail(f"scenario.{key} must be a string", key)
            kw[key] = sc[key]
        else:
            try:
                kw[key] = parse_quantity(sc[key], kind, f"scenario.{key}")
            except ConfigError as exc:
                fail(str(exc), key)
    for key in ("id", "model"):
        if key not in kw:
            raise ConfigError(f"scenario.{key} is required", key=key)
    model = kw["model"]
    if model not in MODELS:
        fail(f"scenario.model must be one of {', '.join(MODELS)}, got {model!r}", "model")
    for key in ("t_end", "tol", "u_bar"):
        if key in kw and not (math.isfinite(kw[key]) and kw[key] > 0):
            fail(f"scenario.{key} must be strictly positive", key)
    if "dt_out" in kw and not kw["dt_out"] >= 0:
        fail("scenario.dt_out must be non-negative", "dt_out")
    if "theta" in kw and not 0 < kw["theta"] < 1:
        fail("scenario.theta must lie in (0, 1)", "theta")
    if "expected_outcome" in kw and kw["expected_outcome"] not in OUTCOMES:
        fail(f"scenario.expected_outcome must be one of {', '.join(OUTCOMES)}", "expected_outcome")

    cfg = ScenarioConfig(id=kw.pop("id"), model=kw.pop("model"))
    cfg = replace(
        cfg,
        converter=_params(ConverterParams, doc.get("converter", {}), "converter", text),
        machine=_params(MachineParams, doc.get("machine", {}), "machine", text),
        network=_params(NetworkParams, doc.get("network", {}), "network", text),
        **kw,
    )

    init = doc.get("initial", {})
    _reject_unknown(init, STATES[model], "initial", text)
    initial = []
    for key, raw in init.items():
        try:
            initial.append((key, parse_quantity(raw, UNITS["initial"][key], f"initial.{key}")))
        except ConfigError as exc:
            fail(str(exc), key, "initial")
    cfg = replace(cfg, initial=tuple(initial))

    coi = doc.get("coi", {})
    _reject_unknown(coi, ("machines", "converters"), "coi", text)
    for key in coi:
        if isinstance(coi[key], bool) or not isinstance(coi[key], int) or coi[key] < 1:
            fail(f"coi.{key} must be a positive integer", key, "coi")
    if coi and model != "coi":
        raise ConfigError("[coi] is only valid with model = \"coi\"", key="coi")
    cfg = replace(cfg, coi_machines=coi.get("machines", 1), coi_converters=coi.get("converters", 1))

    events = []
    raw_events = doc.get("events", [])
    if not isinstance(raw_events, list):
        raise ConfigError("events must be an array of tables ([[events]])", key="events")
    for i, ev in enumerate(raw_events):
        events.append(_event(ev, i, cfg, text))
    return replace(cfg, events=tuple(events))


def _event(ev: dict, i: int, cfg: ScenarioConfig, text: str) -> EventSpec:
    where = f"events[{i}]"
    _reject_unknown(ev, ("time", "kind", "target", "value"), "events", text)
    for key in ("time", "kind", "target", "value"):
        if key not in ev:
            raise ConfigError(f"{where}.{key} is required", key=key)
    time = parse_quantity(ev["time"], "s", f"{where}.time")
    if not 0 <= time <= cfg.t_end:
        raise ConfigError(f"{where}.time = {time} outside [0, t_end = {cfg.t_end}]", key="time")
    kind, target = ev["kind"], ev["target"]
    if kind == "load_step":
        if target not in BUSES[cfg.model]:
            raise ConfigError(
                f"{where}.target {target!r} is not a load bus of {cfg.model} "
                f"(one of {', '.join(BUSES[cfg.model])})", key="target")
        unit = "W"
    elif kind == "state_reset":
        if target not in STATES[cfg.model]:
            raise ConfigError(
                f"{where}.target {target!r} is not a state of {cfg.model} "
                f"(one of {', '.join(STATES[cfg.model])})", key="target")
        unit = UNITS["initial"][target]
    else:
        raise ConfigError(f"{where}.kind must be load_step or state_reset, got {kind!r}", key="kind")
    value = ev["value"]
    if isinstance(value, dict):
        _reject_unknown(value, ("ref", "scale"), "events.value", text)
        ref = value.get("ref")
        if ref not in REFS or target != "v_dc":
            raise ConfigError(f"{where}.value.ref must be one of {', '.join(REFS)} on v_dc",
                              key="ref")
        scale = parse_quantity(value.get("scale", 1.0), "", f"{where}.value.scale")
        return EventSpec(time, kind, target, None, ref, scale)
    return EventSpec(time, kind, target, parse_quantity(value, unit, f"{where}.value"))


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# --------------------------------------------------------------------------
# Canonical emitter


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        esc = "".join(_ESCAPES.get(ch) or (f"\\u{ord(ch):04x}" if ch < " " or ch == "\x7f" else ch)
                      for ch in value)
        return f'"{esc}"'
    raise TypeError(f"cannot emit {type(value).__name__}")


def emit_config(cfg: ScenarioConfig) -> str:
    """Canonical TOML text; ``parse_config(emit_config(c)) == c``."""
    out = ["[scenario]"]
    out.append(f"id = {_fmt(cfg.id)}")
    out.append(f"model = {_fmt(cfg.model)}")
    if cfg.description:
        out.append(f"description = {_fmt(cfg.description)}")
    for key in ("u_bar", "t_end", "tol", "dt_out", "theta"):
        out.append(f"{key} = {_fmt(float(getattr(cfg, key)))}")
    for key in ("expected_outcome", "open_question"):
        if getattr(cfg, key) is not None:
            out.append(f"{key} = {_fmt(getattr(cfg, key))}")
    for section, obj in (("converter", cfg.converter), ("machine", cfg.machine),
                         ("network", cfg.network)):
        out.append("")
        out.append(f"[{section}]")
        for f in fields(obj):
            out.append(f"{f.name} = {_fmt(float(getattr(obj, f.name)))}")
    if cfg.model == "coi":
        out += ["", "[coi]", f"machines = {cfg.coi_machines}", f"converters = {cfg.coi_converters}"]
    if cfg.initial:
        out += ["", "[initial]"]
        out += [f"{k} = {_fmt(float(v))}" for k, v in cfg.initial]
    for ev in cfg.events:
        out += ["", "[[events]]", f"time = {_fmt(float(ev.time))}", f"kind = {_fmt(ev.kind)}",
                f"target = {_fmt(ev.target)}"]
        if ev.ref is not None:
            out.append(f"value = {{ref = {_fmt(ev.ref)}, scale = {_fmt(float(ev.scale))}}}")
        else:
            out.append(f"value = {_fmt(float(ev.value))}")
    return "\n".join(out) + "\n"
