"""Run configuration: a YAML key/value tree validated against a fixed schema.

Minimal example::

    system:
      transition: [[1, 1], [1, 1]]
    potentials:
      - depth: 1
        table: {"0": -1, "1": 1}
    F:
      preset: alpha_family
      params: {alpha: 1}
    task:
      resolution: 201

Unknown keys are rejected.  Errors carry the offending field path and, when
the file text is available, its line number.
"""

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .exceptions import ConfigError, NLTError
from .potentials import Potential, PotentialFamily, coboundary, indicator
from .sft import SymbolicSystem
from .validation import check_expression

_NUMBER = {"type": "number"}
_TABLE = {
    "type": "object",
    "additionalProperties": _NUMBER,
}
_POTENTIAL = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "depth": {"type": "integer", "minimum": 1},
        "table": _TABLE,
        "values": {"type": "array", "items": _NUMBER},
        "indicator": {"type": "integer", "minimum": 0},
        "base": {"type": "integer", "minimum": 0},
        "scale": _NUMBER,
        "offset": _NUMBER,
        "coboundary": {"type": "array", "items": _NUMBER},
    },
}
SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system", "potentials"],
    "properties": {
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["transition"],
            "properties": {
                "alphabet_size": {"type": "integer", "minimum": 1},
                "transition": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "anyOf": [
                            {"type": "array", "items": {"enum": [0, 1]}},
                            {"type": "string", "pattern": "^[01 ]+$"},
                        ]
                    },
                },
            },
        },
        "potentials": {"type": "array", "minItems": 1, "items": _POTENTIAL},
        "F": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "source": {"type": "string", "minLength": 1},
                "preset": {"type": "string"},
                "params": {"type": "object", "additionalProperties": _NUMBER},
            },
        },
        "task": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_max": {"type": "integer", "minimum": 2},
                "resolution": {"type": "integer", "minimum": 2},
                "mode": {"enum": ["direct", "variational", "both"]},
                "log_base": {"anyOf": [{"enum": ["e"]}, {"type": "number", "exclusiveMinimum": 1}]},
                "q": {"type": "array", "items": _NUMBER},
                "threads": {"type": "integer", "minimum": 1},
                "cap_words": {"type": "integer", "minimum": 1},
                "cap_states": {"type": "integer", "minimum": 1},
                "max_period": {"type": "integer", "minimum": 1},
                "pair": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
            },
        },
    },
}


@dataclass
class RunConfig:
    system: SymbolicSystem
    family: PotentialFamily
    f_spec: dict = None
    task: dict = field(default_factory=dict)

    @property
    def log_base(self):
        b = self.task.get("log_base", "e")
        return math.e if b == "e" else float(b)

    def expression(self):
        """``(FExpr, params)``; raises :class:`ConfigError` when F is missing."""
        if not self.f_spec:
            raise ConfigError("this command needs an F section")
        spec = self.f_spec
        if ("source" in spec) == ("preset" in spec):
            raise ConfigError("F: give exactly one of 'source' or 'preset'")
        return check_expression(spec.get("source") or spec["preset"], self.family.d, spec.get("params"))


def _line_of(text, path):
    """Best-effort 1-based line number of a field path inside YAML text."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = [v for k, v in node.value if k.value == str(key)]
            if not nxt:
                break
            node = nxt[0]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
    return node.start_mark.line + 1 if node is not None else None


def _fail(msg, path=(), text=None):
    where = "/".join(str(p) for p in path) or "<root>"
    line = _line_of(text, path) if text is not None else None
    loc = f"line {line}, field {where}" if line else f"field {where}"
    raise ConfigError(f"{loc}: {msg}")


def _rows(transition, text):
    rows = []
    for i, row in enumerate(transition):
        if isinstance(row, str):
            row = [int(c) for c in row.replace(" ", "")]
        rows.append(list(row))
    width = len(rows)
    for i, row in enumerate(rows):
        if len(row) != width:
            _fail(f"row has {len(row)} entries, expected {width}", ("system", "transition", i), text)
    return rows


def _table_keys(table, depth):
    out = {}
    for key, v in table.items():
        key = str(key)
        if key.isdigit() and len(key) < depth:
            key = key.zfill(depth)
        out[key] = v
    return out


def _potential(sys, spec, built, path, text):
    kinds = [k for k in ("table", "values", "indicator", "base") if k in spec]
    if len(kinds) != 1:
        _fail("give exactly one of table, values, indicator or base", path, text)
    kind = kinds[0]
    if kind == "indicator":
        if spec["indicator"] >= sys.m:
            _fail(f"symbol {spec['indicator']} outside the alphabet", path, text)
        p = indicator(sys, spec["indicator"])
    elif kind == "base":
        if spec["base"] >= len(built):
            _fail("base must refer to an earlier potential", path, text)
        p = built[spec["base"]]
    else:
        depth = spec.get("depth", 1)
        table = _table_keys(spec["table"], depth) if kind == "table" else spec["values"]
        p = Potential(sys, depth, table)
    if "scale" in spec:
        p = p * spec["scale"]
    if "offset" in spec:
        p = p + spec["offset"]
    if "coboundary" in spec:
        p = p + coboundary(Potential(sys, 1, spec["coboundary"]))
    return p


def load_config(data, text=None):
    """Validate a parsed config tree and build the system and potentials."""
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        _fail(err.message, tuple(err.absolute_path), text)
    sys_spec = data["system"]
    rows = _rows(sys_spec["transition"], text)
    if "alphabet_size" in sys_spec and sys_spec["alphabet_size"] != len(rows):
        _fail(f"alphabet_size {sys_spec['alphabet_size']} does not match {len(rows)} rows", ("system",), text)
    try:
        sys = SymbolicSystem(np.array(rows))
    except NLTError as exc:
        _fail(str(exc), ("system", "transition"), text)
    built = []
    for i, spec in enumerate(data["potentials"]):
        try:
            built.append(_potential(sys, spec, built, ("potentials", i), text))
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            _fail(str(exc), ("potentials", i), text)
    cfg = RunConfig(sys, PotentialFamily(built), data.get("F"), dict(data.get("task") or {}))
    if cfg.f_spec:
        try:
            cfg.expression()
        except NLTError as exc:
            _fail(str(exc), ("F",), text)
    return cfg


def bundled_configs():
    return sorted(p.name for p in resources.files("nlthermo.configs").iterdir() if p.name.endswith(".cfg"))


def read_config(path):
    """Load a config file; a bare name like ``full2_zero.cfg`` also finds the bundled copies."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("nlthermo.configs").joinpath(p.name if p.suffix else p.name + ".cfg")
        if not bundled.is_file():
            raise ConfigError(f"config file {path} not found")
        text = bundled.read_text()
    else:
        text = p.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{where}malformed config: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a key/value mapping")
    return load_config(data, text)
