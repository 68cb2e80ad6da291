"""Run configuration documents.

A run is described by a YAML document with three sections::

    model:
      k_groups: 5
      beta: 0.5
      attraction_mode: full          # or reduced
      theta_scalar: 1.0
      bias: {mode: frozen, mu: 0.1, sigma: 0.05, explicit: null}
      smoothing: 1.0e-12
      floor: 1.0e-9
    process:
      type: entrant                  # or redistribution
      t_steps: 1000
      init: {low: 1, high: 10}       # or an explicit list of counts
      seed: 0
      eta_frac: 0.05
      damping: 0.1
      record_every: null
    output:
      directory: out
      formats: [csv, json]

Unknown keys are rejected and every default is materialized, so a loaded
document serializes back to a complete description of the run.
"""

from __future__ import annotations

import copy
import os
from pathlib import Path

import yaml

from .errors import ConfigError
from .model import BiasSpec, ModelParams
from .sim import SimConfig

OUTPUT_DIR_ENV = "GROUPDYN_OUTPUT_DIR"
FORMATS = ("csv", "json")

_DEFAULTS = {
    "model": {
        "k_groups": 5,
        "beta": 0.5,
        "attraction_mode": "full",
        "theta_scalar": 1.0,
        "bias": {"mode": "frozen", "mu": 0.1, "sigma": 0.05, "explicit": None},
        "smoothing": 1e-12,
        "floor": 1e-9,
    },
    "process": {
        "type": "entrant",
        "t_steps": 1000,
        "init": {"low": 1, "high": 10},
        "seed": 0,
        "eta_frac": 0.05,
        "damping": 0.1,
        "record_every": None,
    },
    "output": {"directory": "out", "formats": ["csv", "json"]},
}

# scalar coercions; everything else is handled explicitly in _normalize
_FLOATS = {
    "model.beta", "model.theta_scalar", "model.bias.mu", "model.bias.sigma",
    "model.smoothing", "model.floor", "process.eta_frac", "process.damping",
}
_INTS = {"model.k_groups", "process.t_steps", "process.seed"}
_STRINGS = {"model.attraction_mode", "model.bias.mode", "process.type", "output.directory"}


def default_document() -> dict:
    doc = copy.deepcopy(_DEFAULTS)
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        doc["output"]["directory"] = env_dir
    return doc


def _as_float(key, value):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _as_int(key, value):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if f != int(f):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return int(f)


def _merge(base: dict, update: dict, prefix: str = ""):
    if not isinstance(update, dict):
        raise ConfigError(f"{prefix or 'document'}: expected a mapping")
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {path!r}")
        # process.init may switch between mapping and list forms
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, path + ".")
        else:
            base[key] = value


def _normalize(doc: dict) -> dict:
    for section in ("model", "process", "output"):
        for key, value in list(doc[section].items()):
            path = f"{section}.{key}"
            if path in _FLOATS:
                doc[section][key] = _as_float(path, value)
            elif path in _INTS:
                doc[section][key] = _as_int(path, value)
            elif path in _STRINGS:
                doc[section][key] = str(value)
    bias = doc["model"]["bias"]
    for key in ("mu", "sigma"):
        bias[key] = _as_float(f"model.bias.{key}", bias[key])
    bias["mode"] = str(bias["mode"])
    if bias["explicit"] is not None:
        if not isinstance(bias["explicit"], (list, tuple)):
            raise ConfigError("model.bias.explicit must be a list or null")
        bias["explicit"] = [_as_float("model.bias.explicit", v) for v in bias["explicit"]]

    proc = doc["process"]
    init = proc["init"]
    if isinstance(init, dict):
        extra = set(init) - {"low", "high"}
        if extra:
            raise ConfigError(f"unknown configuration key 'process.init.{sorted(extra)[0]}'")
        proc["init"] = {
            "low": _as_int("process.init.low", init.get("low", 1)),
            "high": _as_int("process.init.high", init.get("high", 10)),
        }
    elif isinstance(init, (list, tuple)):
        conv = _as_int if proc["type"] == "entrant" else _as_float
        proc["init"] = [conv("process.init", v) for v in init]
    else:
        raise ConfigError("process.init must be a {low, high} mapping or a list of counts")
    if proc["record_every"] is not None:
        proc["record_every"] = _as_int("process.record_every", proc["record_every"])

    formats = doc["output"]["formats"]
    if isinstance(formats, str):
        formats = [formats]
    formats = [str(f) for f in formats]
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"output.formats: unsupported format {bad[0]!r}")
    doc["output"]["formats"] = formats
    return doc


def materialize(partial: dict | None = None) -> dict:
    """Defaults merged with ``partial``, validated and type-normalized."""
    doc = default_document()
    if partial:
        _merge(doc, partial)
    doc = _normalize(doc)
    to_sim_config(doc)  # full semantic validation
    return doc


def parse_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse override value {text!r}: {exc}") from None


def apply_override(doc: dict, dotted: str, value) -> dict:
    """Set ``a.b.c = value`` on a copy of ``doc`` and re-validate."""
    parts = dotted.split(".")
    update: dict = {}
    node = update
    for part in parts[:-1]:
        node[part] = {}
        node = node[part]
    node[parts[-1]] = value
    out = copy.deepcopy(doc)
    _merge(out, update)
    out = _normalize(out)
    to_sim_config(out)
    return out


def apply_set_args(doc: dict, assignments) -> dict:
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, text = item.split("=", 1)
        doc = apply_override(doc, key.strip(), parse_value(text))
    return doc


def load_config(path) -> dict:
    """Load a run document, or the ``config`` section of an output metadata file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not a valid YAML/JSON document: {exc}") from None
    if raw is None:
        raw = {}
    if isinstance(raw, dict) and "config" in raw and "rng" in raw:
        raw = raw["config"]
    return materialize(raw)


def dump_config(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def to_model_params(doc: dict) -> ModelParams:
    m = doc["model"]
    b = m["bias"]
    return ModelParams(
        beta=m["beta"],
        attraction_mode=m["attraction_mode"],
        theta_scalar=m["theta_scalar"],
        bias=BiasSpec(
            mode=b["mode"],
            mu=b["mu"],
            sigma=b["sigma"],
            explicit=None if b["explicit"] is None else tuple(b["explicit"]),
        ),
        smoothing=m["smoothing"],
        floor=m["floor"],
    )


def to_sim_config(doc: dict) -> SimConfig:
    proc = doc["process"]
    init = proc["init"]
    kwargs = {}
    if isinstance(init, dict):
        kwargs["init_range"] = (init["low"], init["high"])
    else:
        kwargs["init_counts"] = tuple(init)
    return SimConfig(
        k_groups=doc["model"]["k_groups"],
        t_steps=proc["t_steps"],
        params=to_model_params(doc),
        seed=proc["seed"],
        process=proc["type"],
        eta_frac=proc["eta_frac"],
        damping=proc["damping"],
        record_every=proc["record_every"],
        **kwargs,
    )
