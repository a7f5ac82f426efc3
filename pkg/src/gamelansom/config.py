"""Pipeline configuration: TOML file over baked-in defaults, CLI flags on top.

Example::

    [extraction]
    hop = 8192
    window = "hann"
    tuning_axis = "linear"

    [som]
    width = 20
    height = 15
    epochs = 100
    seed = 0

    [synth]
    n_ensembles = 4
    pieces_per_ensemble = 8
    region_assignment = "orthogonal"
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InvalidParams, IoError, ParseError
from .features import ExtractionParams
from .som import TrainingParams
from .spectral import FRAME_LEN

DEFAULTS = {
    "extraction": {"frame_len": FRAME_LEN, "hop": 8192, "window": "hann",
                   "tuning_f_lo": 20.0, "tuning_f_hi": 1280.0, "tuning_axis": "linear"},
    "som": {"width": 20, "height": 15, "epochs": 100, "lr_start": 0.5, "lr_end": 0.01,
            "radius_start": None, "radius_end": 1.0, "seed": 0},
    "synth": {"n_ensembles": 4, "pieces_per_ensemble": 8, "region_assignment": "orthogonal",
              "duration_s": 200.0, "note_rate_hz": 4.0,
              "indonesian_profiles": ["articulated", "large_form"],
              "corpus_name": "synth", "seed": 0},
    "report": {"flag_factor": 10.0},
    "run": {"jobs": 1},
}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise InvalidParams(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise InvalidParams(f"config key {where}{key!r} must be a table")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Effective configuration: defaults, then the TOML file, then ``overrides``."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        cfg = _merge(cfg, doc)
    if overrides:
        cfg = _merge(cfg, overrides)
    if cfg["extraction"]["frame_len"] != FRAME_LEN:
        raise InvalidParams(f"frame_len is fixed at {FRAME_LEN}")
    return cfg


def extraction_params(cfg: dict) -> ExtractionParams:
    e = cfg["extraction"]
    return ExtractionParams(hop=int(e["hop"]), window=str(e["window"]),
                            f_lo=float(e["tuning_f_lo"]), f_hi=float(e["tuning_f_hi"]),
                            axis=str(e["tuning_axis"]))


def training_params(cfg: dict) -> TrainingParams:
    s = cfg["som"]
    return TrainingParams(width=int(s["width"]), height=int(s["height"]), epochs=int(s["epochs"]),
                          lr_start=float(s["lr_start"]), lr_end=float(s["lr_end"]),
                          radius_start=None if s["radius_start"] is None else float(s["radius_start"]),
                          radius_end=float(s["radius_end"]))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


def file_hash(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return h.hexdigest()


def parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise InvalidParams(f"grid must look like WxH, got {text!r}") from exc


def provenance(cfg: dict, section: str, inputs: dict[str, Path] | None = None, seed=None) -> dict:
    """Provenance block: effective config section, its hash, seed, and input file hashes."""
    block = {"tool": "gamelansom", "config": cfg[section],
             "config_sha256": config_hash(cfg[section])}
    if seed is not None:
        block["seed"] = seed
    for name, path in (inputs or {}).items():
        block[f"{name}_sha256"] = file_hash(path)
    return block


def dump_json(obj, path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def read_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
