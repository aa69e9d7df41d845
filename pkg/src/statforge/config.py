"""Run configuration files and output manifests.

Configs are flat INI-style sections (diff-friendly, language-neutral); CLI
flags override file values and the merged result is what the manifest
records, so a run is reconstructible from its manifest alone.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import platform
import time
from pathlib import Path

import numpy as np

from .models import DEFAULT_DYNAMO_MAP, DynamoMap, PriorSpec, prior_for

DEFAULTS = {
    "model": {"id": "nlar1", "n_steps": "200"},
    "dynamo_f2": {"x1": "0.5", "d1": "0.15", "x2": "1.3", "d2": "0.25"},
    "enca": {"q": "3", "steps": "1000", "lr": "1e-3", "seed": "0",
             "log_every": "100"},
    "inca": {"q": "3", "n_replicas": "5", "theta_batch": "60", "steps": "1000",
             "lr": "1e-3", "seed": "0", "log_every": "100"},
    "abc": {"population": "1000", "budget": "100000", "velocity": "0.3",
            "proposal_scale": "0.5", "seed": "0"},
    "mcmc": {"chain_length": "200000", "burn_in_frac": "0.25", "thin": "10",
             "seed": "0"},
}


def load_config(path=None) -> dict:
    """Defaults, overlaid with the sections of an INI file when given."""
    merged = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        with open(path) as fh:
            parser.read_file(fh)
        for sec in parser.sections():
            merged.setdefault(sec, {}).update(dict(parser[sec]))
    return merged


def config_get(cfg: dict, section: str, key: str, cast=str, default=None):
    raw = cfg.get(section, {}).get(key)
    if raw is None or raw == "":
        return default
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return cast(raw)


def dynamo_map_from_config(cfg: dict) -> DynamoMap:
    sec = cfg.get("dynamo_f2", {})
    if not sec:
        return DEFAULT_DYNAMO_MAP
    return DynamoMap(x1=float(sec.get("x1", 0.5)), d1=float(sec.get("d1", 0.15)),
                     x2=float(sec.get("x2", 1.3)), d2=float(sec.get("d2", 0.25)))


def prior_from_config(cfg: dict, model_id: str) -> PriorSpec:
    """[prior] section overrides the shipped bounds; x0 sits in [model]."""
    base = prior_for(model_id)
    sec = cfg.get("prior", {})
    lower = base.lower.copy()
    upper = base.upper.copy()
    for i, name in enumerate(base.names):
        raw = sec.get(name)
        if raw:
            lo, hi = (float(v) for v in raw.split(","))
            lower[i], upper[i] = lo, hi
    x0 = config_get(cfg, "model", "x0", float, base.x0)
    return PriorSpec(base.names, lower, upper, x0=x0)


def sha256_of_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_of_obj(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def f2_constants_digest(f2: DynamoMap) -> str:
    return sha256_of_obj(f2.constants())


def write_manifest(out_dir, *, command: str, config: dict, seeds: dict,
                   input_hashes: dict | None = None, extra: dict | None = None,
                   started: float | None = None) -> Path:
    """One manifest per output directory, covering every result-affecting constant."""
    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    body = {
        "command": command,
        "package_version": __version__,
        "config": config,
        "seeds": seeds,
        "input_hashes": input_hashes or {},
        "extra": extra or {},
        "host": {
            "platform": platform.platform(),
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "created_unix": time.time(),
        "wall_clock_s": None if started is None else time.perf_counter() - started,
    }
    body["config_hash"] = sha256_of_obj(
        {"config": config, "seeds": seeds, "inputs": input_hashes or {}})
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path
