"""Experiment configuration: JSON files merged over built-in defaults.

A config file only needs the keys it changes; everything else comes from
:data:`DEFAULTS` for the chosen experiment.  Unknown keys are rejected so
typos do not silently fall back to defaults.
"""

import copy
import json
import math

from .errors import ConfigError

__all__ = ["DEFAULTS", "EXPERIMENTS", "default_config", "load_config", "merge", "validate"]

EXPERIMENTS = ("gmm", "mimo", "naive-ablation")

_GMM_TARGET = {
    "weights": [0.5, 0.5],
    "means": [[-2.0, -1.0], [0.9, 1.0]],
    "covariances": [[[2.0, 1.0], [1.0, 2.0]], [[0.5, -0.25], [-0.25, 0.5]]],
}
_GMM_OBSTACLES = {
    "beta_cap": 3.0,
    "items": [
        {"kind": "sphere", "center": [-1.0, 1.0], "radius": 0.4},
        {"kind": "sphere", "center": [-1.0, 0.1], "radius": 0.4},
    ],
}
_OFFSET = {"probe_box": [[-6.0, -6.0], [6.0, 6.0]], "n_probe": 10_000}
_DIAGNOSTICS = {"assign_radius": 2.0, "delta": 0.05, "box": [[-6.0, -6.0], [6.0, 6.0]], "bins": 20}

DEFAULTS = {
    "gmm": {
        "experiment": "gmm",
        "seed": 0,
        "sampler": {
            "alpha_sweep": [0.1, 1.0, 7.0],
            "alpha_bar": None,
            "tau": 0.2,
            "step_size": 0.03,
            "schedule": "constant",
            "n_steps": 50_000,
            "burn_in": 1_000,
            "record_every": 100,
            "n_chains": 100,
            "feasibility_policy": "measure-only",
            "max_retries": 100,
            "drift": "repulsive",
        },
        "target": _GMM_TARGET,
        "obstacles": _GMM_OBSTACLES,
        "offset": _OFFSET,
        "diagnostics": _DIAGNOSTICS,
        "output": {"dir": "out/gmm", "plot": False},
    },
    "naive-ablation": {
        "experiment": "naive-ablation",
        "seed": 0,
        "n_seeds": 10,
        "sampler": {
            "alpha": 1.0,
            "tau": 0.2,
            "step_size": 0.03,
            "schedule": "constant",
            "n_steps": 10_000,
            "burn_in": 0,
            "record_every": 10_000,
            "n_chains": 20,
            "drift": "repulsive",
        },
        "target": _GMM_TARGET,
        "obstacles": _GMM_OBSTACLES,
        "offset": _OFFSET,
        "output": {"dir": "out/naive", "plot": False},
    },
    "mimo": {
        "experiment": "mimo",
        "seed": 0,
        "mimo": {
            "n_u": 8,
            "n_r": 8,
            "snr_db": [0.0, 5.0, 10.0, 15.0],
            "trials": 500,
            "schedule": {"sigma_max": 0.84, "sigma_min": 0.01, "n_levels": 5,
                         "steps_per_level": 40, "eps": 0.1},
            "alpha_bar": [100.0, 250.0, 500.0],
            "repulsion": "constant",
            "alpha": [],
            "obstacle_radius": 0.5,
            "beta_cap": 1.0,
            "n_candidates": 10,
            "tau": 1.0,
            "feasibility_policy": "reject-infeasible",
            "max_retries": 100,
            "detectors": ["ml", "ula", "shielded"],
        },
        "output": {"dir": "out/mimo", "plot": False},
    },
}


def default_config(experiment):
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    return copy.deepcopy(DEFAULTS[experiment])


def merge(base, override, path=""):
    """Recursively overlay ``override`` on ``base``; unknown keys are an error."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key != "target":
            if not isinstance(val, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            out[key] = merge(base[key], val, where)
        else:
            out[key] = val
    return out


def load_config(path=None, experiment=None):
    """Read a JSON config (or none) and merge it over the experiment defaults."""
    user = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
    name = user.get("experiment", experiment)
    if experiment is not None and name != experiment:
        raise ConfigError(f"{path}: config is for {name!r}, not {experiment!r}")
    try:
        cfg = merge(default_config(name), user)
        validate(cfg)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}" if path else str(exc)) from None
    return cfg


def _positive(value, key, integer=False, allow_zero=False):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if integer:
        ok = ok and float(value).is_integer()
    if not ok or not (value >= 0 if allow_zero else value > 0):
        kind = "integer" if integer else "number"
        bound = ">= 0" if allow_zero else "> 0"
        raise ConfigError(f"{key} must be a {kind} {bound}, got {value!r}")


def validate(cfg):
    """Check ranges of every numeric field; raises :class:`ConfigError`."""
    seed = cfg.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    out = cfg["output"]
    if not isinstance(out.get("dir"), str) or not isinstance(out.get("plot"), bool):
        raise ConfigError("output.dir must be a string and output.plot a boolean")
    if cfg["experiment"] == "mimo":
        _validate_mimo(cfg["mimo"])
    else:
        _validate_gmm(cfg)


def _validate_sampler(s):
    _positive(s["step_size"], "sampler.step_size")
    _positive(s["tau"], "sampler.tau", allow_zero=True)
    _positive(s["n_steps"], "sampler.n_steps", integer=True)
    _positive(s["burn_in"], "sampler.burn_in", integer=True, allow_zero=True)
    _positive(s["record_every"], "sampler.record_every", integer=True)
    _positive(s["n_chains"], "sampler.n_chains", integer=True)
    if s["burn_in"] >= s["n_steps"]:
        raise ConfigError("sampler.burn_in must be < sampler.n_steps")
    if s["schedule"] not in ("constant", "inverse-sqrt"):
        raise ConfigError("sampler.schedule must be 'constant' or 'inverse-sqrt'")
    if s["drift"] not in ("repulsive", "literal"):
        raise ConfigError("sampler.drift must be 'repulsive' or 'literal'")


def _validate_gmm(cfg):
    s = cfg["sampler"]
    _validate_sampler(s)
    if cfg["experiment"] == "gmm":
        if not s["alpha_sweep"]:
            raise ConfigError("sampler.alpha_sweep must not be empty")
        for a in s["alpha_sweep"]:
            _positive(a, "sampler.alpha_sweep entries")
        if s["alpha_bar"] is not None:
            _positive(s["alpha_bar"], "sampler.alpha_bar")
        if s["feasibility_policy"] not in ("measure-only", "reject-infeasible"):
            raise ConfigError("sampler.feasibility_policy must be 'measure-only' or 'reject-infeasible'")
        _positive(s["max_retries"], "sampler.max_retries", integer=True, allow_zero=True)
        d = cfg["diagnostics"]
        _positive(d["assign_radius"], "diagnostics.assign_radius")
        _positive(d["delta"], "diagnostics.delta")
        _positive(d["bins"], "diagnostics.bins", integer=True)
    else:
        _positive(s["alpha"], "sampler.alpha")
        _positive(cfg["n_seeds"], "n_seeds", integer=True)
    ob = cfg["obstacles"]
    if ob["beta_cap"] is not None:
        _positive(ob["beta_cap"], "obstacles.beta_cap")
    for k, item in enumerate(ob["items"]):
        if "radius" in item:
            _positive(item["radius"], f"obstacles.items[{k}].radius")
    _positive(cfg["offset"]["n_probe"], "offset.n_probe", integer=True)


def _validate_mimo(m):
    for key in ("n_u", "n_r", "trials", "n_candidates"):
        _positive(m[key], f"mimo.{key}", integer=True)
    if not m["snr_db"]:
        raise ConfigError("mimo.snr_db must not be empty")
    for v in m["snr_db"]:
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"mimo.snr_db entries must be finite numbers, got {v!r}")
    sch = m["schedule"]
    _positive(sch["sigma_max"], "mimo.schedule.sigma_max")
    _positive(sch["sigma_min"], "mimo.schedule.sigma_min")
    _positive(sch["n_levels"], "mimo.schedule.n_levels", integer=True)
    _positive(sch["steps_per_level"], "mimo.schedule.steps_per_level", integer=True)
    _positive(sch["eps"], "mimo.schedule.eps")
    if sch["n_levels"] > 1 and not sch["sigma_max"] > sch["sigma_min"]:
        raise ConfigError("mimo.schedule levels must decrease: need sigma_max > sigma_min")
    _positive(m["obstacle_radius"], "mimo.obstacle_radius")
    _positive(m["beta_cap"], "mimo.beta_cap")
    _positive(m["tau"], "mimo.tau", allow_zero=True)
    _positive(m["max_retries"], "mimo.max_retries", integer=True, allow_zero=True)
    if m["repulsion"] not in ("constant", "exact"):
        raise ConfigError("mimo.repulsion must be 'constant' or 'exact'")
    for a in m["alpha_bar"] + m["alpha"]:
        _positive(a, "mimo.alpha_bar / mimo.alpha entries")
    if m["feasibility_policy"] not in ("measure-only", "reject-infeasible"):
        raise ConfigError("mimo.feasibility_policy must be 'measure-only' or 'reject-infeasible'")
    unknown = set(m["detectors"]) - {"ml", "ula", "shielded"}
    if unknown or not m["detectors"]:
        raise ConfigError(f"mimo.detectors must be a non-empty subset of ml, ula, shielded; got {m['detectors']}")
