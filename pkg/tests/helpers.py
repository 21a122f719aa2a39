"""Shared test helpers: small experiment configs and the acceptance report."""

import json

# one line per acceptance criterion, printed in the pytest terminal summary
ACCEPTANCE_LINES = []


def report(number, ok, detail, elapsed, budget):
    line = (f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  "
            f"[{elapsed:.1f} s, budget {budget:g} s]")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


SMALL = {
    "gmm": {
        "experiment": "gmm",
        "sampler": {"alpha_sweep": [0.1, 1.0], "n_steps": 2000, "burn_in": 200, "record_every": 20,
                    "n_chains": 4},
        "offset": {"n_probe": 400},
    },
    "naive-ablation": {
        "experiment": "naive-ablation",
        "n_seeds": 2,
        "sampler": {"n_steps": 500, "record_every": 500, "n_chains": 4},
        "offset": {"n_probe": 400},
    },
    "mimo": {
        "experiment": "mimo",
        "mimo": {"n_u": 4, "n_r": 4, "snr_db": [0.0, 10.0], "trials": 3, "alpha_bar": [500.0],
                 "schedule": {"steps_per_level": 5}, "n_candidates": 3},
    },
}

COMMAND = {"gmm": "gmm", "naive-ablation": "naive", "mimo": "mimo"}


def write_config(path, experiment, **updates):
    cfg = json.loads(json.dumps(SMALL[experiment]))
    for key, val in updates.items():
        section, _, name = key.rpartition(".")
        (cfg.setdefault(section, {}) if section else cfg)[name] = val
    path.write_text(json.dumps(cfg))
    return path
