"""Experiment runners behind the command line: GMM sweep, naive ablation, MIMO SER.

Each runner takes a validated config dict (see :mod:`shielded_lmc.config`),
returns its results in memory and, when ``out_dir`` is given, writes CSV
files plus a ``manifest.json`` describing the run.
"""

import csv
import json
import os

import numpy as np

from . import __version__
from .diagnostics import sample_stats
from .mimo import (
    QPSK,
    AnnealSchedule,
    detect_langevin_batch,
    detect_ml_exhaustive,
    instance_for,
    symbol_errors,
    symbol_obstacles,
)
from .obstacle import ObstacleSet
from .sampler import SamplerConfig, run_chain
from .svg import scatter_svg, ser_svg
from .target import GaussianMixture, PotentialView, calibrate_offset

__all__ = ["run_gmm", "run_naive_ablation", "run_mimo", "write_csv", "format_value"]


def format_value(v):
    """Deterministic text form: shortest round-trip repr for floats."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])


def write_manifest(out_dir, cfg, outputs):
    manifest = {
        "artifact": "shielded-lmc",
        "version": __version__,
        "experiment": cfg["experiment"],
        "seed": cfg["seed"],
        "config": cfg,
        "outputs": sorted(outputs),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _gmm_setup(cfg):
    t = cfg["target"]
    target = GaussianMixture(t["weights"], t["means"], t["covariances"])
    ob = cfg["obstacles"]
    obstacles = ObstacleSet.from_records(ob["items"], beta_cap=ob["beta_cap"])
    off = cfg["offset"]
    lower, upper = off["probe_box"]
    C = calibrate_offset(target, (lower, upper), off["n_probe"], extra_points=target.means)
    return target, obstacles, C


def alpha_label(a):
    return f"{a:g}"


def run_gmm(cfg, out_dir=None, plot=False):
    """Shielded LMC on the constrained mixture for every alpha in the sweep.

    Returns a dict with ``results`` (alpha -> ChainResult), ``stats``
    (list of SampleStats) and the calibrated ``offset``.
    """
    s = cfg["sampler"]
    target, obstacles, C = _gmm_setup(cfg)
    d = cfg["diagnostics"]
    box = tuple(map(tuple, d["box"]))
    results, stats, outputs = {}, [], []
    for a in s["alpha_sweep"]:
        sc = SamplerConfig(alpha=float(a), alpha_bar=s["alpha_bar"], tau=s["tau"], step_size=s["step_size"],
                           schedule=s["schedule"], n_steps=s["n_steps"], burn_in=s["burn_in"],
                           seed=cfg["seed"], feasibility_policy=s["feasibility_policy"],
                           max_retries=s["max_retries"], record_every=s["record_every"], drift=s["drift"])
        view = PotentialView(target, C) if s["alpha_bar"] is None else None
        res = run_chain(None, "shielded", sc, obstacles, target, view=view, n_chains=s["n_chains"])
        results[a] = res
        st = sample_stats(f"alpha={alpha_label(a)}", res.samples, obstacles, target.means, float(a), s["tau"],
                          d["assign_radius"], d["delta"], box, d["bins"], res.infeasible_fraction)
        stats.append(st)
        if out_dir is not None:
            name = f"samples_{alpha_label(a)}.csv"
            write_csv(os.path.join(out_dir, name), ["step", "chain", "x1", "x2", "beta", "feasible"],
                      _sample_rows(res, sc, obstacles))
            outputs.append(name)
            if plot:
                svg = f"scatter_{alpha_label(a)}.svg"
                _write_text(os.path.join(out_dir, svg),
                            scatter_svg(res.samples, obstacles, target.means, box,
                                        title=f"alpha = {alpha_label(a)}, tau = {s['tau']:g}"))
                outputs.append(svg)
    if out_dir is not None:
        write_csv(os.path.join(out_dir, "stats.csv"), stats[0].header(), [st.row() for st in stats])
        outputs.append("stats.csv")
        write_manifest(out_dir, cfg, outputs)
    return {"results": results, "stats": stats, "offset": C, "target": target, "obstacles": obstacles}


def _sample_rows(res, sc, obstacles):
    n_rec, n_chains, _ = res.samples.shape
    beta = obstacles.beta(res.samples, capped=False)
    feas = obstacles.is_feasible(res.samples)
    for j in range(n_rec):
        step = sc.burn_in + (j + 1) * sc.record_every
        for c in range(n_chains):
            x1, x2 = res.samples[j, c, :2]
            yield step, c, x1, x2, beta[j, c], feas[j, c]


def run_naive_ablation(cfg, out_dir=None, plot=False):
    """Paired naive vs shielded runs over ``n_seeds`` consecutive seeds."""
    s = cfg["sampler"]
    target, obstacles, C = _gmm_setup(cfg)
    rows = []
    for k in range(cfg["n_seeds"]):
        seed = cfg["seed"] + k
        sc = SamplerConfig(alpha=s["alpha"], tau=s["tau"], step_size=s["step_size"], schedule=s["schedule"],
                           n_steps=s["n_steps"], burn_in=s["burn_in"], seed=seed,
                           record_every=s["record_every"], drift=s["drift"])
        frac = {}
        for name in ("naive", "shielded"):
            res = run_chain(None, name, sc, obstacles, target, view=PotentialView(target, C),
                            n_chains=s["n_chains"])
            frac[name] = (res.n_infeasible_steps, res.infeasible_fraction)
        rows.append([seed, s["tau"], s["n_chains"], s["n_steps"], frac["naive"][0], frac["shielded"][0],
                     frac["naive"][1], frac["shielded"][1]])
    header = ["seed", "tau", "n_chains", "n_steps", "naive_infeasible_steps", "shielded_infeasible_steps",
              "naive_fraction", "shielded_fraction"]
    if out_dir is not None:
        write_csv(os.path.join(out_dir, "violation.csv"), header, rows)
        write_manifest(out_dir, cfg, ["violation.csv"])
    return {"header": header, "rows": rows}


def mimo_variants(m):
    """(detector, alpha_bar, alpha) triples in output order."""
    out = []
    if "ml" in m["detectors"]:
        out.append(("ml", None, None))
    if "ula" in m["detectors"]:
        out.append(("ula", None, None))
    if "shielded" in m["detectors"]:
        if m["repulsion"] == "constant":
            out += [("shielded", float(a), None) for a in m["alpha_bar"]]
        else:
            out += [("shielded", None, float(a)) for a in m["alpha"]]
    return out


def _label(det, abar, alpha):
    if abar is not None:
        return f"{det} (alpha_bar={abar:g})"
    if alpha is not None:
        return f"{det} (alpha={alpha:g})"
    return det


def run_mimo(cfg, out_dir=None, plot=False):
    """SER of every detector at every SNR over ``trials`` shared instances.

    Returns ``rows`` (as written to ``ser.csv``), ``estimates`` keyed by
    ``(detector, alpha_bar, alpha, snr_db)`` and the true symbol vectors.
    """
    m = cfg["mimo"]
    sch = m["schedule"]
    schedule = AnnealSchedule.geometric(sch["sigma_max"], sch["sigma_min"], sch["n_levels"],
                                        sch["steps_per_level"], sch["eps"])
    n_u, n_r, T = m["n_u"], m["n_r"], m["trials"]
    shield = symbol_obstacles(n_u, m["obstacle_radius"], m["beta_cap"])
    rows, estimates, truth = [], {}, {}
    for si, snr in enumerate(m["snr_db"]):
        insts = [instance_for(cfg["seed"], si, t, n_u, n_r, snr, QPSK) for t in range(T)]
        keys = [(si, t) for t in range(T)]
        x_true = np.stack([inst.x_true for inst in insts])
        truth[snr] = x_true
        for det, abar, alpha in mimo_variants(m):
            if det == "ml":
                est = np.stack([detect_ml_exhaustive(inst, QPSK) for inst in insts])
            else:
                sc = SamplerConfig(alpha=alpha or 1.0, alpha_bar=abar, tau=m["tau"], seed=cfg["seed"],
                                   feasibility_policy=m["feasibility_policy"], max_retries=m["max_retries"])
                obs = shield if det == "shielded" else ObstacleSet()
                est, _ = detect_langevin_batch(insts, schedule, obs, sc, m["n_candidates"], keys, QPSK)
            errors = int(symbol_errors(est, x_true, n_u).sum())
            estimates[(det, abar, alpha, snr)] = est
            rows.append([det, abar, snr, T, errors, errors / (T * n_u), alpha])
    header = ["detector", "alpha_bar", "snr_db", "trials", "symbol_errors", "ser", "alpha"]
    if out_dir is not None:
        outputs = ["ser.csv"]
        write_csv(os.path.join(out_dir, "ser.csv"), header, rows)
        if plot:
            curves = {}
            for det, abar, snr, _, _, ser_v, alpha in rows:
                xs, ys = curves.setdefault(_label(det, abar, alpha), ([], []))
                xs.append(snr)
                ys.append(ser_v)
            _write_text(os.path.join(out_dir, "ser.svg"), ser_svg(curves))
            outputs.append("ser.svg")
        write_manifest(out_dir, cfg, outputs)
    return {"header": header, "rows": rows, "estimates": estimates, "x_true": truth}


RUNNERS = {"gmm": run_gmm, "naive-ablation": run_naive_ablation, "mimo": run_mimo}
