"""Acceptance criteria, one test each, with a printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
Runtimes are reported next to their budgets but not asserted.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import COMMAND, report, write_config  # noqa: E402
from oracles import central_fd, rel_err, richardson_fd, wilson_interval  # noqa: E402
from shielded_lmc.cli import main  # noqa: E402
from shielded_lmc.config import default_config, merge  # noqa: E402
from shielded_lmc.diagnostics import (  # noqa: E402
    boundary_fraction,
    histogram_tv,
    mean_mode_distance,
    rejection_oracle,
)
from shielded_lmc.experiments import run_gmm, run_mimo, run_naive_ablation  # noqa: E402
from shielded_lmc.mimo import (  # noqa: E402
    likelihood_log,
    likelihood_score,
    make_instance,
    smoothed_log_prior,
    smoothed_prior_score,
)
from shielded_lmc.obstacle import ObstacleSet, gmm_benchmark_obstacles  # noqa: E402
from shielded_lmc.sampler import SamplerConfig, rk_gradient, rk_potential, run_chain  # noqa: E402
from shielded_lmc.target import PotentialView, calibrate_offset, gmm_benchmark  # noqa: E402

Z90 = 1.645  # two-sided 90% and one-sided 95% normal quantile


def gmm_config(**sampler):
    return merge(default_config("gmm"), {"sampler": sampler})


def test_criterion_1_reduction_identity():
    t0 = time.perf_counter()
    G = gmm_benchmark()
    view = PotentialView(G, calibrate_offset(G, ((-6, -6), (6, 6)), extra_points=G.means))
    same = []
    for cfg, v in ((SamplerConfig(alpha=1.0, tau=0.2, step_size=1e-2, n_steps=1000, burn_in=0, seed=1), view),
                   (SamplerConfig(alpha_bar=50.0, tau=0.2, step_size=1e-2, n_steps=1000, burn_in=0, seed=2), None)):
        a = run_chain([0.5, -0.5], "shielded", cfg, ObstacleSet(), G, view=v)
        b = run_chain([0.5, -0.5], "ula", cfg, ObstacleSet(), G)
        same.append(a.samples.shape == (1000, 2) and a.samples.tobytes() == b.samples.tobytes())
    ok = all(same)
    report(1, ok, "shielded vs ULA trajectories over 1000 steps bit-identical "
           f"(exact repulsion: {same[0]}, constant repulsion: {same[1]})", time.perf_counter() - t0, 1)
    assert ok


def test_criterion_2_gradient_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20)
    G = gmm_benchmark()
    obs = gmm_benchmark_obstacles(beta_cap=None)
    view = PotentialView(G, calibrate_offset(G, ((-6, -6), (6, 6)), extra_points=G.means))
    pts = rng.uniform(-4, 4, size=(200, 2))
    pts = pts[obs.is_feasible(pts)][:20]
    worst = {}

    def check(name, errs):
        worst[name] = max(errs)

    for alpha in (0.1, 1.0, 7.0):
        # near phi = 1 the plain central difference loses digits to roundoff
        fd_fn = richardson_fd if alpha > 1 else central_fd

        def phi(z):
            return rk_potential(view.value(z), obs.beta(z, capped=False), alpha)

        errs = []
        for x in pts:
            U, gU = view.value_and_grad(x)
            b, gb = obs.beta_and_grad(x)
            errs.append(rel_err(rk_gradient(U, gU, b, gb, alpha), fd_fn(phi, x)))
        check(f"rk_gradient(alpha={alpha:g})", errs)
    check("grad_beta", [rel_err(obs.grad_beta(x), central_fd(lambda z: obs.beta(z, capped=False), x))
                        for x in pts])
    check("gmm_score", [rel_err(G.score(x), central_fd(G.log_density, x)) for x in pts])
    inst = make_instance(8, 8, 5.0, rng)
    mimo_pts = rng.normal(scale=0.8, size=(20, 16))
    for sigma in (0.84, 0.1):
        check(f"prior_score(sigma={sigma:g})",
              [rel_err(smoothed_prior_score(x, sigma), central_fd(lambda z: smoothed_log_prior(z, sigma), x))
               for x in mimo_pts])
        check(f"likelihood_score(sigma={sigma:g})",
              [rel_err(likelihood_score(x, inst, sigma), central_fd(lambda z: likelihood_log(z, inst, sigma), x))
               for x in mimo_pts])
    ok = len(pts) == 20 and all(v <= 1e-5 for v in worst.values())
    detail = "max rel err " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (20 points each, tol 1e-5)"
    report(2, ok, detail, time.perf_counter() - t0, 5)
    assert ok


def test_criterion_3_feasibility_and_balance():
    t0 = time.perf_counter()
    out = run_gmm(gmm_config(alpha_sweep=[1.0]))
    st = out["stats"][0]
    occ = st.mode_occupancy
    ok = st.feasibility_rate >= 0.99 and min(occ) >= 0.15
    report(3, ok, f"alpha=1: feasibility {st.feasibility_rate:.4f} (>= 0.99), "
           f"mode occupancy {occ[0]:.3f}, {occ[1]:.3f} (each >= 0.15)", time.perf_counter() - t0, 10)
    assert ok


def test_criterion_4_alpha_ordering():
    t0 = time.perf_counter()
    parts, oks = [], []
    for seed in (0, 1, 2):
        cfg = gmm_config()
        cfg["seed"] = seed
        out = run_gmm(cfg)
        obs = out["obstacles"]
        means = out["target"].means
        samples = {a: r.samples for a, r in out["results"].items()}
        bf = {a: boundary_fraction(samples[a], obs, 0.05) for a in (1.0, 7.0)}
        md = {a: mean_mode_distance(samples[a], means) for a in (0.1, 1.0)}
        ratio = bf[7.0] / bf[1.0] if bf[1.0] > 0 else np.inf
        ok = ratio >= 3 and md[0.1] > md[1.0]
        oks.append(ok)
        parts.append(f"seed {seed}: boundary ratio {ratio:.2f}, mode distance {md[0.1]:.3f} > {md[1.0]:.3f}")
    ok = all(oks)
    report(4, ok, "; ".join(parts), time.perf_counter() - t0, 60)
    assert ok


def test_criterion_5_distribution_vs_oracle():
    t0 = time.perf_counter()
    cfg = merge(default_config("gmm"), {
        "sampler": {"alpha_sweep": [1.0], "tau": 1.0, "step_size": 1e-3, "n_steps": 51_000, "burn_in": 1_000,
                    "record_every": 50, "n_chains": 50},
        "obstacles": {"beta_cap": 1.0},
    })
    out = run_gmm(cfg)
    samples = out["results"][1.0].samples
    G, obs = out["target"], out["obstacles"]
    ref = rejection_oracle(G, obs, 100_000, np.random.default_rng(100))
    ref2 = rejection_oracle(G, obs, 100_000, np.random.default_rng(101))
    tv = histogram_tv(samples, ref)
    self_tv = histogram_tv(ref, ref2)
    n = samples.shape[0] * samples.shape[1]
    ok = n == 50_000 and tv <= 0.15 and self_tv <= 0.05
    report(5, ok, f"TV(shielded, oracle) {tv:.4f} (<= 0.15) over {n} samples; "
           f"oracle self-TV {self_tv:.4f} (<= 0.05)", time.perf_counter() - t0, 30)
    assert ok


def test_criterion_6_naive_vs_shielded():
    t0 = time.perf_counter()
    out = run_naive_ablation(default_config("naive-ablation"))
    wins = sum(r[6] > r[7] for r in out["rows"])
    pairs = ", ".join(f"{r[4]}/{r[5]}" for r in out["rows"])
    ok = wins >= 9
    report(6, ok, f"naive > shielded infeasible fraction in {wins}/10 seeds "
           f"(naive/shielded infeasible steps: {pairs})", time.perf_counter() - t0, 60)
    assert ok


@pytest.fixture(scope="module")
def mimo_run():
    cfg = merge(default_config("mimo"), {"mimo": {"alpha_bar": [500.0]}})
    t0 = time.perf_counter()
    out = run_mimo(cfg)
    elapsed = time.perf_counter() - t0
    table = {}
    for det, _, snr, trials, errors, _, _ in out["rows"]:
        table[det, snr] = (errors, trials * cfg["mimo"]["n_u"])
    return cfg, out, table, elapsed


def test_criterion_7_mimo_ordering(mimo_run):
    cfg, out, table, elapsed = mimo_run
    grid = cfg["mimo"]["snr_db"]
    ml_ok = all(table["ml", s][0] <= table["shielded", s][0] for s in grid)
    better = sum(table["shielded", s][0] <= table["ula", s][0] for s in grid)
    separated = 0
    for s in grid:
        sh_hi = wilson_interval(*table["shielded", s], Z90)[1]
        ula_lo = wilson_interval(*table["ula", s], Z90)[0]
        separated += sh_hi < ula_lo
    ok = ml_ok and better >= 3 and separated >= 2
    sers = "; ".join(f"{s:g} dB ML {table['ml', s][0] / table['ml', s][1]:.4f} "
                     f"shielded {table['shielded', s][0] / table['shielded', s][1]:.4f} "
                     f"ULA {table['ula', s][0] / table['ula', s][1]:.4f}" for s in grid)
    report(7, ok, f"ML <= shielded at all points: {ml_ok}; shielded <= ULA at {better}/4 (need 3); "
           f"separated 90% intervals at {separated}/4 (need 2); SER {sers}", elapsed, 600)
    assert ok


def test_criterion_8_mimo_sanity(mimo_run):
    cfg, _, table, _ = mimo_run
    grid = cfg["mimo"]["snr_db"]
    t0 = time.perf_counter()
    # a rise between neighbours must not be significant at one-sided 95%
    monotone = all(wilson_interval(*table["ml", hi], Z90)[0] <= wilson_interval(*table["ml", lo], Z90)[1]
                   for lo, hi in zip(grid, grid[1:]))
    noiseless = merge(default_config("mimo"), {"mimo": {
        "snr_db": [40.0], "trials": 100, "alpha_bar": [500.0], "schedule": {"steps_per_level": 200}}})
    out = run_mimo(noiseless)
    x_true = out["x_true"][40.0]
    recovered = {}
    for (det, _, _, _), est in out["estimates"].items():
        recovered[det] = int(np.all(est == x_true, axis=1).sum())
    ok = monotone and all(v >= 99 for v in recovered.values())
    ml_sers = ", ".join(f"{table['ml', s][0] / table['ml', s][1]:.4f}" for s in grid)
    rec = ", ".join(f"{k} {v}/100" for k, v in recovered.items())
    report(8, ok, f"ML SER non-increasing within confidence: {monotone} ({ml_sers}); "
           f"40 dB exact recovery {rec} (need >= 99 each)", time.perf_counter() - t0, 120)
    assert ok


def test_criterion_9_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    same = {}
    for experiment in ("gmm", "naive-ablation", "mimo"):
        cfg = write_config(tmp_path / f"{experiment}.json", experiment)
        runs = []
        for k in range(2):
            out = tmp_path / f"{experiment}-{k}"
            assert main([COMMAND[experiment], "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
            runs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        same[COMMAND[experiment]] = bool(runs[0]) and runs[0] == runs[1]
    ok = all(same.values())
    report(9, ok, "byte-identical CSVs across two invocations: "
           + ", ".join(f"{k} {v}" for k, v in same.items()), time.perf_counter() - t0, 10)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
