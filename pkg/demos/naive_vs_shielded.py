"""Why the noise must be shaped by beta: naive navigation-potential descent vs shielded LMC.

Both samplers share seeds.  The naive one follows the gradient of the
navigation potential and adds isotropic noise, so it keeps stepping into
the obstacles.  The shielded one scales its noise by beta and repels from
the boundary, so far fewer of its steps land inside an obstacle.

    python demos/naive_vs_shielded.py [--seeds N]
"""

import argparse

from shielded_lmc.config import default_config
from shielded_lmc.experiments import run_naive_ablation


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5)
    args = p.parse_args()

    cfg = default_config("naive-ablation")
    cfg["n_seeds"] = args.seeds
    out = run_naive_ablation(cfg)
    print(f"{'seed':>4} {'naive':>10} {'shielded':>10}   (fraction of steps ending inside an obstacle)")
    for seed, *_, naive, shielded in out["rows"]:
        print(f"{seed:>4} {naive:>10.2e} {shielded:>10.2e}")


if __name__ == "__main__":
    main()
