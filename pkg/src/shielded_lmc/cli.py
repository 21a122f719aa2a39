"""Command-line front end.

    shielded-lmc gmm   [--config FILE] [--out DIR] [--plot] [--seed N]
    shielded-lmc mimo  [--config FILE] [--out DIR] [--plot] [--seed N]
    shielded-lmc naive [--config FILE] [--out DIR] [--plot] [--seed N]

Without ``--config`` the built-in defaults are used.  Exit codes: 0 success,
2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import logging
import os
import sys

from .config import load_config, validate
from .errors import ConfigError, InitializationError, NumericalFailure, DetectionError
from .experiments import RUNNERS

log = logging.getLogger("shielded_lmc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_COMMANDS = {"gmm": "gmm", "mimo": "mimo", "naive": "naive-ablation"}


def build_parser():
    p = argparse.ArgumentParser(prog="shielded-lmc", description="Shielded Langevin sampling experiments")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "gmm": "alpha sweep on the constrained 2-D Gaussian mixture",
        "mimo": "symbol error rate of MIMO detectors versus SNR",
        "naive": "infeasible-step comparison of the naive and shielded updates",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", help="JSON config file (keys override the defaults)")
        sp.add_argument("--out", help="output directory (default from config)")
        sp.add_argument("--plot", action="store_true", help="also write SVG plots")
        sp.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    experiment = _COMMANDS[args.command]
    try:
        cfg = load_config(args.config, experiment)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.out is not None:
            cfg["output"]["dir"] = args.out
        if args.plot:
            cfg["output"]["plot"] = True
        validate(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    out_dir = cfg["output"]["dir"]
    try:
        os.makedirs(out_dir, exist_ok=True)
        log.info("running %s (seed %d) -> %s", experiment, cfg["seed"], out_dir)
        RUNNERS[experiment](cfg, out_dir=out_dir, plot=cfg["output"]["plot"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, InitializationError, DetectionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
