"""Command-line entry point: ``lfamilies <subcommand> --config ... --seed ... --out ...``.

Exit codes: 0 success, 2 configuration or input error, 3 failed numerical
check, 4 unsupported input.
"""

import argparse
import json
import sys

from .exceptions import (ConfigError, InputError, LFamiliesError, NumericalCheckError,
                         UnsupportedError)
from .experiments import ExperimentConfig, run, write_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_UNSUPPORTED = 0, 2, 3, 4

SUBCOMMANDS = {
    "sample": ("sample",),
    "density": ("ensemble_density",),
    "ec-family": ("ec_density",),
    "moments": ("ensemble_moments", "ec_moments"),
    "compare": ("compare",),
    "analytic": ("analytic",),
}

HELP = {
    "sample": "draw eigenangle samples and write them as CSV",
    "density": "ensemble one-level density, pair correlation or spacing with model overlay",
    "ec-family": "one-level density of low zeros over an elliptic-curve family sign class",
    "moments": "moment ladder and exponent fit (ensemble or elliptic-curve side)",
    "compare": "per-bin and KS comparison of two report directories",
    "analytic": "tabulate an analytic density on a grid",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lfamilies", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="master seed (overrides the file)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
    return parser


def load_config(args):
    text = ""
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read {args.config}: {e}") from None
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        text += "\n" + item
    if args.seed is not None:
        text += f"\nseed = {args.seed}"
    cfg = ExperimentConfig.from_text(text)
    allowed = SUBCOMMANDS[args.command]
    explicit = "experiment" in {line.split("=")[0].strip() for line in text.splitlines() if "=" in line}
    if not explicit:
        cfg = cfg.replace(experiment=allowed[0])
    elif cfg.experiment not in allowed:
        raise ConfigError(f"experiment {cfg.experiment!r} does not belong to '{args.command}'")
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg.validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        report = run(cfg, threads=args.threads)
        write_report(report, args.out)
    except (ConfigError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsupportedError as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (NumericalCheckError, LFamiliesError) as e:
        print(f"numerical check failed: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = {"out": args.out, "experiment": cfg.experiment, "seed": cfg.seed}
    if report.discrepancy and cfg.experiment != "compare":
        summary["max_discrepancy"] = {k: v["max"] for k, v in report.discrepancy.items()}
    if report.fits:
        summary["fits"] = report.fits
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
