"""Command-line entry point.

Three subcommands: ``run`` executes an experiment config, ``validate``
checks one without training, and ``synth`` writes a synthetic region in the
ingestion CSV format.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .experiment import ALL_MODEL_KINDS, ExperimentConfig, run, validate
from .ingest import StationRejected
from .nn import TrainingDiverged
from .strategies import STRATEGY_KINDS
from .synthetic import SynthSpec, generate_region, write_ingest_csvs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowcast",
        description="Multi-step daily streamflow forecasting experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train and evaluate an experiment config")
    run_p.add_argument("--config", required=True, help="experiment config JSON")
    run_p.add_argument("--out", help="override the output directory")
    run_p.add_argument("--seed", type=int, help="override the base seed")
    run_p.add_argument("--strategy", choices=STRATEGY_KINDS,
                       help="override the catchment strategy")
    run_p.add_argument("--model", choices=ALL_MODEL_KINDS,
                       help="run a single model kind")

    val_p = sub.add_parser("validate", help="check a config without training")
    val_p.add_argument("--config", required=True, help="experiment config JSON")

    synth_p = sub.add_parser("synth", help="generate a synthetic region as CSV files")
    synth_p.add_argument("--spec", required=True,
                         help="generator JSON ('stations' count plus generator knobs)")
    synth_p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _load_config(args)
            out = run(config)
            print(f"wrote {out / 'summary.csv'}")
            return 0
        if args.command == "validate":
            try:
                config = ExperimentConfig.from_json(args.config)
            except (ValueError, TypeError) as exc:
                print(f"invalid: {exc}")
                return 1
            diags = validate(config)
            for diag in diags:
                print(f"invalid: {diag}")
            if not diags:
                print("config ok")
            return 0 if not diags else 1
        if args.command == "synth":
            with open(args.spec) as fh:
                raw = json.load(fh)
            n = raw.pop("stations", 1)
            stations, statics = generate_region(SynthSpec(**raw), n)
            paths = write_ingest_csvs(args.out, stations, statics)
            print(f"wrote {len(paths) - 1} station file(s) and "
                  f"{paths['statics']} under {Path(args.out)}")
            return 0
    except (ValueError, TypeError, OSError, KeyError,
            StationRejected, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command!r}")


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.strategy is not None:
        overrides["strategy"] = args.strategy
    if args.model is not None:
        overrides["models"] = (args.model,)
    return dataclasses.replace(config, **overrides) if overrides else config


if __name__ == "__main__":
    sys.exit(main())
