"""Command-line driver: ``sc2adapt {score,adapt,sweep,extrapolate,run}``.

Exit codes: 0 success, 1 stage failure (partial record kept), 2 config error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import (MODES, STAGE_ORDER, ConfigError, StageError, WorkflowConfig, emit_results,
                       load_record, new_record, run_stages)

VERB_STAGES = {
    "score": ["score"],
    "adapt": ["score", "adapt"],
    "sweep": ["score", "adapt", "sweep"],
    "extrapolate": ["score", "adapt", "sweep", "thermodynamic", "continuum"],
    "run": STAGE_ORDER + ["continuum"],
}


def _couplings(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad coupling list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sc2adapt", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON workflow config")
    common.add_argument("--record", help="continue from an existing record.json")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--delta", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--couplings", type=_couplings, help="comma-separated ag values")
    common.add_argument("--max-volume", type=int, help="scoring and ADAPT volume")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "score": "surrogate ground state, pool scores and truncation",
        "adapt": "single ADAPT run at the largest volume",
        "sweep": "re-optimize (or re-run) on every smaller volume",
        "extrapolate": "thermodynamic and continuum fits",
        "run": "the whole workflow",
    }
    for verb, text in helps.items():
        sub.add_parser(verb, parents=[common], help=text)
    return parser


def _config_from_args(args) -> WorkflowConfig:
    data = WorkflowConfig.load(args.config).to_dict() if args.config else WorkflowConfig().to_dict()
    overrides = {
        "output_dir": args.out, "mode": args.mode, "delta": args.delta,
        "epsilon": args.epsilon, "couplings": args.couplings, "seed": args.seed,
        "workers": args.workers,
    }
    if args.max_volume is not None:
        overrides["surrogate_volume"] = overrides["adapt_volume"] = args.max_volume
    data.update({k: v for k, v in overrides.items() if v is not None})
    return WorkflowConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    stages = VERB_STAGES[args.verb]
    try:
        if args.record:
            record = load_record(args.record)
            config = WorkflowConfig.from_dict(record["config"])
            if args.out:
                config.output_dir = args.out
            done = _completed(record)
            stages = [s for s in stages if s not in done]
        else:
            config = _config_from_args(args)
            record = new_record(config)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    status = 0
    try:
        record = run_stages(config, record, stages)
    except StageError as exc:
        record = exc.record
        print(f"stage failure: {exc} (record: {exc.path})", file=sys.stderr)
        status = 1
    written = emit_results(record, args.format, config.output_dir)
    print(f"record: {config.output_dir}/{record['run_id']}/record.json")
    for path in written:
        print(path)
    cont = record.get("continuum")
    if cont:
        print(f"continuum condensate: {cont['limit']:.6f} +- {cont['uncertainty']:.6f} "
              f"(analytic {cont['analytic']:.6f})")
    return status


def _completed(record) -> set[str]:
    done = set()
    entries = record["couplings"]
    for stage, key in (("score", "scores"), ("adapt", "adapt"), ("sweep", "volumes"),
                       ("thermodynamic", "thermodynamic")):
        if entries and all(key in e for e in entries):
            done.add(stage)
    if record.get("continuum"):
        done.add("continuum")
    return done


if __name__ == "__main__":
    sys.exit(main())
