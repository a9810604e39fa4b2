"""``solarbs`` command line.

Exit codes: 0 success, 1 usage, 2 data error, 3 infeasible sizing.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .errors import InfeasibleError, SolarBSError
from .pipeline import StudyConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _cmd_run(cfg):
    res = pipeline.run_study(cfg)
    print((cfg.out / "summary.txt").read_text(encoding="utf-8"))
    return res


def _cmd_compare(cfg):
    pipeline.compare_baselines(cfg)
    print((cfg.out / "compare.txt").read_text(encoding="utf-8"))


def _cmd_cv(cfg):
    pipeline.timeseries_cv(cfg)
    print((cfg.out / "cv.txt").read_text(encoding="utf-8"))


def _cmd_cross(cfg):
    pipeline.cross_region(cfg)
    print((cfg.out / "cross_region.txt").read_text(encoding="utf-8"))


COMMANDS = {
    "ingest": (lambda c: print(pipeline.stage_ingest(c)), "parse PSM3 weather into canonical CSV"),
    "synth": (lambda c: print(pipeline.stage_synth(c)), "generate synthetic weather and consumption"),
    "truth": (lambda c: print(pipeline.stage_truth(c)), "compute ground-truth harvest"),
    "train": (lambda c: print(pipeline.stage_train(c)), "train a forecaster"),
    "predict": (lambda c: print(pipeline.stage_predict(c)), "forecast the test split"),
    "evaluate": (lambda c: _print_json(pipeline.stage_evaluate(c).to_dict()), "score saved predictions"),
    "size": (lambda c: _print_json(pipeline.stage_size(c).to_dict()), "optimise modules and batteries"),
    "run": (_cmd_run, "full pipeline end to end"),
    "compare": (_cmd_compare, "Markov vs LSTM vs Cond-LSTM"),
    "cv": (_cmd_cv, "growing-window time-series cross-validation"),
    "cross-region": (_cmd_cross, "apply one model to other regions"),
}


def build_parser():
    p = _Parser(prog="solarbs", description=__doc__.splitlines()[0].strip("`"))
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", metavar="PATH", help="JSON study configuration")
        s.add_argument("--seed", type=int, help="global seed (config key 'seed')")
        s.add_argument("--out", metavar="DIR", help="output directory (config key 'out')")
        s.add_argument("--variant", choices=pipeline.VARIANTS, help="forecaster (config key 'variant')")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a dotted config key, value parsed as JSON when possible")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def make_config(args):
    cfg = StudyConfig.load(args.config) if args.config else StudyConfig()
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        cfg.override(key.strip(), _parse_value(val))
    for key in ("seed", "out", "variant"):
        v = getattr(args, key)
        if v is not None:
            cfg.override(key, v)
    return cfg


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"solarbs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        COMMANDS[args.command][0](cfg)
    except UsageError as exc:
        print(f"solarbs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"solarbs: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolarBSError, ValueError) as exc:
        print(f"solarbs: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"solarbs: error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
