"""
compare: evaluate the default, a manual and the recommended configuration
side by side.
"""
import csv

from knob_tuner.common.command_wrapper import handle_command_exceptions
from knob_tuner.common.exceptions import UsageError
from knob_tuner.common.json_encoder import dumps
from knob_tuner.commands.arguments import (
    add_space_arguments,
    add_target_arguments,
    load_space_and_target,
    sibling,
    workload_of,
)
from knob_tuner.space.paramspace import read_configuration
from knob_tuner.tuning.optimizer import compare_configurations, load_tune_report

import logging
logger = logging.getLogger(__name__)

_COLUMNS = ("label", "mean", "std", "evaluations", "failures", "gain")


def create_compare_command(subparsers):
    parser = subparsers.add_parser("compare", help="compare default, manual and recommended configurations")
    add_space_arguments(parser)
    add_target_arguments(parser)
    parser.add_argument("--tune-report", help="tuning report whose best configuration is the recommendation")
    parser.add_argument("--manual", help="expert configuration file (key = value lines)")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="comparison JSON; a CSV is written alongside")

    @handle_command_exceptions
    def run_compare(args):
        if args.repeats < 1:
            raise UsageError(f"--repeats must be >= 1, got {args.repeats}")
        if not args.tune_report and not args.manual:
            raise UsageError("nothing to compare: pass --tune-report and/or --manual")
        space, target = load_space_and_target(args)

        configurations = {"default": space.defaults()}
        if args.manual:
            configurations["manual"] = read_configuration(args.manual, space)
        if args.tune_report:
            report = load_tune_report(args.tune_report)
            if report.best_config is None:
                raise UsageError(f"{args.tune_report} has no best configuration")
            configurations["recommended"] = report.best_config

        rows = compare_configurations(space, configurations, target, workload_of(args), args.repeats, args.seed)
        documents = [{column: getattr(row, column) for column in _COLUMNS} for row in rows]
        with open(args.out, "w") as handle:
            handle.write(dumps({"workload_id": workload_of(args), "repeats": args.repeats, "rows": documents},
                               indent=2) + "\n")
        csv_path = sibling(args.out, ".csv")
        with open(csv_path, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=_COLUMNS)
            writer.writeheader()
            writer.writerows(documents)
        for row in rows:
            gain = "n/a" if row.gain is None else f"{row.gain:.3f}x"
            logger.info(f"{row.label:<12} mean {row.mean} std {row.std} gain {gain}")
        logger.info(f"Wrote comparison to {args.out} and {csv_path}")

    parser.set_defaults(handler=run_compare)
    logger.debug("Compare Command Registered")
    return parser
