"""
report: re-emit a ranking or tuning report as plot-ready CSV files or a text summary.
"""
import json
import sys
from pathlib import Path

from knob_tuner.common.command_wrapper import handle_command_exceptions
from knob_tuner.common.exceptions import UsageError
from knob_tuner.commands.arguments import sibling
from knob_tuner.model import ranking
from knob_tuner.tuning import optimizer

import logging
logger = logging.getLogger(__name__)

FORMATS = ("csv", "text")


def create_report_command(subparsers):
    parser = subparsers.add_parser("report", help="summarize a rank or tune report")
    parser.add_argument("report", help="report JSON written by rank or tune")
    parser.add_argument("--format", default="csv", help="csv or text")
    parser.add_argument("--out-dir", default=None, help="directory for CSV files (default: next to the report)")

    @handle_command_exceptions
    def run_report(args):
        if args.format not in FORMATS:
            raise UsageError(f"unknown format {args.format!r}; expected one of {', '.join(FORMATS)}")
        try:
            kind = json.loads(Path(args.report).read_text()).get("kind")
        except (OSError, ValueError, AttributeError) as e:
            raise UsageError(f"cannot read report {args.report}: {e}") from e

        base = Path(args.report)
        if args.out_dir:
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
            base = Path(args.out_dir) / base.name

        if kind == ranking.REPORT_KIND:
            result = ranking.load_ranking(args.report)
            if args.format == "text":
                sys.stdout.write(rank_summary(result))
            else:
                path = sibling(base, "-scores.csv")
                result.write_csv(path)
                logger.info(f"Wrote {path}")
        elif kind == optimizer.REPORT_KIND:
            report = optimizer.load_tune_report(args.report)
            if args.format == "text":
                sys.stdout.write(tune_summary(report))
            else:
                paths = (sibling(base, "-trace.csv"), sibling(base, "-bounds.csv"), sibling(base, "-history.csv"))
                report.write_trace_csv(paths[0])
                report.write_bounds_csv(paths[1])
                report.write_history_csv(paths[2])
                logger.info(f"Wrote {', '.join(str(p) for p in paths)}")
        else:
            raise UsageError(f"{args.report} is neither a rank nor a tune report (kind {kind!r})")

    parser.set_defaults(handler=run_report)
    logger.debug("Report Command Registered")
    return parser


def rank_summary(result):
    lines = [f"Ranking of {len(result.entries)} parameters from {result.n_samples} evaluations"]
    if result.workload_id:
        lines[0] += f" (workload {result.workload_id})"
    width = max((len(e.name) for e in result.entries), default=4)
    lines.append(f"{'rank':>4}  {'parameter':<{width}}  {'score':>12}  entry_lambda")
    for position, entry in enumerate(result.entries, start=1):
        lines.append(f"{position:>4}  {entry.name:<{width}}  {entry.score:>12.6g}  {entry.entry_lambda:.6g}")
    return "\n".join(lines) + "\n"


def tune_summary(report):
    objective = report.objective
    failures = sum(1 for record in report.history if record.failed)
    lines = [
        f"Method: {report.method} (seed {report.seed})",
        f"Objective: {objective.direction.value} {objective.metric_name} on workload {objective.workload_id}",
        f"Evaluations: {report.evaluations} of budget {report.budget} ({failures} failed, n_init {report.n_init})",
        f"Tuned parameters: {', '.join(report.top_k_names)}",
    ]
    if report.best_config is None:
        lines.append("Best: none (no successful evaluation)")
    else:
        lines.append(f"Best metric: {report.best_metric:.6g}")
        for name in report.top_k_names:
            lines.append(f"  {name} = {report.best_config.get(name)}")
    lines.append(f"Range expansions: {len(report.bounds_log)}")
    for event in report.bounds_log:
        lines.append(f"  iteration {event.iteration}: {event.parameter} "
                     f"[{event.old_range[0]}, {event.old_range[1]}] -> [{event.new_range[0]}, {event.new_range[1]}]")
    return "\n".join(lines) + "\n"
