"""
tune: Bayesian optimization over the top-k ranked parameters.
"""
from knob_tuner.common.command_wrapper import handle_command_exceptions
from knob_tuner.common.exceptions import UsageError
from knob_tuner.commands.arguments import (
    add_space_arguments,
    add_target_arguments,
    load_space_and_target,
    sibling,
    workload_of,
)
from knob_tuner.model.ranking import load_ranking, top_k
from knob_tuner.space.paramspace import render_configuration
from knob_tuner.store.eval_store import EvalStore
from knob_tuner.targets.surrogate import SurrogateTarget
from knob_tuner.tuning.optimizer import Direction, TuneObjective, random_search, tune

import logging
logger = logging.getLogger(__name__)


def create_tune_command(subparsers):
    parser = subparsers.add_parser("tune", help="tune the top-k parameters with Bayesian optimization")
    add_space_arguments(parser)
    add_target_arguments(parser)
    parser.add_argument("--ranking", help="ranking report from the rank command (default: tune every parameter)")
    parser.add_argument("--k", type=int, default=None, help="number of top-ranked parameters to tune")
    parser.add_argument("--budget", type=int, required=True, help="number of evaluations")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="tuning report (JSON); trace and best configuration go alongside")
    parser.add_argument("--n-init", type=int, default=None, help="seed-design size (default max(N_INIT_MIN, 2k))")
    parser.add_argument("--metric-name", default="metric")
    parser.add_argument("--direction", default=Direction.MAXIMIZE.value,
                        help="maximize or minimize the metric")
    parser.add_argument("--baseline", default=None, help="also run a baseline for comparison: random")
    parser.add_argument("--static-bounds", action="store_true", help="never widen dynamic ranges")
    parser.add_argument("--early-stop", type=int, default=None,
                        help="stop after this many evaluations without improvement")
    parser.add_argument("--db", default=None, help="also append every evaluation to this database")

    @handle_command_exceptions
    def run_tune(args):
        if args.budget < 1:
            raise UsageError(f"--budget must be >= 1, got {args.budget}")
        if args.baseline not in (None, "random"):
            raise UsageError(f"unknown baseline {args.baseline!r} (expected: random)")
        try:
            direction = Direction(args.direction)
        except ValueError:
            raise UsageError(f"--direction must be maximize or minimize, got {args.direction!r}")

        space, target = load_space_and_target(args)
        names = None
        if args.ranking:
            ranking = load_ranking(args.ranking)
            names = top_k(ranking, args.k if args.k is not None else len(ranking.entries))
        elif args.k is not None:
            raise UsageError("--k needs --ranking")

        objective = TuneObjective(workload_of(args), args.metric_name, direction)
        on_record = EvalStore(args.db).append if args.db else None
        report = tune(
            space, objective, target, args.budget, names, args.seed,
            n_init=args.n_init,
            early_stop=args.early_stop,
            dynamic_bounds=False if args.static_bounds else None,
            on_record=on_record,
        )
        _write_outputs(report, args.out, space)
        _log_gain(report, space, target, objective.workload_id)

        if args.baseline == "random":
            baseline = random_search(space, objective, target, args.budget, args.seed,
                                     top_k_names=names, on_record=on_record)
            baseline_path = sibling(args.out, "-random.json")
            baseline.write_json(baseline_path)
            baseline.write_trace_csv(sibling(args.out, "-random-trace.csv"))
            logger.info(f"Random baseline best {baseline.best_metric} vs tuned {report.best_metric} "
                        f"(written to {baseline_path})")

    parser.set_defaults(handler=run_tune)
    logger.debug("Tune Command Registered")
    return parser


def _write_outputs(report, out, space):
    report.write_json(out)
    trace_path = sibling(out, "-trace.csv")
    report.write_trace_csv(trace_path)
    logger.info(f"Wrote tuning report to {out} and trace to {trace_path}")
    if report.best_config is None:
        logger.warning("No successful evaluation; no best configuration to render")
        return
    best_path = sibling(out, "-best.conf")
    render_configuration(report.best_config, best_path, space)
    logger.info(f"Best metric {report.best_metric:.6g}; configuration rendered to {best_path}")


def _log_gain(report, space, target, workload_id):
    if not isinstance(target, SurrogateTarget) or report.best_metric is None:
        return
    spec = target.spec_for(workload_id)
    default_metric = spec.noiseless(space.full_configuration(space.defaults()))
    logger.info(f"Default configuration scores {default_metric:.6g}; "
                f"best is {report.best_metric / default_metric:.3f}x the default")
