"""
sample: draw random feasible configurations, evaluate them and append the
records to the evaluation database.
"""
from dataclasses import replace

from knob_tuner.common.command_wrapper import handle_command_exceptions
from knob_tuner.common.exceptions import UsageError
from knob_tuner.common.seeds import derive_seed
from knob_tuner.commands.arguments import add_space_arguments, add_target_arguments, load_space_and_target, workload_of
from knob_tuner.metrics.tuner_metrics import get_metrics
from knob_tuner.space.sampling import sample
from knob_tuner.store.eval_store import EvalStore

import logging
logger = logging.getLogger(__name__)

_EVALUATION_STREAM = 0xE7A1


def create_sample_command(subparsers):
    parser = subparsers.add_parser("sample", help="sample and evaluate random configurations")
    add_space_arguments(parser)
    add_target_arguments(parser)
    parser.add_argument("--n", type=int, required=True, help="number of configurations")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--db", required=True, help="evaluation database (JSON lines)")

    @handle_command_exceptions
    def run_sample(args):
        if args.n < 1:
            raise UsageError(f"--n must be >= 1, got {args.n}")
        space, target = load_space_and_target(args)
        workload = workload_of(args)
        store = EvalStore(args.db)
        metrics = get_metrics()

        configs = sample(space, args.n, args.seed)
        step = max(1, args.n // 10)
        failures = 0
        for index, config in enumerate(configs):
            full = space.full_configuration(config)
            record = target.evaluate(full, workload, derive_seed(args.seed, _EVALUATION_STREAM, index))
            record = replace(record, iteration=index)
            store.append(record)
            metrics.observe_evaluation(record)
            if record.failed:
                failures += 1
                logger.warning(f"Evaluation {index} failed: {record.failure}")
            if (index + 1) % step == 0 or index + 1 == args.n:
                logger.info(f"Evaluated {index + 1}/{args.n} configurations ({failures} failed)")
        logger.info(f"Appended {args.n} records to {args.db}: {args.n - failures} succeeded, {failures} failed")

    parser.set_defaults(handler=run_sample)
    logger.debug("Sample Command Registered")
    return parser
