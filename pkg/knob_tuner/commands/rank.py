"""
rank: Lasso importance ranking of the parameters in an evaluation database.
"""
from knob_tuner.common.command_wrapper import handle_command_exceptions
from knob_tuner.commands.arguments import add_space_arguments, load_space_and_target, sibling
from knob_tuner.model.ranking import rank, top_k
from knob_tuner.store.eval_store import EvalStore

import logging
logger = logging.getLogger(__name__)


def create_rank_command(subparsers):
    parser = subparsers.add_parser("rank", help="rank parameter importance from evaluations")
    add_space_arguments(parser)
    parser.add_argument("--db", required=True, help="evaluation database (JSON lines)")
    parser.add_argument("--k", type=int, default=10, help="rows of the printed top-k table")
    parser.add_argument("--out", required=True, help="ranking report (JSON); scores CSV is written alongside")
    parser.add_argument("--workload", default=None, help="only use records of this workload")
    parser.add_argument("--grid-size", type=int, default=None, help="lambda grid size (LASSO_GRID_SIZE)")

    @handle_command_exceptions
    def run_rank(args):
        space, _ = load_space_and_target(args, need_target=False)
        records = EvalStore(args.db).load(args.workload)
        result = rank(records, space, grid_size=args.grid_size, workload_id=args.workload)
        names = top_k(result, min(args.k, len(result.entries)))

        result.write_json(args.out)
        scores_path = sibling(args.out, "-scores.csv")
        result.write_csv(scores_path)
        logger.info(f"Wrote ranking to {args.out} and {scores_path}")

        width = max(len(name) for name in names)
        logger.info(f"{'rank':>4}  {'parameter':<{width}}  score")
        for position, name in enumerate(names, start=1):
            logger.info(f"{position:>4}  {name:<{width}}  {result.score_of(name):.6g}")

    parser.set_defaults(handler=run_rank)
    logger.debug("Rank Command Registered")
    return parser
