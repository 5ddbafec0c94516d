"""
Arguments and setup shared by the sub-commands: where the parameter space
comes from, which target evaluates configurations, and output file naming.
"""
from pathlib import Path

from knob_tuner.config.config import Config
from knob_tuner.common.exceptions import UsageError
from knob_tuner.space.paramspace import load_space_file, prune, wash
from knob_tuner.targets.shell import ShellTarget, load_template
from knob_tuner.targets.surrogate import load_surrogate

import logging
logger = logging.getLogger(__name__)


def add_space_arguments(parser):
    parser.add_argument("--space", help="parameter-space JSON file")
    parser.add_argument("--select", action="append", default=[], metavar="NAME=VALUE",
                        help="selector choice used for pruning (repeatable)")
    parser.add_argument("--surrogate", help="surrogate specification JSON file")


def add_target_arguments(parser):
    parser.add_argument("--template", help="exec template JSON file for a shell target")
    parser.add_argument("--workload", default=None, help="workload id (default: DEFAULT_WORKLOAD)")


def parse_selections(items):
    selections = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"--select expects NAME=VALUE, got {item!r}")
        selections[name.strip()] = value.strip()
    return selections


def workload_of(args):
    return args.workload or Config.get_instance().DEFAULT_WORKLOAD


def load_space_and_target(args, need_target=True):
    """
    Resolve the washed and pruned search space and the evaluation target.

    A surrogate without ``--space`` brings its own generated space; a generated
    surrogate given together with ``--space`` binds to that space's numeric
    parameters.

    Returns:
        tuple: (ParameterSpace, target or None)
    """
    template = getattr(args, "template", None)
    if need_target and bool(args.surrogate) == bool(template):
        raise UsageError("choose exactly one target: --surrogate or --template")

    space = None
    if args.space:
        space = prune(wash(load_space_file(args.space)), parse_selections(args.select))
    elif args.select:
        raise UsageError("--select needs --space")

    target = None
    if args.surrogate:
        target = load_surrogate(args.surrogate, space=space)
        if space is None:
            space = target.space()
    elif template:
        if space is None:
            raise UsageError("--template needs --space")
        target = ShellTarget(load_template(template))
    if space is None:
        raise UsageError("a parameter space is required: pass --space or --surrogate")
    logger.info(f"Search space has {len(space)} active parameters")
    return space, target


def sibling(path, suffix):
    """``results/run.json`` + ``-trace.csv`` -> ``results/run-trace.csv``."""
    path = Path(path)
    return path.with_name(f"{path.stem}{suffix}")
