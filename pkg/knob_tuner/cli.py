"""
Command-line entry point for knob_tuner.

Wires the toolkit into its workflow, one sub-command per step:
- sample  - draw random feasible configurations, evaluate them, append to the database
- rank    - Lasso importance ranking of the sampled parameters
- tune    - Bayesian optimization over the top-k parameters
- report  - CSV files or a text summary of a rank or tune report
- compare - default vs. manual vs. recommended configuration

All diagnostics go to standard error through logging; data goes to the files
named by the flags (and to standard output for ``report --format text``).
"""
import sys
import signal
import argparse

from knob_tuner.config.config import Config
from knob_tuner.commands.compare import create_compare_command
from knob_tuner.commands.rank import create_rank_command
from knob_tuner.commands.report import create_report_command
from knob_tuner.commands.sample import create_sample_command
from knob_tuner.commands.tune import create_tune_command
from knob_tuner.metrics.tuner_metrics import get_metrics

import logging
logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(prog="knob-tuner", description="Configuration auto-tuning toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)
    create_sample_command(subparsers)
    create_rank_command(subparsers)
    create_tune_command(subparsers)
    create_report_command(subparsers)
    create_compare_command(subparsers)
    return parser


def flush_metrics():
    """Write the Prometheus textfile when METRICS_FILE is configured."""
    path = Config.get_instance().METRICS_FILE
    if not path:
        return
    try:
        get_metrics().write(path)
    except OSError as e:
        logger.error(f"Error writing metrics to {path}: {e}")


def handle_exit(signum, frame):
    """Handle interruption on SIGTERM/SIGINT: keep the metrics, exit nonzero."""
    logger.info(f"Received signal {signum}. Stopping...")
    flush_metrics()
    logger.info("Shutdown complete.")
    sys.exit(128 + signum)


def main(argv=None):
    try:
        config = Config.get_instance()
    except ValueError:
        # already logged by Config
        Config._instance = None
        return 2
    parser = build_parser()
    args = parser.parse_args(argv)

    signal.signal(signal.SIGTERM, handle_exit)
    signal.signal(signal.SIGINT, handle_exit)

    logger.info(f"============= knob-tuner {args.command} (built {config.BUILT_AT}) ===============")
    code = args.handler(args)
    flush_metrics()
    logger.info(f"============= knob-tuner {args.command} finished with exit code {code} ===============")
    return code


if __name__ == "__main__":
    sys.exit(main())
