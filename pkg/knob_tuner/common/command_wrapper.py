"""
Command wrapper utility for exception handling.

Provides a decorator that converts toolkit exceptions raised by a command
handler into process exit codes, logging one diagnostic line per failure.
"""

from functools import wraps
from knob_tuner.common.exceptions import (
    TunerError,
    UsageError,
    SpaceValidationError,
    TuneAbortedError,
)
import logging

logger = logging.getLogger(__name__)


def handle_command_exceptions(f):
    """
    Decorator to handle toolkit exceptions in command handlers.

    The wrapped handler returns 0 on success. Failures map to:
    - UsageError -> 2 (logged as warning)
    - SpaceValidationError -> 3 (every breach logged)
    - TuneAbortedError -> 9 (failure diagnostics logged)
    - Other TunerError -> its exit_code
    - Other exceptions -> 1 (with traceback)

    Args:
        f: The command handler to wrap; it receives the parsed argparse namespace

    Returns:
        The wrapped handler returning an integer exit code

    Example:
        @handle_command_exceptions
        def run_rank(args):
            if args.k < 1:
                raise UsageError("--k must be >= 1")
            ...
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            result = f(*args, **kwargs)
            return 0 if result is None else result
        except UsageError as e:
            logger.warning(f"UsageError: {e.message}")
            return e.exit_code
        except SpaceValidationError as e:
            for breach in e.breaches:
                logger.error(f"SpaceValidationError: {breach}")
            if not e.breaches:
                logger.error(f"SpaceValidationError: {e.message}")
            return e.exit_code
        except TuneAbortedError as e:
            logger.error(f"TuneAbortedError: {e.message}")
            for line in e.diagnostics:
                logger.error(f"  {line}")
            return e.exit_code
        except TunerError as e:
            logger.error(f"{type(e).__name__}: {e.message}")
            return e.exit_code
        except Exception as e:
            logger.error(f"Unexpected error in command {f.__name__}: {str(e)}", exc_info=True)
            return 1
    return decorated_function
