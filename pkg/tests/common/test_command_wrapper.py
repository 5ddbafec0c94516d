"""
Unit tests for command wrapper exception handling.
"""
import unittest
from knob_tuner.common.command_wrapper import handle_command_exceptions
from knob_tuner.common.exceptions import (
    InsufficientSamplesError,
    SpaceValidationError,
    StoreError,
    TuneAbortedError,
    UsageError,
)


class TestCommandWrapper(unittest.TestCase):
    """Test command wrapper exception handling."""

    def test_success_returns_zero(self):
        """A handler that returns None exits 0."""
        @handle_command_exceptions
        def ok(args):
            return None

        self.assertEqual(ok(None), 0)

    def test_explicit_result_is_kept(self):
        @handle_command_exceptions
        def explicit(args):
            return 0

        self.assertEqual(explicit(None), 0)

    def test_usage_error(self):
        """UsageError exits 2 and logs a warning."""
        @handle_command_exceptions
        def bad_usage(args):
            raise UsageError("--n must be >= 1, got 0")

        with self.assertLogs("knob_tuner.common.command_wrapper", level="WARNING") as logs:
            self.assertEqual(bad_usage(None), 2)
        self.assertIn("--n must be >= 1", logs.output[0])

    def test_space_validation_error_logs_every_breach(self):
        @handle_command_exceptions
        def invalid_space(args):
            raise SpaceValidationError(["default 300 is outside range [30, 250]", "space has no parameters"])

        with self.assertLogs("knob_tuner.common.command_wrapper", level="ERROR") as logs:
            self.assertEqual(invalid_space(None), 3)
        self.assertEqual(len(logs.output), 2)

    def test_tune_aborted_logs_diagnostics(self):
        @handle_command_exceptions
        def aborted(args):
            raise TuneAbortedError("tuning aborted", diagnostics=["iteration 0: apply failed (exit 1)"])

        with self.assertLogs("knob_tuner.common.command_wrapper", level="ERROR") as logs:
            self.assertEqual(aborted(None), 9)
        self.assertTrue(any("apply failed" in line for line in logs.output))

    def test_tuner_error_exit_codes(self):
        @handle_command_exceptions
        def no_samples(args):
            raise InsufficientSamplesError()

        @handle_command_exceptions
        def broken_store(args):
            raise StoreError("evals.jsonl: malformed record on line 3")

        with self.assertLogs("knob_tuner.common.command_wrapper", level="ERROR"):
            self.assertEqual(no_samples(None), 4)
            self.assertEqual(broken_store(None), 8)

    def test_generic_exception(self):
        """Unexpected exceptions exit 1."""
        @handle_command_exceptions
        def crash(args):
            raise RuntimeError("boom")

        with self.assertLogs("knob_tuner.common.command_wrapper", level="ERROR") as logs:
            self.assertEqual(crash(None), 1)
        self.assertIn("boom", logs.output[0])

    def test_preserves_function_name(self):
        @handle_command_exceptions
        def run_rank(args):
            return None

        self.assertEqual(run_rank.__name__, "run_rank")


if __name__ == '__main__':
    unittest.main()
