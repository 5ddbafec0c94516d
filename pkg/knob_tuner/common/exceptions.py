"""
Exception hierarchy for knob_tuner.

Every toolkit error carries a default message and a process exit code so the
command wrapper can turn it into a diagnostic line and a nonzero status:
- 2 Usage errors: invalid command-line input
- 3 Parameter-space errors: parse, validation, selection
- 4 Data errors: too few samples, unencodable values
- 5 Numerical errors: Lasso non-convergence, ill-conditioned kernels
- 6 Constraint errors: empty or infeasible feasible region
- 7 Target errors: invalid exec templates, infeasible oracles
- 8 Store errors: evaluation database I/O and corruption
- 9 Tuning aborted: too many consecutive evaluation failures
"""


class TunerError(Exception):
    """
    Base class for all knob_tuner errors.
    """
    exit_code = 1
    message = "Tuner Error"

    def __init__(self, message=None):
        if message:
            self.message = message
        super().__init__(self.message)


class UsageError(TunerError):
    """
    Raised when command-line arguments are missing or inconsistent.
    """
    exit_code = 2
    message = "Usage Error"


class SpaceParseError(TunerError):
    """
    Raised when a parameter-space document does not follow the schema.
    """
    exit_code = 3
    message = "Parameter space parse error"


class SpaceValidationError(TunerError):
    """
    Raised when a parameter space breaks one or more invariants.

    The ``breaches`` attribute lists every breach found, not just the first.
    """
    exit_code = 3
    message = "Parameter space validation failed"

    def __init__(self, breaches=None, message=None):
        self.breaches = list(breaches or [])
        if message is None and self.breaches:
            message = "; ".join(self.breaches)
        super().__init__(message)


class SelectionError(TunerError):
    """
    Raised when selector choices given to prune are missing or illegal.
    """
    exit_code = 3
    message = "Invalid selector choice"


class InsufficientSamplesError(TunerError):
    """
    Raised when too few evaluations are available to encode or rank.
    """
    exit_code = 4
    message = "insufficient samples"


class EncodingError(TunerError):
    """
    Raised when an evaluation record cannot be turned into a design-matrix row.
    """
    exit_code = 4
    message = "Encoding error"


class LassoConvergenceError(TunerError):
    """
    Raised when coordinate descent meets non-finite input or does not converge.

    The ``delta`` attribute holds the last maximum coefficient change.
    """
    exit_code = 5
    message = "Lasso coordinate descent did not converge"

    def __init__(self, message=None, delta=None):
        self.delta = delta
        super().__init__(message)


class IllConditionedKernelError(TunerError):
    """
    Raised when the kernel matrix cannot be factorized even at maximum jitter.
    """
    exit_code = 5
    message = "ill-conditioned kernel"


class ConstraintRegionError(TunerError):
    """
    Raised when rejection sampling cannot find enough feasible configurations.
    """
    exit_code = 6
    message = "constraint region too small"

    def __init__(self, message=None, acceptance_rate=None):
        self.acceptance_rate = acceptance_rate
        super().__init__(message)


class InfeasibleConstraintsError(TunerError):
    """
    Raised when repair cannot find any configuration satisfying the constraints.
    """
    exit_code = 6
    message = "infeasible constraint system"


class TemplateError(TunerError):
    """
    Raised when an exec template or surrogate specification is malformed.
    """
    exit_code = 7
    message = "Invalid target template"


class OracleInfeasibleError(TunerError):
    """
    Raised when the surrogate grid oracle is asked for too many dimensions.
    """
    exit_code = 7
    message = "oracle infeasible"


class StoreError(TunerError):
    """
    Raised on evaluation database I/O failures or corrupted lines.
    """
    exit_code = 8
    message = "Evaluation store error"


class TuneAbortedError(TunerError):
    """
    Raised when a tuning run sees too many consecutive evaluation failures.

    The ``diagnostics`` attribute holds the failure reasons of the streak.
    """
    exit_code = 9
    message = "tuning aborted"

    def __init__(self, message=None, diagnostics=None):
        self.diagnostics = list(diagnostics or [])
        super().__init__(message)
