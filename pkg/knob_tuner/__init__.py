# knob_tuner/__init__.py
from .config.config import Config
from .common.exceptions import TunerError, UsageError
from .common.command_wrapper import handle_command_exceptions
from .space.paramspace import (
    Configuration, ParameterSpace, check, load_space, load_space_file, prune, read_configuration,
    render_configuration, wash,
)
from .space.sampling import repair, sample
from .model.preprocess import encode
from .model.ranking import lasso_fit, load_ranking, rank, top_k
from .model import gp
from .tuning.optimizer import (
    TuneObjective, compare_configurations, expand_bounds, load_tune_report, propose, random_search, tune,
)
from .targets.records import CallableTarget, EvaluationRecord
from .targets.shell import ShellTarget, load_template, shell_eval
from .targets.surrogate import SurrogateTarget, generate_surrogate, load_surrogate, surrogate_eval, surrogate_truth
from .store.eval_store import EvalStore
from .metrics.tuner_metrics import get_metrics

__all__ = [
    # Configuration and errors
    "Config", "TunerError", "UsageError", "handle_command_exceptions",

    # Parameter spaces
    "Configuration", "ParameterSpace", "check", "load_space", "load_space_file", "prune",
    "read_configuration", "render_configuration", "wash", "repair", "sample",

    # Models
    "encode", "lasso_fit", "load_ranking", "rank", "top_k", "gp",

    # Tuning
    "TuneObjective", "compare_configurations", "expand_bounds", "load_tune_report", "propose",
    "random_search", "tune",

    # Targets and storage
    "CallableTarget", "EvaluationRecord", "ShellTarget", "load_template", "shell_eval",
    "SurrogateTarget", "generate_surrogate", "load_surrogate", "surrogate_eval", "surrogate_truth",
    "EvalStore", "get_metrics",
]
