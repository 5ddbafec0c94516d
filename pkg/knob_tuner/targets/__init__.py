"""Evaluation backends: synthetic surrogate and shell commands."""

from .records import CallableTarget, EvaluationRecord, Source
from .shell import ShellTarget, load_template, shell_eval
from .surrogate import SurrogateTarget, generate_surrogate, load_surrogate, surrogate_eval, surrogate_truth

__all__ = [
    "CallableTarget", "EvaluationRecord", "Source",
    "ShellTarget", "load_template", "shell_eval",
    "SurrogateTarget", "generate_surrogate", "load_surrogate", "surrogate_eval", "surrogate_truth",
]
