"""Append-only evaluation database."""

from .eval_store import EvalStore, append, load

__all__ = ["EvalStore", "append", "load"]
