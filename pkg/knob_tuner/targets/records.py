"""
Evaluation records and the target protocol shared by every evaluation backend.
"""
from __future__ import annotations

import math
import datetime
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, runtime_checkable

from knob_tuner.space.paramspace import Configuration


class Source(str, Enum):
    SHELL = "shell"
    SURROGATE = "surrogate"
    IMPORTED = "imported"


def utc_now():
    return datetime.datetime.now(datetime.timezone.utc)


@dataclass(frozen=True)
class EvaluationRecord:
    """
    One measurement of a configuration under a workload.

    Exactly one of ``metric`` and ``failure`` is set: a successful evaluation has
    a finite metric, a failed one carries the failure reason instead.
    """
    config: Configuration
    workload_id: str
    metric: float | None = None
    failure: str | None = None
    duration_s: float = 0.0
    source: Source = Source.SURROGATE
    timestamp: datetime.datetime = field(default_factory=utc_now)
    iteration: int | None = None

    def __post_init__(self):
        if (self.metric is None) == (self.failure is None):
            raise ValueError("EvaluationRecord needs exactly one of metric and failure")
        if self.metric is not None and not math.isfinite(self.metric):
            raise ValueError(f"EvaluationRecord metric must be finite, got {self.metric}")
        if not isinstance(self.config, Configuration):
            object.__setattr__(self, "config", Configuration(dict(self.config)))
        object.__setattr__(self, "source", Source(self.source))

    @property
    def failed(self):
        return self.failure is not None

    @classmethod
    def success(cls, config, workload_id, metric, **kwargs):
        return cls(config=config, workload_id=workload_id, metric=float(metric), **kwargs)

    @classmethod
    def failed_with(cls, config, workload_id, reason, **kwargs):
        return cls(config=config, workload_id=workload_id, failure=str(reason), **kwargs)


@runtime_checkable
class Target(Protocol):
    """An evaluation backend: turns a full configuration into an EvaluationRecord."""

    def evaluate(self, config: Configuration, workload_id: str, draw_seed: int) -> EvaluationRecord:
        ...


class CallableTarget:
    """
    Wrap a plain function ``f(values: dict) -> float`` as a noiseless target.

    Exceptions raised by the function become failure records.
    """

    def __init__(self, function, source=Source.SURROGATE):
        self.function = function
        self.source = Source(source)

    def evaluate(self, config, workload_id, draw_seed):
        started = utc_now()
        try:
            metric = float(self.function(dict(config.values)))
            if not math.isfinite(metric):
                raise ValueError(f"non-finite metric {metric}")
        except Exception as e:
            return EvaluationRecord.failed_with(
                config, workload_id, f"evaluation raised {type(e).__name__}: {e}",
                source=self.source, timestamp=started,
            )
        elapsed = (utc_now() - started).total_seconds()
        return EvaluationRecord.success(
            config, workload_id, metric, duration_s=elapsed, source=self.source, timestamp=started,
        )
