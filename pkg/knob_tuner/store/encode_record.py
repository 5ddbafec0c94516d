import datetime

from knob_tuner.space.paramspace import Configuration
from knob_tuner.targets.records import EvaluationRecord, Source

RECORD_FIELDS = ("config", "workload_id", "metric", "failure", "duration_s", "source", "timestamp", "iteration")


def parse_timestamp(value):
    """ISO-8601 text of a record's ``timestamp`` field as a datetime.

    Only the top-level field is parsed; the ``config`` object is opaque to the
    store, so a parameter that happens to be called ``timestamp`` keeps its value.

    Raises:
        ValueError: the value is missing, not a string, or not ISO-8601.
    """
    if not isinstance(value, str):
        raise ValueError("record has no timestamp")
    try:
        return datetime.datetime.fromisoformat(value)
    except ValueError as e:
        raise ValueError(f"record timestamp is not ISO-8601: {value!r}") from e


def record_to_document(record):
    """Plain-JSON form of an EvaluationRecord (one store line)."""
    return {
        "config": dict(record.config.values),
        "workload_id": record.workload_id,
        "metric": record.metric,
        "failure": record.failure,
        "duration_s": record.duration_s,
        "source": record.source.value,
        "timestamp": record.timestamp.isoformat(),
        "iteration": record.iteration,
    }


def document_to_record(document):
    """Inverse of record_to_document; raises ValueError on a malformed document."""
    if not isinstance(document, dict):
        raise ValueError("record line is not a JSON object")
    unknown = set(document) - set(RECORD_FIELDS)
    if unknown:
        raise ValueError(f"unknown record field(s): {', '.join(sorted(unknown))}")
    if not isinstance(document.get("config"), dict):
        raise ValueError("record has no config object")
    if not isinstance(document.get("workload_id"), str):
        raise ValueError("record has no workload_id")
    return EvaluationRecord(
        config=Configuration(document["config"]),
        workload_id=document["workload_id"],
        metric=document.get("metric"),
        failure=document.get("failure"),
        duration_s=float(document.get("duration_s") or 0.0),
        source=Source(document.get("source", Source.IMPORTED.value)),
        timestamp=parse_timestamp(document.get("timestamp")),
        iteration=document.get("iteration"),
    )
