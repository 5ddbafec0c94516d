"""
Prometheus metrics for evaluation campaigns and tuning runs.

Metrics live in a dedicated registry that the command line writes out in the
node-exporter textfile format when METRICS_FILE is set.
"""
from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile
import logging

logger = logging.getLogger(__name__)


class TunerMetrics:
    """
    Evaluation counters for one process.

    Example:
        metrics = get_metrics()
        metrics.observe_evaluation(record)
        metrics.write("/var/lib/node_exporter/knob_tuner.prom")
    """

    def __init__(self):
        self.registry = CollectorRegistry()
        self.evaluations = Counter(
            "knob_tuner_evaluations",
            "Evaluations performed, by target source and outcome",
            ["source", "outcome"],
            registry=self.registry,
        )
        self.evaluation_seconds = Histogram(
            "knob_tuner_evaluation_seconds",
            "Wall time of one evaluation",
            buckets=(0.01, 0.1, 1, 10, 60, 300, 1800, float("inf")),
            registry=self.registry,
        )
        self.best_metric = Gauge(
            "knob_tuner_best_metric",
            "Incumbent metric of the current tuning run",
            registry=self.registry,
        )
        self.boundary_expansions = Counter(
            "knob_tuner_boundary_expansions",
            "Dynamic range expansions",
            registry=self.registry,
        )

    def observe_evaluation(self, record):
        outcome = "failure" if record.failed else "success"
        self.evaluations.labels(source=record.source.value, outcome=outcome).inc()
        self.evaluation_seconds.observe(record.duration_s)

    def observe_best(self, metric):
        self.best_metric.set(metric)

    def observe_expansion(self, count=1):
        self.boundary_expansions.inc(count)

    def write(self, path):
        write_to_textfile(str(path), self.registry)
        logger.info(f"Wrote metrics to {path}")


_metrics = None


def get_metrics():
    global _metrics
    if _metrics is None:
        _metrics = TunerMetrics()
    return _metrics


def reset_metrics():
    """Start a fresh registry (used between test cases)."""
    global _metrics
    _metrics = None
