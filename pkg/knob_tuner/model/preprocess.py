"""
Design-matrix encoding for ranking.

Numeric parameters are log1p-transformed and standardized with the sample
standard deviation; categoricals become one 0/1 indicator column per category.
The target metric is log1p-transformed and standardized the same way.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from knob_tuner.common.exceptions import EncodingError, InsufficientSamplesError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColumnDescriptor:
    parameter: str
    category: str | None = None

    @property
    def is_indicator(self):
        return self.category is not None

    def label(self):
        return self.parameter if self.category is None else f"{self.parameter}={self.category}"


@dataclass(frozen=True)
class ColumnTransform:
    log1p: bool
    mean: float
    scale: float


@dataclass(frozen=True)
class EncodedMatrix:
    """
    Encoded evaluations.

    ``rows`` holds standardized numeric columns and raw 0/1 indicators;
    ``transform_log[j]`` records column j's transform, including the centering
    and scale applied to indicators by ``lasso_design``.
    """
    columns: tuple
    rows: np.ndarray
    targets: np.ndarray
    transform_log: tuple
    target_transform: ColumnTransform
    parameters: tuple
    dropped: tuple = ()

    @property
    def n_samples(self):
        return self.rows.shape[0]

    def lasso_design(self):
        """Fully standardized design: indicator columns centred and scaled too."""
        design = np.array(self.rows, dtype=float, copy=True)
        for j, (column, transform) in enumerate(zip(self.columns, self.transform_log)):
            if column.is_indicator:
                design[:, j] = (design[:, j] - transform.mean) / transform.scale
        return design

    def columns_of(self, parameter):
        return [j for j, column in enumerate(self.columns) if column.parameter == parameter]


def decode_column(descriptor):
    """Name of the parameter a column was derived from."""
    return descriptor.parameter


def encode(records, space):
    """
    Encode successful evaluation records over the active parameters of ``space``.

    Args:
        records (list[EvaluationRecord]): successful records sharing the parameter set.
        space (ParameterSpace): supplies parameter order, kinds and categories.

    Returns:
        EncodedMatrix: deterministic for equal inputs.

    Raises:
        InsufficientSamplesError: fewer than two records.
        EncodingError: a failure record, a missing value, an unknown category, or
            a value below -1 where log1p is undefined.
    """
    records = list(records)
    if len(records) < 2:
        raise InsufficientSamplesError(f"insufficient samples: {len(records)} record(s), need at least 2")
    for i, record in enumerate(records):
        if record.failed:
            raise EncodingError(f"record {i} is a failure record ({record.failure}); filter failures first")

    raw_columns = []
    for spec in space.parameters:
        values = []
        for i, record in enumerate(records):
            if spec.name not in record.config:
                raise EncodingError(f"record {i} has no value for {spec.name}")
            values.append(record.config[spec.name])
        if spec.is_categorical:
            for category in spec.categories:
                raw_columns.append((ColumnDescriptor(spec.name, category), _indicator(values, spec, category)))
        else:
            column = np.asarray(values, dtype=float)
            below = np.flatnonzero(column < -1)
            if below.size:
                i = int(below[0])
                raise EncodingError(f"record {i}: {spec.name} = {values[i]} is below -1, log1p is undefined")
            raw_columns.append((ColumnDescriptor(spec.name), np.log1p(column)))

    metrics = np.asarray([record.metric for record in records], dtype=float)
    below = np.flatnonzero(metrics < -1)
    if below.size:
        raise EncodingError(f"record {int(below[0])}: metric {metrics[below[0]]} is below -1, log1p is undefined")
    log_metrics = np.log1p(metrics)
    target_mean = float(log_metrics.mean())
    target_scale = float(log_metrics.std(ddof=1))
    if not target_scale > 0:
        target_scale = 1.0
    targets = (log_metrics - target_mean) / target_scale

    columns, data, transforms, dropped = [], [], [], []
    for descriptor, values in raw_columns:
        mean = float(values.mean())
        scale = float(values.std(ddof=1))
        if not scale > 1e-12 * max(1.0, abs(mean)):
            logger.warning(f"Dropped zero-variance column {descriptor.label()}")
            dropped.append(descriptor)
            continue
        columns.append(descriptor)
        transforms.append(ColumnTransform(log1p=not descriptor.is_indicator, mean=mean, scale=scale))
        data.append(values if descriptor.is_indicator else (values - mean) / scale)

    rows = np.column_stack(data) if data else np.zeros((len(records), 0))
    return EncodedMatrix(
        columns=tuple(columns),
        rows=rows,
        targets=targets,
        transform_log=tuple(transforms),
        target_transform=ColumnTransform(log1p=True, mean=target_mean, scale=target_scale),
        parameters=space.names,
        dropped=tuple(dropped),
    )


def _indicator(values, spec, category):
    for i, value in enumerate(values):
        if value not in spec.categories:
            raise EncodingError(f"record {i}: {spec.name} = {value!r} is not a known category")
    return np.asarray([1.0 if value == category else 0.0 for value in values])
