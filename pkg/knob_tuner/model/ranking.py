"""
Lasso-based parameter importance ranking.

The Lasso path is computed on a geometric grid from lambda_max down to
lambda_max * LASSO_MIN_RATIO with warm-started coordinate descent. Parameters are
ordered by the largest lambda at which any of their columns enters the model,
then by |coefficient| at the smallest lambda, then by name.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from knob_tuner.config.config import Config
from knob_tuner.common.exceptions import (
    InsufficientSamplesError,
    LassoConvergenceError,
    UsageError,
)
from knob_tuner.common.json_encoder import dumps
from knob_tuner.model.preprocess import EncodedMatrix, decode_column, encode

logger = logging.getLogger(__name__)

REPORT_KIND = "rank-report"


@dataclass(frozen=True)
class RankingEntry:
    name: str
    score: float
    entry_lambda: float


@dataclass(frozen=True)
class RankingResult:
    entries: tuple
    lambdas: tuple
    n_samples: int
    workload_id: str | None = None

    @property
    def names(self):
        return [entry.name for entry in self.entries]

    def score_of(self, name):
        for entry in self.entries:
            if entry.name == name:
                return entry.score
        raise KeyError(name)

    def to_dict(self):
        return {
            "kind": REPORT_KIND,
            "workload_id": self.workload_id,
            "n_samples": self.n_samples,
            "lambdas": list(self.lambdas),
            "entries": [
                {"name": e.name, "score": e.score, "entry_lambda": e.entry_lambda} for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, document):
        if document.get("kind") != REPORT_KIND:
            raise UsageError(f"not a ranking report (kind {document.get('kind')!r})")
        entries = tuple(
            RankingEntry(e["name"], float(e["score"]), float(e["entry_lambda"])) for e in document["entries"]
        )
        return cls(entries, tuple(document["lambdas"]), int(document["n_samples"]), document.get("workload_id"))

    def write_json(self, path):
        Path(path).write_text(dumps(self.to_dict(), indent=2) + "\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["name", "score", "entry_lambda"])
            for e in self.entries:
                writer.writerow([e.name, repr(e.score), repr(e.entry_lambda)])


def load_ranking(path):
    try:
        return RankingResult.from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot read ranking report {path}: {e}") from e


def soft_threshold(value, threshold):
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def lambda_max(design, targets):
    """Smallest lambda for which the Lasso solution is all zeros."""
    n = design.shape[0]
    if design.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(design.T @ targets)) / n)


def coordinate_descent(design, targets, lam, beta=None, tolerance=None, max_sweeps=None):
    """
    Minimize (1/2n)||y - X b||^2 + lam * ||b||_1 by covariance coordinate descent.

    Sweeps alternate between the full coordinate set and the current active set;
    convergence requires a full sweep whose largest coefficient change is below
    ``tolerance``.

    Raises:
        LassoConvergenceError: ``max_sweeps`` sweeps without convergence.
    """
    config = Config.get_instance()
    tolerance = config.LASSO_TOLERANCE if tolerance is None else tolerance
    max_sweeps = config.LASSO_MAX_SWEEPS if max_sweeps is None else max_sweeps

    n, d = design.shape
    gram = design.T @ design / n
    correlation = design.T @ targets / n
    diagonal = np.diag(gram).copy()
    beta = np.zeros(d) if beta is None else np.array(beta, dtype=float, copy=True)
    gram_beta = gram @ beta

    def sweep(indices):
        largest = 0.0
        for j in indices:
            if diagonal[j] <= 0:
                continue
            old = beta[j]
            rho = correlation[j] - gram_beta[j] + diagonal[j] * old
            new = soft_threshold(rho, lam) / diagonal[j]
            if new != old:
                gram_beta[:] += gram[:, j] * (new - old)
                beta[j] = new
                largest = max(largest, abs(new - old))
        return largest

    everything = range(d)
    sweeps = 0
    delta = np.inf
    while sweeps < max_sweeps:
        delta = sweep(everything)
        sweeps += 1
        if delta < tolerance:
            return beta
        active = np.flatnonzero(beta)
        while sweeps < max_sweeps:
            delta = sweep(active)
            sweeps += 1
            if delta < tolerance:
                break
    raise LassoConvergenceError(
        f"coordinate descent did not converge in {max_sweeps} sweeps (last change {delta:.3g})", delta=delta,
    )


def lasso_fit(matrix, lam, targets=None, beta=None, tolerance=None, max_sweeps=None):
    """
    Lasso coefficients at a single lambda.

    Args:
        matrix (EncodedMatrix | array): encoded evaluations, or a raw design
            matrix together with ``targets``.
        lam (float): penalty, at least 0.

    Returns:
        numpy.ndarray: one coefficient per design column.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if isinstance(matrix, EncodedMatrix):
        design, targets = matrix.lasso_design(), matrix.targets
    else:
        if targets is None:
            raise ValueError("targets are required with a raw design matrix")
        design = np.asarray(matrix, dtype=float)
        targets = np.asarray(targets, dtype=float)
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(targets))):
        raise LassoConvergenceError("non-finite entries in design matrix or targets")
    return coordinate_descent(design, targets, lam, beta=beta, tolerance=tolerance, max_sweeps=max_sweeps)


def lasso_path(design, targets, grid_size=None, min_ratio=None):
    """
    Warm-started Lasso path on a descending geometric grid.

    Returns:
        tuple: (lambdas of shape (grid,), coefficients of shape (grid, d)).
    """
    config = Config.get_instance()
    grid_size = config.LASSO_GRID_SIZE if grid_size is None else grid_size
    min_ratio = config.LASSO_MIN_RATIO if min_ratio is None else min_ratio
    design = np.asarray(design, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(targets))):
        raise LassoConvergenceError("non-finite entries in design matrix or targets")

    top = lambda_max(design, targets)
    coefficients = np.zeros((grid_size, design.shape[1]))
    if top <= 0:
        return np.zeros(grid_size), coefficients
    lambdas = np.geomspace(top, top * min_ratio, grid_size)
    beta = np.zeros(design.shape[1])
    for i, lam in enumerate(lambdas):
        beta = coordinate_descent(design, targets, lam, beta=beta)
        coefficients[i] = beta
    return lambdas, coefficients


def rank_design(design, targets, column_parameters, parameters, grid_size=None, workload_id=None):
    """
    Rank parameters from a standardized design whose column j belongs to
    ``column_parameters[j]``. Parameters without any column score 0.
    """
    lambdas, coefficients = lasso_path(design, targets, grid_size)
    column_parameters = list(column_parameters)
    entries = []
    for name in parameters:
        columns = [j for j, owner in enumerate(column_parameters) if owner == name]
        entry_lambda = 0.0
        score = 0.0
        if columns:
            active = np.flatnonzero(np.any(coefficients[:, columns] != 0, axis=1))
            if active.size:
                entry_lambda = float(lambdas[active[0]])
            score = float(np.max(np.abs(coefficients[-1, columns])))
        entries.append(RankingEntry(name, score, entry_lambda))
    entries.sort(key=lambda e: (-e.entry_lambda, -e.score, e.name))
    return RankingResult(tuple(entries), tuple(float(x) for x in lambdas), design.shape[0], workload_id)


def rank(records, space, grid_size=None, workload_id=None):
    """
    Rank the active parameters of ``space`` by Lasso importance.

    Failure records are ignored. At least RANK_MIN_SAMPLES successful records
    are required.

    Raises:
        InsufficientSamplesError: too few successful records.
    """
    minimum = Config.get_instance().RANK_MIN_SAMPLES
    successful = [record for record in records if not record.failed]
    if len(successful) < minimum:
        raise InsufficientSamplesError(
            f"insufficient samples: {len(successful)} successful evaluation(s), need at least {minimum}"
        )
    matrix = encode(successful, space)
    owners = [decode_column(column) for column in matrix.columns]
    result = rank_design(matrix.lasso_design(), matrix.targets, owners, space.names, grid_size, workload_id)
    logger.info(f"Ranked {len(result.entries)} parameters from {len(successful)} evaluations")
    return result


def top_k(result, k):
    """First ``k`` parameter names of a ranking."""
    if not 1 <= k <= len(result.entries):
        raise UsageError(f"k must be between 1 and {len(result.entries)}, got {k}")
    return [entry.name for entry in result.entries[:k]]
