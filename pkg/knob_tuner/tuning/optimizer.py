"""
Bayesian-optimization tuning loop.

Each iteration proposes one configuration (a seed-design sample for the first
n_init iterations, then the Expected-Improvement maximizer of a GP fitted to
the successful evaluations), widens dynamic ranges that the proposal crowds,
evaluates it through a target and updates the incumbent. Failed evaluations are
recorded but never enter the GP.
"""
from __future__ import annotations

import csv
import json
import math
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.stats import norm

from knob_tuner.config.config import Config
from knob_tuner.common.exceptions import (
    IllConditionedKernelError,
    InfeasibleConstraintsError,
    TuneAbortedError,
    UsageError,
)
from knob_tuner.common.json_encoder import dumps
from knob_tuner.common.seeds import derive_seed
from knob_tuner.metrics.tuner_metrics import get_metrics
from knob_tuner.model import gp
from knob_tuner.space.paramspace import Configuration, RangePolicy
from knob_tuner.space.sampling import _repair, clip_value, sample
from knob_tuner.store.encode_record import document_to_record, record_to_document
from knob_tuner.tuning.domain import DomainCodec, position

logger = logging.getLogger(__name__)

REPORT_KIND = "tune-report"
_SEED_DESIGN_STREAM = 0x5EED
_MODEL_STREAM = 1
_SEARCH_STREAM = 2
_FALLBACK_STREAM = 3
_MIN_REFINE_STEP = 1e-3
_LOCAL_STEPS = (0.1, 0.02, 0.005)
_EI_FLOOR = 1e-12
# GP targets are standardized losses, so the variances live on a unit scale
_STANDARDIZED_SIGNAL_BOUNDS = (1e-2, 1e1)
_STANDARDIZED_NOISE_BOUNDS = (1e-6, 1.0)


class Direction(str, Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True)
class TuneObjective:
    workload_id: str = "default"
    metric_name: str = "metric"
    direction: Direction = Direction.MAXIMIZE

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))

    def loss(self, metric):
        """Metric in the minimization frame."""
        return -metric if self.direction is Direction.MAXIMIZE else metric

    def improves(self, metric, incumbent):
        return incumbent is None or self.loss(metric) < self.loss(incumbent)


@dataclass(frozen=True)
class BoundsEvent:
    parameter: str
    old_range: tuple
    new_range: tuple
    iteration: int


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    metric: float | None
    best: float | None


@dataclass(frozen=True)
class Proposal:
    config: Configuration
    guided: bool
    hyperparameters: gp.Hyperparameters | None = None


@dataclass(frozen=True)
class TuneState:
    """Loop state; every step returns a new state."""
    space: object
    objective: TuneObjective
    budget: int
    rng_seed: int
    n_init: int
    seed_design: tuple = ()
    history: tuple = ()
    best: tuple | None = None
    bounds_log: tuple = ()
    iteration: int = 0
    dynamic_bounds: bool = True
    hyperparameters: gp.Hyperparameters | None = None
    last_full_fit: int | None = None

    @property
    def successes(self):
        return [record for record in self.history if not record.failed]


@dataclass(frozen=True)
class TuneReport:
    objective: TuneObjective
    method: str
    budget: int
    seed: int
    top_k_names: tuple
    n_init: int
    best_config: Configuration | None
    best_metric: float | None
    history: tuple
    bounds_log: tuple
    trace: tuple
    final_ranges: dict = field(default_factory=dict)

    @property
    def evaluations(self):
        return len(self.history)

    def best_after(self, evaluations):
        """Best-so-far metric after the first ``evaluations`` iterations."""
        best = None
        for point in self.trace[:evaluations]:
            best = point.best if point.best is not None else best
        return best

    def to_dict(self):
        return {
            "kind": REPORT_KIND,
            "method": self.method,
            "objective": {
                "workload_id": self.objective.workload_id,
                "metric_name": self.objective.metric_name,
                "direction": self.objective.direction.value,
            },
            "budget": self.budget,
            "seed": self.seed,
            "top_k_names": list(self.top_k_names),
            "n_init": self.n_init,
            "best": None if self.best_config is None else {
                "config": dict(self.best_config.values), "metric": self.best_metric,
            },
            "history": [record_to_document(record) for record in self.history],
            "bounds_log": [
                {"parameter": e.parameter, "old_range": list(e.old_range),
                 "new_range": list(e.new_range), "iteration": e.iteration}
                for e in self.bounds_log
            ],
            "trace": [{"iteration": p.iteration, "metric": p.metric, "best": p.best} for p in self.trace],
            "final_ranges": {name: list(r) for name, r in self.final_ranges.items()},
        }

    @classmethod
    def from_dict(cls, document):
        if document.get("kind") != REPORT_KIND:
            raise UsageError(f"not a tuning report (kind {document.get('kind')!r})")
        objective = TuneObjective(**document["objective"])
        best = document.get("best")
        return cls(
            objective=objective,
            method=document["method"],
            budget=int(document["budget"]),
            seed=int(document["seed"]),
            top_k_names=tuple(document["top_k_names"]),
            n_init=int(document["n_init"]),
            best_config=None if best is None else Configuration(best["config"]),
            best_metric=None if best is None else float(best["metric"]),
            history=tuple(document_to_record(d) for d in document["history"]),
            bounds_log=tuple(
                BoundsEvent(e["parameter"], tuple(e["old_range"]), tuple(e["new_range"]), int(e["iteration"]))
                for e in document["bounds_log"]
            ),
            trace=tuple(TracePoint(p["iteration"], p["metric"], p["best"]) for p in document["trace"]),
            final_ranges={name: tuple(r) for name, r in document.get("final_ranges", {}).items()},
        )

    def write_json(self, path):
        Path(path).write_text(dumps(self.to_dict(), indent=2) + "\n")

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "metric", "best_so_far"])
            for p in self.trace:
                writer.writerow([p.iteration, "" if p.metric is None else repr(p.metric),
                                 "" if p.best is None else repr(p.best)])

    def write_bounds_csv(self, path):
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "parameter", "old_low", "old_high", "new_low", "new_high"])
            for e in self.bounds_log:
                writer.writerow([e.iteration, e.parameter, *e.old_range, *e.new_range])

    def write_history_csv(self, path):
        names = []
        for record in self.history:
            names.extend(n for n in record.config if n not in names)
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "metric", "failure", *names])
            for record in self.history:
                writer.writerow([
                    record.iteration,
                    "" if record.metric is None else repr(record.metric),
                    record.failure or "",
                    *(record.config.get(n, "") for n in names),
                ])


def load_tune_report(path):
    try:
        return TuneReport.from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise UsageError(f"cannot read tuning report {path}: {e}") from e


def expected_improvement(mean, std, best, xi=None):
    """
    Expected Improvement below ``best - xi`` in the minimization frame.

    Where ``std`` is 0 the improvement is deterministic: max(best - xi - mean, 0).
    """
    xi = Config.get_instance().EI_XI if xi is None else xi
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    improvement = best - xi - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, improvement / np.where(std > 0, std, 1.0), 0.0)
        ei = improvement * norm.cdf(z) + std * norm.pdf(z)
    return np.where(std > 0, np.maximum(ei, 0.0), np.maximum(improvement, 0.0))


def initial_state(space, objective, budget, seed, n_init=None, dynamic_bounds=None):
    config = Config.get_instance()
    n_init = max(config.N_INIT_MIN, 2 * len(space)) if n_init is None else n_init
    if budget < n_init:
        raise UsageError(f"budget {budget} is below the {n_init} seed evaluations (n_init)")
    dynamic_bounds = config.DYNAMIC_BOUNDS if dynamic_bounds is None else dynamic_bounds
    seed_design = tuple(sample(space, n_init, derive_seed(seed, _SEED_DESIGN_STREAM)))
    return TuneState(space=space, objective=objective, budget=budget, rng_seed=seed, n_init=n_init,
                     seed_design=seed_design, dynamic_bounds=dynamic_bounds)


def propose(state):
    """Next configuration to evaluate (active parameters of ``state.space`` only)."""
    proposal, _ = _next_proposal(state)
    return proposal.config


def _next_proposal(state):
    """(Proposal, whether the GP hyperparameters were searched from all starts)."""
    index = len(state.history)
    if index < len(state.seed_design):
        return Proposal(state.seed_design[index], guided=False), False
    if len(state.successes) < 2:
        logger.warning("Fewer than two successful evaluations; proposing a random configuration")
        return Proposal(_random_configuration(state), guided=False), False
    try:
        return _model_proposal(state)
    except (IllConditionedKernelError, InfeasibleConstraintsError, np.linalg.LinAlgError) as e:
        logger.warning(f"Model-guided proposal failed ({e}); proposing a random configuration")
        return Proposal(_random_configuration(state), guided=False), False


def _random_configuration(state):
    return sample(state.space, 1, derive_seed(state.rng_seed, state.iteration, _FALLBACK_STREAM))[0]


def _model_proposal(state):
    settings = Config.get_instance()
    codec = DomainCodec(state.space)
    successes = state.successes
    inputs = np.asarray([codec.encode(record.config) for record in successes])
    losses = np.asarray([state.objective.loss(record.metric) for record in successes])
    scale = losses.std()
    targets = (losses - losses.mean()) / (scale if scale > 0 else 1.0)

    full_fit = (
        state.hyperparameters is None
        or state.last_full_fit is None
        or state.iteration - state.last_full_fit >= settings.GP_REFIT_INTERVAL
    )
    model = gp.fit(
        list(zip(inputs, targets)),
        restarts=settings.GP_RESTARTS if full_fit else 1,
        seed=derive_seed(state.rng_seed, state.iteration, _MODEL_STREAM),
        groups=codec.groups,
        initial=state.hyperparameters,
        signal_variance_bounds=_STANDARDIZED_SIGNAL_BOUNDS,
        noise_variance_bounds=_STANDARDIZED_NOISE_BOUNDS,
    )
    observed, _ = gp.predict_many(model, inputs)
    best = float(np.min(observed))
    incumbent = inputs[int(np.argmin(observed))]

    rng = np.random.default_rng(derive_seed(state.rng_seed, state.iteration, _SEARCH_STREAM))
    candidates = np.vstack([
        codec.random_points(rng, settings.EI_CANDIDATES),
        _local_points(codec, incumbent, rng, max(1, settings.EI_CANDIDATES // 4)),
        inputs,
    ])
    scores = _acquisition(model, candidates, best)
    top = int(np.argmax(scores))
    winner, winner_score = candidates[top], float(scores[top])
    order = np.argsort(-scores, kind="stable")[: settings.EI_REFINE_STARTS]
    for start in order:
        point, score = _refine(model, codec, candidates[start], scores[start], best)
        if score > winner_score:
            winner, winner_score = point, score
    if winner_score < _EI_FLOOR:
        means, _ = gp.predict_many(model, candidates)
        winner = candidates[int(np.argmin(means))]
        logger.debug(f"Iteration {state.iteration}: EI vanished, taking the posterior-mean minimum")
    else:
        logger.debug(f"Iteration {state.iteration}: EI maximum {winner_score:.4g}")

    config = _repair(codec.decode(winner), state.space, rng)
    seen = {_key(record.config, state.space) for record in state.history}
    if _key(config, state.space) in seen:
        config = _repair(_perturb(config, state.space, rng), state.space, rng)
    return Proposal(config, guided=True, hyperparameters=model.hyperparameters), full_fit


def _local_points(codec, center, rng, count):
    """Gaussian steps of several sizes around ``center`` on its numeric coordinates."""
    points = np.repeat(center[None, :], count, axis=0)
    coordinates = codec.numeric_coordinates
    if not coordinates:
        return points
    steps = np.asarray(_LOCAL_STEPS)[np.arange(count) % len(_LOCAL_STEPS)]
    noise = rng.standard_normal((count, len(coordinates))) * steps[:, None]
    points[:, coordinates] = np.clip(points[:, coordinates] + noise, 0.0, 1.0)
    return points


def _acquisition(model, points, best):
    means, variances = gp.predict_many(model, points)
    return expected_improvement(means, np.sqrt(variances), best)


def _refine(model, codec, start, score, best):
    """Coordinate search on the numeric coordinates, halving the step when stuck."""
    point = np.array(start, dtype=float)
    coordinates = codec.numeric_coordinates
    step = 0.1
    while coordinates and step >= _MIN_REFINE_STEP:
        trials = []
        for c in coordinates:
            for delta in (step, -step):
                trial = point.copy()
                trial[c] = min(max(trial[c] + delta, 0.0), 1.0)
                trials.append(trial)
        trials = np.asarray(trials)
        trial_scores = _acquisition(model, trials, best)
        j = int(np.argmax(trial_scores))
        if trial_scores[j] > score:
            point, score = trials[j], float(trial_scores[j])
        else:
            step /= 2
    return point, score


def _key(config, space):
    return tuple(config[name] for name in space.names)


def _perturb(config, space, rng):
    """Move one randomly chosen parameter by one grid step."""
    spec = space.parameters[int(rng.integers(len(space.parameters)))]
    value = config[spec.name]
    if spec.is_categorical:
        index = spec.categories.index(value)
        return config.updated({spec.name: spec.categories[(index + 1) % len(spec.categories)]})
    low, high = spec.range
    if spec.is_integer:
        step = 1
    elif spec.log_scale:
        step = value * ((high / low) ** 0.01 - 1)
    else:
        step = (high - low) / 100
    moved = value + step if value + step <= high else value - step
    return config.updated({spec.name: clip_value(spec, moved)})


def expand_bounds(state, proposal):
    """
    Widen dynamic ranges whose outer edge fraction the proposal falls into.

    The crowded side doubles in width (in log space for positive ranges),
    clamped by the parameter's natural minimum and declared maximum. Hard
    ranges never change.
    """
    if not state.dynamic_bounds:
        return state
    edge = Config.get_instance().BOUNDARY_EDGE_FRACTION
    space = state.space
    events = []
    for spec in state.space.parameters:
        if not spec.is_numeric or spec.range_policy is RangePolicy.HARD:
            continue
        low, high = spec.range
        if high <= low or spec.name not in proposal:
            continue
        u = position(spec, proposal[spec.name])
        new_low, new_high = low, high
        if u >= 1 - edge:
            new_high = high * (high / low) if spec.log_scale else high + (high - low)
        elif u <= edge:
            new_low = low / (high / low) if spec.log_scale else low - (high - low)
        if spec.natural_minimum is not None:
            new_low = max(new_low, spec.natural_minimum)
        if spec.upper_limit is not None:
            new_high = min(new_high, spec.upper_limit)
        if spec.is_integer:
            new_low, new_high = int(math.floor(new_low)), int(math.ceil(new_high))
        else:
            new_low, new_high = float(new_low), float(new_high)
        new_low, new_high = min(new_low, low), max(new_high, high)
        if (new_low, new_high) != (low, high):
            event = BoundsEvent(spec.name, (low, high), (new_low, new_high), state.iteration)
            logger.info(f"Expanded {spec.name} from [{low}, {high}] to [{new_low}, {new_high}]")
            events.append(event)
            space = space.with_range(spec.name, (new_low, new_high))
    if not events:
        return state
    get_metrics().observe_expansion(len(events))
    return replace(state, space=space, bounds_log=state.bounds_log + tuple(events))


def tune(space, objective, target, budget, top_k_names=None, seed=0, *, n_init=None, early_stop=None,
         dynamic_bounds=None, on_record=None):
    """
    Run Bayesian optimization over the top-K parameters of ``space``.

    Args:
        space (ParameterSpace): washed and pruned space.
        objective (TuneObjective): workload, metric name and direction.
        target (Target): evaluation backend.
        budget (int): number of evaluations, at least n_init.
        top_k_names (Sequence[str]): parameters to tune; all others stay at their
            defaults. Defaults to every active parameter.
        seed (int): run seed; with a deterministic target it fixes the report.
        n_init (int): seed-design size, default max(N_INIT_MIN, 2k).
        early_stop (int): stop after this many iterations without improvement.
        dynamic_bounds (bool): allow dynamic ranges to grow (Config DYNAMIC_BOUNDS).
        on_record (callable): called with each EvaluationRecord as it is produced.

    Returns:
        TuneReport: incumbent as a full configuration, history, bounds log and trace.

    Raises:
        UsageError: budget below n_init or unknown top-K names.
        TuneAbortedError: MAX_CONSECUTIVE_FAILURES failed evaluations in a row.
    """
    names = list(top_k_names) if top_k_names else list(space.names)
    unknown = [name for name in names if name not in space]
    if unknown:
        raise UsageError(f"top-K parameter(s) not in the space: {', '.join(unknown)}")
    restricted = space.restrict(names)
    state = initial_state(restricted, objective, budget, seed, n_init, dynamic_bounds)
    logger.info(f"Tuning {len(names)} parameters with budget {budget} (n_init {state.n_init})")
    return _run(state, target, _guided_step, "bo", names, early_stop, on_record)


def random_search(space, objective, target, budget, seed=0, *, top_k_names=None, on_record=None):
    """Baseline: evaluate ``budget`` random feasible configurations, same report shape as tune."""
    names = list(top_k_names) if top_k_names else list(space.names)
    restricted = space.restrict(names)
    configs = tuple(sample(restricted, budget, derive_seed(seed, _SEED_DESIGN_STREAM)))
    state = TuneState(space=restricted, objective=objective, budget=budget, rng_seed=seed, n_init=budget,
                      seed_design=configs, dynamic_bounds=False)
    return _run(state, target, _seed_step, "random", names, None, on_record)


def _seed_step(state):
    return state, Proposal(state.seed_design[len(state.history)], guided=False)


def _guided_step(state):
    proposal, full_fit = _next_proposal(state)
    if not proposal.guided:
        return state, proposal
    state = replace(
        state,
        hyperparameters=proposal.hyperparameters,
        last_full_fit=state.iteration if full_fit else state.last_full_fit,
    )
    return expand_bounds(state, proposal.config), proposal


def _run(state, target, step, method, names, early_stop, on_record):
    settings = Config.get_instance()
    metrics = get_metrics()
    initial_ranges = {spec.name: spec.range for spec in state.space.parameters if spec.is_numeric}
    trace = []
    streak = []
    since_improvement = 0
    for iteration in range(state.budget):
        state = replace(state, iteration=iteration)
        state, proposal = step(state)
        full = state.space.full_configuration(proposal.config)
        record = target.evaluate(full, state.objective.workload_id, derive_seed(state.rng_seed, iteration))
        record = replace(record, iteration=iteration)
        metrics.observe_evaluation(record)
        if on_record is not None:
            on_record(record)

        best = state.best
        if record.failed:
            streak.append(f"iteration {iteration}: {record.failure}")
            logger.warning(f"Evaluation {iteration} failed: {record.failure}")
            since_improvement += 1
            if len(streak) >= settings.MAX_CONSECUTIVE_FAILURES:
                raise TuneAbortedError(
                    f"tuning aborted after {len(streak)} consecutive evaluation failures", diagnostics=streak,
                )
        else:
            streak = []
            if state.objective.improves(record.metric, None if best is None else best[1]):
                best = (full, record.metric)
                since_improvement = 0
                metrics.observe_best(record.metric)
                logger.info(f"Iteration {iteration}: new incumbent {record.metric:.6g}")
            else:
                since_improvement += 1
        state = replace(state, history=state.history + (record,), best=best)
        trace.append(TracePoint(iteration, record.metric, None if best is None else best[1]))

        if early_stop and since_improvement >= early_stop and iteration + 1 >= state.n_init:
            logger.info(f"No improvement for {since_improvement} iterations; stopping early")
            break

    final_ranges = {spec.name: spec.range for spec in state.space.parameters if spec.is_numeric}
    changed = {name: r for name, r in final_ranges.items() if initial_ranges.get(name) != r}
    logger.info(f"Finished {method} run: {len(state.history)} evaluations, {len(state.bounds_log)} expansion(s)")
    return TuneReport(
        objective=state.objective,
        method=method,
        budget=state.budget,
        seed=state.rng_seed,
        top_k_names=tuple(names),
        n_init=state.n_init,
        best_config=None if state.best is None else state.best[0],
        best_metric=None if state.best is None else state.best[1],
        history=state.history,
        bounds_log=state.bounds_log,
        trace=tuple(trace),
        final_ranges=changed,
    )


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    mean: float | None
    std: float | None
    evaluations: int
    failures: int
    gain: float | None


def compare_configurations(space, configurations, target, workload_id, repeats=3, seed=0):
    """
    Evaluate labelled configurations ``repeats`` times each.

    The first label is the baseline; every row's gain is its mean metric
    divided by the baseline mean.

    Args:
        space (ParameterSpace): supplies pinned values for partial configurations.
        configurations (Mapping[str, Configuration]): label -> configuration,
            baseline first (usually "default").

    Returns:
        list[ComparisonRow]
    """
    if repeats < 1:
        raise UsageError("repeats must be >= 1")
    rows = []
    baseline = None
    for index, (label, config) in enumerate(configurations.items()):
        full = space.full_configuration(config)
        metrics = []
        failures = 0
        for repeat in range(repeats):
            record = target.evaluate(full, workload_id, derive_seed(seed, index, repeat))
            get_metrics().observe_evaluation(record)
            if record.failed:
                failures += 1
                logger.warning(f"{label}: evaluation {repeat} failed: {record.failure}")
            else:
                metrics.append(record.metric)
        mean = float(np.mean(metrics)) if metrics else None
        std = float(np.std(metrics, ddof=1)) if len(metrics) > 1 else (0.0 if metrics else None)
        if index == 0:
            baseline = mean
        gain = mean / baseline if mean is not None and baseline else None
        rows.append(ComparisonRow(label, mean, std, len(metrics), failures, gain))
        logger.info(f"{label}: mean {mean} over {len(metrics)} evaluation(s)")
    return rows
