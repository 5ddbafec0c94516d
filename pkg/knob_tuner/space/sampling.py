"""
Constraint-aware random sampling of configurations.

Numeric values are drawn log-uniformly when the range is positive and uniformly
otherwise; integers are rounded; categoricals are uniform over their labels.
Draws that break a linear constraint are first repaired by rescaling and only
rejected if repair cannot fix them.
"""
import math
import logging

import numpy as np

from knob_tuner.config.config import Config
from knob_tuner.common.exceptions import ConstraintRegionError, InfeasibleConstraintsError
from knob_tuner.space.paramspace import Configuration, Relation, TOLERANCE, check

logger = logging.getLogger(__name__)


def draw_value(spec, rng):
    """Draw one value for a parameter from its current range or categories."""
    if spec.is_categorical:
        return spec.categories[int(rng.integers(len(spec.categories)))]
    low, high = spec.range
    if low == high:
        return low
    if spec.is_integer:
        if low > 0:
            value = math.exp(rng.uniform(math.log(low - 0.5), math.log(high + 0.5)))
            return clip_value(spec, int(round(value)))
        return int(rng.integers(low, high + 1))
    if low > 0:
        return clip_value(spec, math.exp(rng.uniform(math.log(low), math.log(high))))
    return float(rng.uniform(low, high))


def clip_value(spec, value):
    low, high = spec.range
    value = min(max(value, low), high)
    return int(value) if spec.is_integer else float(value)


def draw_configuration(space, rng):
    """One unconstrained draw over the active parameters of ``space``."""
    return Configuration({spec.name: draw_value(spec, rng) for spec in space.parameters})


def sample(space, n, seed, max_attempts=None):
    """
    Draw ``n`` configurations that pass ``check`` against ``space``.

    Args:
        space (ParameterSpace): washed and pruned space.
        n (int): number of configurations, at least 1.
        seed (int): seed of the random generator; equal seeds give equal output.
        max_attempts (int): draw budget, default SAMPLE_ATTEMPTS_PER_CONFIG * n.

    Returns:
        list[Configuration]: exactly ``n`` feasible configurations.

    Raises:
        ConstraintRegionError: the budget ran out before ``n`` feasible draws.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    config = Config.get_instance()
    if max_attempts is None:
        max_attempts = config.SAMPLE_ATTEMPTS_PER_CONFIG * n
    rng = np.random.default_rng(seed)

    configurations = []
    attempts = 0
    while len(configurations) < n and attempts < max_attempts:
        attempts += 1
        candidate = draw_configuration(space, rng)
        if space.constraints and check(candidate, space):
            candidate = _rescale(candidate, space, config.REPAIR_PASSES)
            if candidate is None:
                continue
        if not check(candidate, space):
            configurations.append(candidate)

    if len(configurations) < n:
        rate = len(configurations) / attempts if attempts else 0.0
        raise ConstraintRegionError(
            f"constraint region too small: {len(configurations)} of {n} configurations "
            f"after {attempts} attempts (acceptance rate {rate:.4g})",
            acceptance_rate=rate,
        )
    logger.debug(f"Sampled {n} configurations in {attempts} attempts")
    return configurations


def repair(config, space, seed):
    """
    Move a configuration that respects ranges into the linear-constraint region.

    Violated constraints are fixed by rescaling their adjustable terms toward the
    bound (then clamping to ranges and rounding integers), for up to REPAIR_PASSES
    passes; if that does not converge the parameters involved in the violated
    constraints are redrawn, up to REPAIR_RESAMPLES times.

    Raises:
        InfeasibleConstraintsError: no feasible configuration was found.
    """
    return _repair(config, space, np.random.default_rng(seed))


def _repair(config, space, rng):
    settings = Config.get_instance()
    if not _violated(config.values, space):
        return config
    repaired = _rescale(config, space, settings.REPAIR_PASSES)
    if repaired is not None:
        return repaired

    involved = sorted({
        name
        for constraint in _violated(config.values, space)
        for name in constraint.names
        if name in space
    })
    logger.debug(f"Rescaling did not converge; resampling {', '.join(involved)}")
    for _ in range(settings.REPAIR_RESAMPLES):
        redrawn = config.updated({name: draw_value(space.parameter(name), rng) for name in involved})
        if not _violated(redrawn.values, space):
            return redrawn
        redrawn = _rescale(redrawn, space, settings.REPAIR_PASSES)
        if redrawn is not None:
            return redrawn
    raise InfeasibleConstraintsError(
        f"infeasible constraint system: no repair found for {', '.join(involved)} "
        f"after {settings.REPAIR_RESAMPLES} resamples"
    )


def _violated(values, space):
    merged = {**dict(space.pinned), **dict(values)}
    return [c for c in space.constraints if not c.satisfied(c.lhs(merged))]


def _rescale(config, space, passes):
    """Iteratively rescale violated constraints; None when still infeasible."""
    values = dict(config.values)
    for _ in range(passes):
        violated = _violated(values, space)
        if not violated:
            return Configuration(values)
        for constraint in violated:
            values.update(_rescale_one(values, constraint, space))
    return None if _violated(values, space) else Configuration(values)


def _rescale_one(values, constraint, space):
    merged = {**dict(space.pinned), **values}
    lhs = constraint.lhs(merged)
    target = constraint.bound
    if constraint.relation is Relation.LT:
        target -= TOLERANCE * max(1.0, abs(constraint.bound))
    shrinking = lhs > target

    adjustable = [(name, coef) for name, coef in constraint.terms if name in space and coef != 0]
    positive = [(n, c) for n, c in adjustable if c > 0]
    negative = [(n, c) for n, c in adjustable if c < 0]

    for group in (positive, negative):
        part = sum(c * float(merged[n]) for n, c in group)
        if part == 0:
            continue
        factor = (target - (lhs - part)) / part
        if factor < 0:
            continue
        # values in this group move by the same factor; integers round away from the bound
        down = shrinking == (group is positive)
        updates = {}
        for name, _ in group:
            spec = space.parameter(name)
            scaled = float(merged[name]) * factor
            if spec.is_integer:
                scaled = math.floor(scaled + 1e-9) if down else math.ceil(scaled - 1e-9)
            updates[name] = clip_value(spec, scaled)
        return updates

    # no multiplicative fix: push every adjustable term to the extreme that lowers (or raises) lhs
    updates = {}
    for name, coef in adjustable:
        low, high = space.parameter(name).range
        lower_lhs = low if coef > 0 else high
        raise_lhs = high if coef > 0 else low
        updates[name] = lower_lhs if shrinking else raise_lhs
    return updates
