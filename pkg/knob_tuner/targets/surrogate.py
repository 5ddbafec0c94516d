"""
Synthetic storage-performance surrogate.

Each surrogate dimension maps a parameter value to a coordinate u, its position
in a reference range (logarithmic when the range is positive and spans at least
a factor 16). Only the influential dimensions matter:

    log g(u) = sum_i s_i * (-((u_i - c_i) / w_i)^2 + r_i * cos(2*pi*nu_i*(u_i - c_i) + phi_i))
             + sum_(i,j) gamma_ij * (u_i - c_i) * (u_j - c_j)

    metric = base * g(u) * (1 + eps),   eps ~ N(0, noise_rel^2) drawn from the draw seed

The ripple gives every influential dimension several local optima; the
multiplicative form lets a tuned configuration be a multiple of the default.
"""
from __future__ import annotations

import itertools
import json
import math
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from knob_tuner.common.exceptions import OracleInfeasibleError, TemplateError
from knob_tuner.space.paramspace import load_space
from knob_tuner.targets.records import EvaluationRecord, Source, utc_now

logger = logging.getLogger(__name__)

LOG_RATIO = 16.0
ORACLE_MAX_INFLUENTIAL = 4
PAIR_GRID_POINTS = 201
LARGE_GROUP_GRID_POINTS = 61
_ORACLE_CHUNK = 250_000


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str
    default: float
    low: float
    high: float
    range_policy: str = "hard"

    @property
    def log(self):
        return self.low > 0 and self.high / self.low >= LOG_RATIO

    def position(self, value):
        if self.high <= self.low:
            return 0.0
        if self.log:
            if value <= 0:
                return -math.inf
            return (math.log(value) - math.log(self.low)) / (math.log(self.high) - math.log(self.low))
        return (float(value) - self.low) / (self.high - self.low)

    def value(self, u):
        if self.log:
            value = math.exp(math.log(self.low) + u * (math.log(self.high) - math.log(self.low)))
        else:
            value = self.low + u * (self.high - self.low)
        return int(round(value)) if self.kind == "integer" else float(value)


@dataclass(frozen=True)
class Component:
    dim: int
    center: float
    width: float
    weight: float
    ripple: float
    frequency: float
    phase: float = 0.0

    def log_effect(self, u):
        offset = u - self.center
        return self.weight * (-(offset / self.width) ** 2 + self.ripple * np.cos(2 * np.pi * self.frequency * offset + self.phase))


@dataclass(frozen=True)
class Interaction:
    first: int
    second: int
    strength: float


@dataclass(frozen=True)
class SurrogateSpec:
    dimensions: tuple
    components: tuple
    interactions: tuple = ()
    base: float = 1000.0
    noise_rel: float = 0.025
    seed: int = 0

    def __post_init__(self):
        d = len(self.dimensions)
        indices = [c.dim for c in self.components]
        if len(set(indices)) != len(indices):
            raise TemplateError("surrogate influential dimensions must be distinct")
        if any(not 0 <= i < d for i in indices):
            raise TemplateError(f"surrogate influential dimension out of range [0, {d})")
        if self.noise_rel < 0:
            raise TemplateError("surrogate noise_rel must be >= 0")
        for interaction in self.interactions:
            if interaction.first not in indices or interaction.second not in indices or interaction.first == interaction.second:
                raise TemplateError("surrogate interactions must pair two distinct influential dimensions")
        for component in self.components:
            if count_local_maxima(component) < 2:
                raise TemplateError(
                    f"surrogate component on dimension {component.dim} has fewer than two local optima; "
                    "raise its ripple or frequency"
                )

    @property
    def dims(self):
        return len(self.dimensions)

    @property
    def influential(self):
        return tuple(c.dim for c in self.components)

    @property
    def influential_names(self):
        return tuple(self.dimensions[i].name for i in self.influential)

    def coordinates(self, config):
        """u of every influential dimension, in component order."""
        return np.asarray([self.dimensions[c.dim].position(config[self.dimensions[c.dim].name])
                           for c in self.components])

    def log_g(self, u):
        """log g for one coordinate vector or a batch (rows) in component order."""
        u = np.asarray(u, dtype=float)
        total = np.zeros(u.shape[:-1])
        for i, component in enumerate(self.components):
            total = total + component.log_effect(u[..., i])
        order = {c.dim: i for i, c in enumerate(self.components)}
        for interaction in self.interactions:
            a, b = order[interaction.first], order[interaction.second]
            ca, cb = self.components[a].center, self.components[b].center
            total = total + interaction.strength * (u[..., a] - ca) * (u[..., b] - cb)
        return total

    def noiseless(self, config):
        return float(self.base * math.exp(self.log_g(self.coordinates(config))))

    def default_values(self):
        return {dim.name: dim.default for dim in self.dimensions}

    def space_document(self):
        parameters = []
        for dim in self.dimensions:
            default = int(dim.default) if dim.kind == "integer" else float(dim.default)
            low, high = (int(dim.low), int(dim.high)) if dim.kind == "integer" else (dim.low, dim.high)
            parameters.append({
                "name": dim.name, "kind": dim.kind, "default": default,
                "range": [low, high], "range_policy": dim.range_policy,
            })
        return {"parameters": parameters}

    def space(self):
        """The parameter space this surrogate was generated with."""
        return load_space(self.space_document())


def count_local_maxima(component, points=2001):
    """Local maxima of one component's shape over [0, 1] widened to cover its centre."""
    low = min(0.0, component.center - component.width)
    high = max(1.0, component.center + component.width)
    u = np.linspace(low, high, points)
    values = component.log_effect(u) / component.weight if component.weight else np.zeros_like(u)
    interior = (values[1:-1] > values[:-2]) & (values[1:-1] > values[2:])
    return int(np.sum(interior)) + int(values[0] > values[1]) + int(values[-1] > values[-2])


def surrogate_eval(spec, config, draw_seed):
    """Metric of ``config``: noiseless value times (1 + eps), eps seeded by ``draw_seed``."""
    value = spec.noiseless(config)
    if spec.noise_rel == 0:
        return value
    eps = np.random.default_rng(draw_seed).normal(0.0, spec.noise_rel)
    return float(value * (1.0 + eps))


def _oracle_domain(spec):
    domain = []
    for component in spec.components:
        domain.append((min(0.0, component.center - component.width), max(1.0, component.center + component.width)))
    return domain


def _groups(spec):
    """Influential component positions grouped by the interaction graph."""
    order = {c.dim: i for i, c in enumerate(spec.components)}
    parent = list(range(len(spec.components)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for interaction in spec.interactions:
        parent[find(order[interaction.first])] = find(order[interaction.second])
    groups = {}
    for i in range(len(spec.components)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def surrogate_truth(spec, domain=None):
    """
    Noiseless optimum of a surrogate by dense grid plus local polish.

    The function is separable across interaction-connected groups of influential
    dimensions, so each group is searched on its own grid.

    Args:
        spec (SurrogateSpec): at most four influential dimensions.
        domain (list[tuple]): u bounds per influential dimension; by default
            [0, 1] widened to cover each component's centre.

    Returns:
        tuple: (optimum metric, {dimension name: optimal u}).

    Raises:
        OracleInfeasibleError: more than four influential dimensions.
    """
    k = len(spec.components)
    if k > ORACLE_MAX_INFLUENTIAL:
        raise OracleInfeasibleError(f"oracle infeasible: {k} influential dimensions (at most {ORACLE_MAX_INFLUENTIAL})")
    domain = domain or _oracle_domain(spec)
    best_u = np.array([c.center for c in spec.components], dtype=float)

    for group in _groups(spec):
        points = PAIR_GRID_POINTS if len(group) <= 2 else LARGE_GROUP_GRID_POINTS
        axes = [np.linspace(domain[i][0], domain[i][1], points) for i in group]

        def group_value(values, group=group):
            u = np.broadcast_to(best_u, values.shape[:-1] + best_u.shape).copy()
            u[..., group] = values
            return spec.log_g(u)

        best_value, best_point = -np.inf, None
        grid = itertools.product(*axes) if len(group) > 2 else None
        if grid is None:
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(group))
            values = group_value(mesh)
            j = int(np.argmax(values))
            best_value, best_point = values[j], mesh[j]
        else:
            while True:
                chunk = np.asarray(list(itertools.islice(grid, _ORACLE_CHUNK)))
                if chunk.size == 0:
                    break
                values = group_value(chunk)
                j = int(np.argmax(values))
                if values[j] > best_value:
                    best_value, best_point = values[j], chunk[j]

        polished = minimize(lambda x: -float(group_value(np.asarray(x)[None, :])[0]), best_point,
                            method="L-BFGS-B", bounds=[domain[i] for i in group])
        if polished.success and -polished.fun >= best_value:
            best_point = polished.x
        best_u[group] = best_point

    optimum = float(spec.base * math.exp(spec.log_g(best_u)))
    coordinates = {spec.dimensions[c.dim].name: float(best_u[i]) for i, c in enumerate(spec.components)}
    return optimum, coordinates


def _synthesize_dimensions(rng, dims, range_policy):
    dimensions = []
    for i in range(dims):
        if i % 2 == 0:
            default = int(round(10 ** rng.uniform(0.7, 4.0)))
            low, high = max(1, default // 4), default * 4
            kind = "integer"
        else:
            default = float(10 ** rng.uniform(-1.0, 3.0))
            low, high = default / 4, default * 4
            kind = "real"
        dimensions.append(Dimension(f"p{i:03d}", kind, default, low, high, range_policy))
    return tuple(dimensions)


def _dimensions_from_space(space):
    dimensions = []
    for spec in space.parameters:
        if not spec.is_numeric:
            continue
        low, high = spec.range
        dimensions.append(Dimension(spec.name, spec.kind.value, spec.default, low, high, spec.range_policy.value))
    return tuple(dimensions)


def generate_surrogate(dims=128, influential=8, seed=0, noise_rel=0.025, default_gap=2.2, base=1000.0,
                       outside_optimum=False, range_policy="hard", interactions=None, space=None,
                       component_seed=None):
    """
    Build a random surrogate whose default sits at least ``default_gap`` below
    the value at the component centres.

    Args:
        dims (int): number of synthesized dimensions (ignored when ``space`` is given).
        influential (int): number of influential dimensions.
        seed (int): seed for the synthesized dimensions.
        outside_optimum (bool): place centres beyond the upper end of the
            reference ranges (u in [1.2, 1.5]); only reachable with dynamic ranges.
        range_policy (str): policy of synthesized dimensions.
        interactions (int): number of pairwise interaction terms, default influential // 4.
        space (ParameterSpace): bind to the numeric parameters of this space.
        component_seed (int): seed for the influential set and shapes, default ``seed``.
    """
    rng = np.random.default_rng(seed)
    if space is not None:
        dimensions = _dimensions_from_space(space)
    else:
        dimensions = _synthesize_dimensions(rng, dims, "dynamic" if outside_optimum else range_policy)
    if not 1 <= influential <= len(dimensions):
        raise TemplateError(f"influential must be between 1 and {len(dimensions)}")
    if default_gap <= 1:
        raise TemplateError("default_gap must be > 1")

    rng = np.random.default_rng(seed if component_seed is None else component_seed)
    chosen = sorted(int(i) for i in rng.choice(len(dimensions), size=influential, replace=False))
    decay = rng.uniform(0.8, 0.85)
    shapes = []
    for rank, index in enumerate(rng.permutation(chosen)):
        dim = dimensions[index]
        u_default = dim.position(dim.default)
        if outside_optimum:
            center = rng.uniform(1.2, 1.5)
        else:
            offset = rng.uniform(0.25, 0.4)
            center = u_default + offset if rng.random() < 0.5 else u_default - offset
            if not 0.05 <= center <= 0.95:
                center = u_default - (center - u_default)
        width = float(rng.uniform(0.45, 0.55))
        frequency = float(rng.uniform(2.5, 3.5))
        # ripple strong enough that the neighbouring ripple peaks stay local maxima
        ripple = max(float(rng.uniform(0.1, 0.2)), 1.5 / (math.pi * frequency ** 2 * width ** 2))
        shapes.append(dict(dim=int(index), center=float(center), width=width, weight=float(decay ** rank),
                           ripple=ripple, frequency=frequency, phase=0.0))

    pairs = []
    n_interactions = influential // 4 if interactions is None else interactions
    order = [s["dim"] for s in shapes]
    for a, b in zip(order[0::2], order[1::2]):
        if len(pairs) >= n_interactions:
            break
        pairs.append((a, b))

    defaults = {i: dimensions[i].position(dimensions[i].default) for i in chosen}
    unit = SurrogateSpec(dimensions, tuple(Component(**s) for s in shapes), (), base, noise_rel, seed)
    centres = np.array([s["center"] for s in shapes])
    default_u = np.array([defaults[s["dim"]] for s in shapes])
    interaction_terms = []
    for a, b in pairs:
        sa = next(s for s in shapes if s["dim"] == a)
        sb = next(s for s in shapes if s["dim"] == b)
        product = (defaults[a] - sa["center"]) * (defaults[b] - sb["center"])
        strength = -0.5 * min(sa["weight"], sb["weight"]) * (1.0 if product >= 0 else -1.0)
        interaction_terms.append(Interaction(a, b, strength))
    unit = SurrogateSpec(dimensions, unit.components, tuple(interaction_terms), base, noise_rel, seed)

    gap = float(unit.log_g(centres) - unit.log_g(default_u))
    scale = 1.05 * math.log(default_gap) / gap
    components = tuple(
        Component(c.dim, c.center, c.width, c.weight * scale, c.ripple, c.frequency, c.phase) for c in unit.components
    )
    interaction_terms = tuple(Interaction(i.first, i.second, i.strength * scale) for i in interaction_terms)
    spec = SurrogateSpec(dimensions, components, interaction_terms, base, noise_rel, seed)
    logger.debug(f"Generated surrogate with influential {', '.join(spec.influential_names)}")
    return spec


class SurrogateTarget:
    """Target backed by one surrogate per workload (or one shared surrogate)."""

    def __init__(self, spec, workloads=None):
        self.spec = spec
        self.workloads = dict(workloads or {})
        self.source = Source.SURROGATE

    def spec_for(self, workload_id):
        return self.workloads.get(workload_id, self.spec)

    def space(self):
        return self.spec.space()

    def evaluate(self, config, workload_id, draw_seed):
        started = utc_now()
        spec = self.spec_for(workload_id)
        try:
            metric = surrogate_eval(spec, config, draw_seed)
        except KeyError as e:
            return EvaluationRecord.failed_with(config, workload_id, f"configuration lacks parameter {e}",
                                                source=self.source, timestamp=started)
        elapsed = (utc_now() - started).total_seconds()
        return EvaluationRecord.success(config, workload_id, metric, duration_s=elapsed,
                                        source=self.source, timestamp=started)


def _parse_explicit(document):
    try:
        dimensions = tuple(
            Dimension(d["name"], d.get("kind", "real"), d["default"], d["range"][0], d["range"][1],
                      d.get("range_policy", "hard"))
            for d in document["dimensions"]
        )
        index = {d.name: i for i, d in enumerate(dimensions)}

        def dim_index(value):
            return index[value] if isinstance(value, str) else int(value)

        components = tuple(
            Component(dim_index(c["dim"]), float(c["center"]), float(c.get("width", 0.5)), float(c.get("weight", 1.0)),
                      float(c.get("ripple", 0.15)), float(c.get("frequency", 3.0)), float(c.get("phase", 0.0)))
            for c in document["components"]
        )
        interactions = tuple(
            Interaction(dim_index(i["dims"][0]), dim_index(i["dims"][1]), float(i["strength"]))
            for i in document.get("interactions", [])
        )
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise TemplateError(f"invalid surrogate specification: {e!r}") from e
    return SurrogateSpec(dimensions, components, interactions, float(document.get("base", 1000.0)),
                         float(document.get("noise_rel", 0.025)), int(document.get("seed", 0)))


_GENERATE_KEYS = {"dims", "influential", "seed", "noise_rel", "default_gap", "base", "outside_optimum",
                  "range_policy", "interactions"}


def load_surrogate(source, space=None):
    """
    Load a surrogate target from a JSON file or mapping.

    The document is either explicit (``dimensions``, ``components``,
    ``interactions``) or holds a ``generate`` stanza. A ``workloads`` map of
    workload id -> {"seed": int} gives each workload its own influential set.

    Args:
        source (str | Path | Mapping): spec file path or decoded document.
        space (ParameterSpace): bind a generated surrogate to this space's
            numeric parameters.
    """
    if isinstance(source, (str, Path)):
        try:
            document = json.loads(Path(source).read_text())
        except (OSError, ValueError) as e:
            raise TemplateError(f"cannot read surrogate specification {source}: {e}") from e
    else:
        document = dict(source)

    workloads = document.get("workloads", {})
    if "generate" not in document:
        spec = _parse_explicit(document)
        return SurrogateTarget(spec, {name: spec for name in workloads})

    options = dict(document["generate"])
    unknown = set(options) - _GENERATE_KEYS
    if unknown:
        raise TemplateError(f"unknown generate option(s): {', '.join(sorted(unknown))}")
    spec = generate_surrogate(space=space, **options)
    per_workload = {}
    for name, settings in workloads.items():
        per_workload[name] = generate_surrogate(space=space, component_seed=int(settings["seed"]), **options)
    return SurrogateTarget(spec, per_workload)
