"""
Parameter-space model for knob_tuner.

A parameter space is the declarative, constraint-annotated description of every
tunable knob of a target system. This module parses and validates the JSON form,
and implements the space transformations that produce a clean search domain:

- wash: drop parameters that must never be tuned (identity, paths, debug knobs)
- prune: pin module-selector parameters and drop parameters of inactive modules
- check: report range, category and linear-constraint violations as data

Spaces and configurations are immutable; every transformation returns a new value.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

from knob_tuner.common.exceptions import (
    SelectionError,
    SpaceParseError,
    SpaceValidationError,
)

import logging
logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
BOOLEAN_LABELS = ("false", "true")


class Kind(str, Enum):
    INTEGER = "integer"
    REAL = "real"
    BOOLEAN = "boolean"
    CATEGORICAL = "categorical"


class RangePolicy(str, Enum):
    HARD = "hard"
    DYNAMIC = "dynamic"


class Relation(str, Enum):
    LE = "<="
    LT = "<"
    EQ = "="


_RELATION_ALIASES = {"<=": Relation.LE, "≤": Relation.LE, "<": Relation.LT, "=": Relation.EQ, "==": Relation.EQ}
_SPACE_KEYS = {"parameters", "selectors", "constraints"}
_PARAMETER_KEYS = {
    "name", "kind", "default", "range", "range_policy", "categories",
    "configurable", "module", "description", "min", "max",
}
_SELECTOR_KEYS = {"selector_param", "activation"}
_CONSTRAINT_KEYS = {"terms", "relation", "bound"}


@dataclass(frozen=True)
class ParameterSpec:
    """
    One tunable knob.

    Booleans never survive parsing as their own kind: they become categoricals
    with the labels ``("false", "true")``.
    """
    name: str
    kind: Kind
    default: Any
    range: tuple | None = None
    range_policy: RangePolicy = RangePolicy.HARD
    categories: tuple = ()
    configurable: bool = True
    module: str | None = None
    description: str = ""
    lower_limit: float | None = None
    upper_limit: float | None = None

    @property
    def is_numeric(self):
        return self.kind in (Kind.INTEGER, Kind.REAL)

    @property
    def is_categorical(self):
        return self.kind is Kind.CATEGORICAL

    @property
    def is_integer(self):
        return self.kind is Kind.INTEGER

    @property
    def log_scale(self):
        """Positive numeric ranges are explored on a logarithmic scale."""
        return self.is_numeric and self.range is not None and self.range[0] > 0

    @property
    def natural_minimum(self):
        if self.lower_limit is not None:
            return self.lower_limit
        if self.is_numeric and self.default >= 0:
            return 0
        return None

    def coerce(self, value):
        """Convert a raw value (e.g. parsed text) to this parameter's value type."""
        if self.is_categorical:
            if isinstance(value, bool):
                return "true" if value else "false"
            return str(value)
        if self.is_integer:
            return int(round(float(value)))
        return float(value)

    def with_range(self, new_range):
        return replace(self, range=tuple(new_range))


@dataclass(frozen=True)
class ModuleSelector:
    selector_param: str
    activation: Mapping[str, tuple]

    @property
    def module_paths(self):
        return {path for paths in self.activation.values() for path in paths}


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple
    relation: Relation
    bound: float

    @property
    def names(self):
        return tuple(name for name, _ in self.terms)

    def lhs(self, values):
        return sum(coef * float(values[name]) for name, coef in self.terms)

    def satisfied(self, lhs):
        scale = TOLERANCE * max(1.0, abs(self.bound))
        if self.relation is Relation.LE:
            return lhs <= self.bound + scale
        if self.relation is Relation.LT:
            return lhs < self.bound
        return abs(lhs - self.bound) <= scale

    def slack(self, lhs):
        if self.relation is Relation.EQ:
            return -abs(lhs - self.bound)
        return self.bound - lhs

    def describe(self):
        parts = []
        for name, coef in self.terms:
            if coef == 1:
                parts.append(name)
            elif coef == -1:
                parts.append(f"-{name}")
            else:
                parts.append(f"{coef:g}*{name}")
        expression = " + ".join(parts).replace("+ -", "- ")
        return f"{expression} {self.relation.value} {self.bound:g}"


@dataclass(frozen=True)
class Configuration:
    """One assignment of values to parameters (parameter name -> value)."""
    values: Mapping[str, Any]

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def get(self, name, default=None):
        return self.values.get(name, default)

    def items(self):
        return self.values.items()

    def names(self):
        return tuple(self.values)

    def updated(self, updates):
        return Configuration({**self.values, **dict(updates)})

    def restricted_to(self, names):
        return Configuration({name: self.values[name] for name in names if name in self.values})

    def to_dict(self):
        return dict(self.values)


@dataclass(frozen=True)
class Violation:
    """A single breach found by check(); ``slack`` is set for linear constraints."""
    kind: str
    subject: str
    observed: Any
    allowed: str
    slack: float | None = None


@dataclass(frozen=True)
class ParameterSpace:
    parameters: tuple
    selectors: tuple = ()
    constraints: tuple = ()
    pinned: Mapping[str, Any] = field(default_factory=dict)
    warnings: tuple = field(default=(), compare=False)

    @cached_property
    def _index(self):
        return {spec.name: spec for spec in self.parameters}

    @property
    def names(self):
        return tuple(spec.name for spec in self.parameters)

    def __contains__(self, name):
        return name in self._index

    def __len__(self):
        return len(self.parameters)

    def parameter(self, name):
        return self._index[name]

    def defaults(self):
        return Configuration({spec.name: spec.default for spec in self.parameters})

    def full_configuration(self, config):
        """Merge pinned values back in so the result covers every known parameter."""
        values = config.values if isinstance(config, Configuration) else dict(config)
        return Configuration({**dict(self.pinned), **dict(values)})

    def with_range(self, name, new_range):
        parameters = tuple(
            spec.with_range(new_range) if spec.name == name else spec for spec in self.parameters
        )
        return replace(self, parameters=parameters)

    def restrict(self, names):
        """
        Keep only the named parameters; every other active parameter is pinned
        to its default.
        """
        keep = set(names)
        unknown = keep - set(self.names)
        if unknown:
            raise SelectionError(f"unknown parameter(s) for restriction: {', '.join(sorted(unknown))}")
        pinned = dict(self.pinned)
        for spec in self.parameters:
            if spec.name not in keep:
                pinned[spec.name] = spec.default
        parameters = tuple(spec for spec in self.parameters if spec.name in keep)
        selectors = tuple(s for s in self.selectors if s.selector_param in keep)
        constraints = tuple(c for c in self.constraints if any(n in keep for n in c.names))
        return ParameterSpace(parameters, selectors, constraints, pinned, self.warnings)


def load_space(document):
    """
    Parse and validate a parameter-space document.

    Args:
        document (str | Mapping): JSON text of the space, or the already
            decoded mapping.

    Returns:
        ParameterSpace: the validated space.

    Raises:
        SpaceParseError: the document breaks the schema (names the field).
        SpaceValidationError: one or more invariants are breached (lists all).
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise SpaceParseError(f"document is not valid JSON: {e}") from e
    if not isinstance(document, Mapping):
        raise SpaceParseError("document: expected a JSON object")

    unknown = set(document) - _SPACE_KEYS
    if unknown:
        raise SpaceParseError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    if "parameters" not in document:
        raise SpaceParseError("parameters: missing required key")

    raw_parameters = _expect_list(document["parameters"], "parameters")
    raw_selectors = _expect_list(document.get("selectors", []), "selectors")
    raw_constraints = _expect_list(document.get("constraints", []), "constraints")

    breaches = []
    warnings = []
    parameters = [_parse_parameter(raw, i, breaches) for i, raw in enumerate(raw_parameters)]
    parameters = [p for p in parameters if p is not None]
    selectors = [_parse_selector(raw, i) for i, raw in enumerate(raw_selectors)]
    constraints = [_parse_constraint(raw, i) for i, raw in enumerate(raw_constraints)]

    if not raw_parameters:
        breaches.append("space has no parameters")

    seen = set()
    for spec in parameters:
        if spec.name in seen:
            breaches.append(f"duplicate parameter name {spec.name!r}")
        seen.add(spec.name)
    index = {spec.name: spec for spec in parameters}

    for selector in selectors:
        _validate_selector(selector, index, parameters, breaches, warnings)

    normalized = []
    for constraint in constraints:
        constraint = _validate_constraint(constraint, index, breaches)
        if constraint is not None:
            normalized.append(constraint)

    if not breaches:
        defaults = {spec.name: spec.default for spec in parameters}
        for constraint in normalized:
            lhs = constraint.lhs(defaults)
            if not constraint.satisfied(lhs):
                breaches.append(
                    f"default configuration violates constraint {constraint.describe()} "
                    f"(observed {lhs:g})"
                )

    if breaches:
        raise SpaceValidationError(breaches)

    for message in warnings:
        logger.warning(message)
    return ParameterSpace(tuple(parameters), tuple(selectors), tuple(normalized), {}, tuple(warnings))


def load_space_file(path):
    """Read and validate a parameter-space JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SpaceParseError(f"cannot read parameter space file {path}: {e}") from e
    return load_space(text)


def wash(space):
    """
    Remove parameters marked ``configurable: false``.

    Selectors and constraints that reference a removed parameter are dropped
    with a warning. Washing never fails and never adds parameters.
    """
    removed = {spec.name for spec in space.parameters if not spec.configurable}
    if not removed:
        return space
    warnings = list(space.warnings)
    parameters = tuple(spec for spec in space.parameters if spec.name not in removed)
    for name in sorted(removed):
        logger.info(f"Washed unconfigurable parameter {name}")

    selectors = []
    for selector in space.selectors:
        if selector.selector_param in removed:
            _warn(warnings, f"dropped selector {selector.selector_param}: parameter was washed")
        else:
            selectors.append(selector)

    constraints = []
    for constraint in space.constraints:
        washed = [name for name in constraint.names if name in removed]
        if washed:
            _warn(warnings, f"dropped constraint {constraint.describe()}: references washed {', '.join(washed)}")
        else:
            constraints.append(constraint)

    return ParameterSpace(parameters, tuple(selectors), tuple(constraints), dict(space.pinned), tuple(warnings))


def prune(space, selections):
    """
    Pin selector parameters to the chosen categories and drop the parameters of
    modules those choices leave inactive.

    Args:
        space (ParameterSpace): a valid (usually washed) space.
        selections (Mapping): selector parameter name -> chosen category.

    Returns:
        ParameterSpace: the pruned space; selector choices are recorded in ``pinned``.

    Raises:
        SelectionError: a declared selector has no selection, a category is
            unknown, or a selection names something that is not a selector.
    """
    selections = dict(selections or {})
    chosen = {}
    missing = []
    for selector in space.selectors:
        name = selector.selector_param
        if name not in selections:
            missing.append(name)
            continue
        spec = space.parameter(name)
        label = spec.coerce(selections[name])
        if label not in spec.categories:
            raise SelectionError(
                f"unknown category {label!r} for selector {name}; expected one of {', '.join(spec.categories)}"
            )
        chosen[name] = label
    if missing:
        raise SelectionError(f"missing selection for selector(s): {', '.join(missing)}")

    for name, value in selections.items():
        if name in chosen:
            continue
        if name in space.pinned:
            if str(space.pinned[name]) != str(value):
                raise SelectionError(f"{name} is already pinned to {space.pinned[name]!r}")
            continue
        raise SelectionError(f"{name} is not a selector parameter")

    if not space.selectors:
        return space

    warnings = list(space.warnings)
    governed = set()
    activated = set()
    for selector in space.selectors:
        governed |= selector.module_paths
        label = chosen[selector.selector_param]
        activated |= set(selector.activation.get(label, ()))

    kept = []
    for spec in space.parameters:
        if spec.name in chosen:
            continue
        if spec.module is None or not _matches_any(spec.module, governed) or _matches_any(spec.module, activated):
            kept.append(spec)
        else:
            logger.debug(f"Pruned {spec.name} (module {spec.module})")

    for path in sorted(activated):
        if not any(spec.module and _module_matches(spec.module, path) for spec in kept):
            _warn(warnings, f"activated module path {path!r} matches no parameter")

    kept_names = {spec.name for spec in kept}
    pinned = {**dict(space.pinned), **chosen}
    constraints = []
    for constraint in space.constraints:
        dangling = [n for n in constraint.names if n not in kept_names and n not in pinned]
        if dangling:
            _warn(warnings, f"dropped constraint {constraint.describe()}: references pruned {', '.join(dangling)}")
        elif all(n in pinned for n in constraint.names):
            continue
        else:
            constraints.append(constraint)

    logger.info(f"Pruned space from {len(space)} to {len(kept)} parameters")
    return ParameterSpace(tuple(kept), (), tuple(constraints), pinned, tuple(warnings))


def check(config, space):
    """
    Check a configuration against a space.

    Args:
        config (Configuration | Mapping): the values to check; may be partial.
        space (ParameterSpace): the space supplying ranges, categories and constraints.

    Returns:
        list[Violation]: empty iff every present value is in range/category and
            every constraint whose terms are all known holds.
    """
    values = dict(config.values if isinstance(config, Configuration) else config)
    violations = []

    for name, value in values.items():
        if name not in space:
            if name in space.pinned:
                if str(space.pinned[name]) != str(value):
                    violations.append(Violation("pinned", name, value, f"== {space.pinned[name]}"))
                continue
            violations.append(Violation("unknown-parameter", name, value, "not in space"))
            continue
        spec = space.parameter(name)
        if spec.is_categorical:
            if value not in spec.categories:
                violations.append(Violation("category", name, value, f"one of {', '.join(spec.categories)}"))
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            violations.append(Violation("type", name, value, f"finite {spec.kind.value}"))
            continue
        if spec.is_integer and float(value) != math.floor(value):
            violations.append(Violation("type", name, value, "integer"))
            continue
        low, high = spec.range
        if not low <= value <= high:
            violations.append(Violation("range", name, value, f"[{low}, {high}]"))

    merged = {**dict(space.pinned), **values}
    for constraint in space.constraints:
        if not all(n in merged for n in constraint.names):
            continue
        try:
            lhs = constraint.lhs(merged)
        except (TypeError, ValueError):
            continue
        if not constraint.satisfied(lhs):
            violations.append(Violation(
                "linear",
                constraint.describe(),
                lhs,
                f"{constraint.relation.value} {constraint.bound:g}",
                constraint.slack(lhs),
            ))
    return violations


def format_configuration(config, space=None):
    """Render a configuration as flat ``key = value`` lines (space order first)."""
    values = config.values if isinstance(config, Configuration) else dict(config)
    order = list(space.pinned) + list(space.names) if space is not None else []
    names = [n for n in order if n in values] + [n for n in values if n not in order]
    seen = set()
    lines = []
    for name in names:
        if name in seen:
            continue
        seen.add(name)
        value = values[name]
        text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n"


def render_configuration(config, path, space=None):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(format_configuration(config, space))


def read_configuration(path, space):
    """
    Parse a ``key = value`` file back into a Configuration over ``space``.

    Blank lines and lines starting with ``#`` or ``;`` are ignored. Keys that
    are pinned in the space keep their text value; unknown keys raise.
    """
    values = {}
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line[0] in "#;[":
            continue
        if "=" not in line:
            raise SpaceParseError(f"{path}:{number}: expected 'key = value'")
        key, _, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if key in space:
            values[key] = space.parameter(key).coerce(text)
        elif key in space.pinned:
            values[key] = space.pinned[key]
        else:
            raise SpaceParseError(f"{path}:{number}: unknown parameter {key!r}")
    return Configuration(values)


def _warn(warnings, message):
    logger.warning(message)
    warnings.append(message)


def _module_matches(module, path):
    return module == path or module.startswith(path.rstrip("/") + "/")


def _matches_any(module, paths):
    return any(_module_matches(module, path) for path in paths)


def _expect_list(value, field_name):
    if not isinstance(value, list):
        raise SpaceParseError(f"{field_name}: expected a list")
    return value


def _expect_number(value, field_name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpaceParseError(f"{field_name}: expected a number")
    return value


def _parse_parameter(raw, index, breaches):
    where = f"parameters[{index}]"
    if not isinstance(raw, Mapping):
        raise SpaceParseError(f"{where}: expected an object")
    unknown = set(raw) - _PARAMETER_KEYS
    if unknown:
        raise SpaceParseError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    for required in ("name", "kind", "default"):
        if required not in raw:
            raise SpaceParseError(f"{where}.{required}: missing required field")

    name = raw["name"]
    if not isinstance(name, str) or not name:
        raise SpaceParseError(f"{where}.name: expected a non-empty string")
    where = f"parameters[{index}] ({name})"
    try:
        kind = Kind(raw["kind"])
    except ValueError:
        raise SpaceParseError(f"{where}.kind: expected one of {', '.join(k.value for k in Kind)}")

    configurable = raw.get("configurable", True)
    if not isinstance(configurable, bool):
        raise SpaceParseError(f"{where}.configurable: expected a boolean")
    module = raw.get("module")
    if module is not None and not isinstance(module, str):
        raise SpaceParseError(f"{where}.module: expected a string")
    description = raw.get("description", "")
    if not isinstance(description, str):
        raise SpaceParseError(f"{where}.description: expected a string")
    lower_limit = _expect_number(raw["min"], f"{where}.min") if raw.get("min") is not None else None
    upper_limit = _expect_number(raw["max"], f"{where}.max") if raw.get("max") is not None else None

    raw_range = raw.get("range")
    if raw_range is not None:
        if not isinstance(raw_range, list) or len(raw_range) != 2:
            raise SpaceParseError(f"{where}.range: expected [low, high]")
        raw_range = (_expect_number(raw_range[0], f"{where}.range[0]"),
                     _expect_number(raw_range[1], f"{where}.range[1]"))
    raw_policy = raw.get("range_policy")
    if raw_policy is not None:
        try:
            raw_policy = RangePolicy(raw_policy)
        except ValueError:
            raise SpaceParseError(f"{where}.range_policy: expected 'hard' or 'dynamic'")
    raw_categories = raw.get("categories")
    if raw_categories is not None:
        if not isinstance(raw_categories, list) or not all(isinstance(c, str) for c in raw_categories):
            raise SpaceParseError(f"{where}.categories: expected a list of strings")

    default = raw["default"]
    common = dict(name=name, configurable=configurable, module=module, description=description)

    if kind in (Kind.BOOLEAN, Kind.CATEGORICAL):
        if raw_range is not None:
            breaches.append(f"{where}: range is only allowed on integer/real parameters")
        if kind is Kind.BOOLEAN:
            categories = BOOLEAN_LABELS
            if isinstance(default, bool):
                default = "true" if default else "false"
            if default not in categories:
                breaches.append(f"{where}: boolean default must be true or false")
        else:
            categories = tuple(raw_categories or ())
            if not categories:
                breaches.append(f"{where}: categorical parameter needs non-empty categories")
            if len(set(categories)) != len(categories):
                breaches.append(f"{where}: category labels must be unique")
            if not isinstance(default, str) or default not in categories:
                breaches.append(f"{where}: default {default!r} is not one of the categories")
        return ParameterSpec(kind=Kind.CATEGORICAL, default=default, categories=categories,
                             range_policy=RangePolicy.HARD, **common)

    if raw_categories is not None:
        breaches.append(f"{where}: categories are only allowed on categorical parameters")
    if isinstance(default, bool) or not isinstance(default, (int, float)):
        breaches.append(f"{where}: default {default!r} is not a number")
        return None
    if kind is Kind.INTEGER:
        if float(default) != math.floor(default):
            breaches.append(f"{where}: integer default {default!r} is not integral")
            return None
        default = int(default)
    else:
        default = float(default)

    policy = raw_policy or (RangePolicy.HARD if raw_range is not None else RangePolicy.DYNAMIC)
    spec = ParameterSpec(kind=kind, default=default, range_policy=policy,
                         lower_limit=lower_limit, upper_limit=upper_limit, **common)
    if raw_range is None:
        if policy is RangePolicy.HARD:
            breaches.append(f"{where}: hard range policy needs a declared range")
            return None
        value_range = _seed_dynamic_range(spec)
    else:
        low, high = raw_range
        if kind is Kind.INTEGER:
            if float(low) != math.floor(low) or float(high) != math.floor(high):
                breaches.append(f"{where}: integer range bounds must be integral")
            value_range = (int(low), int(high))
        else:
            value_range = (float(low), float(high))
        if value_range[0] > value_range[1]:
            breaches.append(f"{where}: range low {low} exceeds high {high}")
        elif not value_range[0] <= default <= value_range[1]:
            breaches.append(f"{where}: default {default} is outside range [{low}, {high}]")
    if lower_limit is not None and value_range[0] < lower_limit:
        breaches.append(f"{where}: range low {value_range[0]} is below min {lower_limit}")
    if upper_limit is not None and value_range[1] > upper_limit:
        breaches.append(f"{where}: range high {value_range[1]} is above max {upper_limit}")
    return spec.with_range(value_range)


def _seed_dynamic_range(spec):
    """Initial extent [default/4, default*4] for dynamic parameters without a range."""
    default = spec.default
    if default > 0:
        low, high = default / 4, default * 4
    elif default == 0:
        low, high = 0, (4 if spec.is_integer else 1)
    else:
        low, high = default * 4, default / 4
    if spec.is_integer:
        low, high = math.floor(low), math.ceil(high)
    natural = spec.natural_minimum
    if natural is not None:
        low = max(low, natural)
    if spec.upper_limit is not None:
        high = min(high, spec.upper_limit)
    if spec.is_integer:
        return (int(low), int(high))
    return (float(low), float(high))


def _parse_selector(raw, index):
    where = f"selectors[{index}]"
    if not isinstance(raw, Mapping):
        raise SpaceParseError(f"{where}: expected an object")
    unknown = set(raw) - _SELECTOR_KEYS
    if unknown:
        raise SpaceParseError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    name = raw.get("selector_param")
    if not isinstance(name, str):
        raise SpaceParseError(f"{where}.selector_param: expected a string")
    activation = raw.get("activation")
    if not isinstance(activation, Mapping):
        raise SpaceParseError(f"{where}.activation: expected an object of label -> module paths")
    parsed = {}
    for label, paths in activation.items():
        if not isinstance(paths, list) or not all(isinstance(p, str) for p in paths):
            raise SpaceParseError(f"{where}.activation.{label}: expected a list of module paths")
        parsed[str(label)] = tuple(paths)
    return ModuleSelector(name, parsed)


def _parse_constraint(raw, index):
    where = f"constraints[{index}]"
    if not isinstance(raw, Mapping):
        raise SpaceParseError(f"{where}: expected an object")
    unknown = set(raw) - _CONSTRAINT_KEYS
    if unknown:
        raise SpaceParseError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    raw_terms = raw.get("terms")
    if not isinstance(raw_terms, list):
        raise SpaceParseError(f"{where}.terms: expected a list")
    terms = []
    for i, term in enumerate(raw_terms):
        if isinstance(term, Mapping):
            name, coef = term.get("name"), term.get("coef", 1.0)
        elif isinstance(term, list) and len(term) == 2:
            name, coef = term
        else:
            raise SpaceParseError(f"{where}.terms[{i}]: expected [name, coef] or {{name, coef}}")
        if not isinstance(name, str):
            raise SpaceParseError(f"{where}.terms[{i}].name: expected a string")
        terms.append((name, float(_expect_number(coef, f"{where}.terms[{i}].coef"))))
    relation = _RELATION_ALIASES.get(raw.get("relation"))
    if relation is None:
        raise SpaceParseError(f"{where}.relation: expected one of <=, <, =")
    bound = float(_expect_number(raw.get("bound"), f"{where}.bound"))
    return LinearConstraint(tuple(terms), relation, bound)


def _validate_selector(selector, index, parameters, breaches, warnings):
    spec = index.get(selector.selector_param)
    if spec is None:
        breaches.append(f"selector references unknown parameter {selector.selector_param!r}")
        return
    if not spec.is_categorical:
        breaches.append(f"selector parameter {spec.name!r} is not categorical")
        return
    for label in selector.activation:
        if label not in spec.categories:
            breaches.append(f"selector {spec.name}: activation label {label!r} is not a category")
    for path in sorted(selector.module_paths):
        if not any(p.module and _module_matches(p.module, path) for p in parameters):
            warnings.append(f"selector {spec.name}: module path {path!r} matches no parameter")


def _validate_constraint(constraint, index, breaches):
    label = constraint.describe()
    if not constraint.terms:
        breaches.append("constraint has no terms")
        return None
    ok = True
    for name in constraint.names:
        spec = index.get(name)
        if spec is None:
            breaches.append(f"constraint {label} references unknown parameter {name!r}")
            ok = False
        elif not spec.is_numeric:
            breaches.append(f"constraint {label} references non-numeric parameter {name!r}")
            ok = False
    if not ok:
        return None
    integral = all(index[n].is_integer for n in constraint.names) and all(
        float(c).is_integer() for _, c in constraint.terms
    )
    if constraint.relation is Relation.LT and integral:
        return LinearConstraint(constraint.terms, Relation.LE, float(math.ceil(constraint.bound) - 1))
    return constraint
