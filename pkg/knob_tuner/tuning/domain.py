"""
Normalized search domain.

Maps configurations over a (restricted) parameter space to vectors in [0, 1]^m
and back: numeric parameters take one coordinate, positioned on a log scale
when the range is positive; categoricals take one one-hot coordinate per
category, and those coordinates share a kernel length-scale group.
"""
import math

import numpy as np

from knob_tuner.space.paramspace import Configuration
from knob_tuner.space.sampling import clip_value


def position(spec, value):
    """Position of ``value`` in the current range of a numeric parameter (may leave [0, 1])."""
    low, high = spec.range
    if high <= low:
        return 0.0
    if spec.log_scale and value > 0:
        return (math.log(value) - math.log(low)) / (math.log(high) - math.log(low))
    return (float(value) - low) / (high - low)


def value_at(spec, u):
    """Inverse of ``position`` for u in [0, 1]; integers are rounded and clipped."""
    low, high = spec.range
    u = min(max(float(u), 0.0), 1.0)
    if high <= low:
        return clip_value(spec, low)
    if spec.log_scale:
        value = math.exp(math.log(low) + u * (math.log(high) - math.log(low)))
    else:
        value = low + u * (high - low)
    if spec.is_integer:
        value = round(value)
    return clip_value(spec, value)


class DomainCodec:
    def __init__(self, space, names=None):
        self.space = space
        self.names = tuple(names) if names is not None else space.names
        self.specs = [space.parameter(name) for name in self.names]
        slices = []
        groups = []
        offset = 0
        for index, spec in enumerate(self.specs):
            width = len(spec.categories) if spec.is_categorical else 1
            slices.append(slice(offset, offset + width))
            groups.extend([index] * width)
            offset += width
        self.slices = slices
        self.groups = np.asarray(groups, dtype=int)
        self.dimension = offset
        self.numeric_coordinates = [s.start for s, spec in zip(slices, self.specs) if not spec.is_categorical]

    def encode(self, config):
        vector = np.zeros(self.dimension)
        for spec, coords in zip(self.specs, self.slices):
            value = config[spec.name]
            if spec.is_categorical:
                vector[coords.start + spec.categories.index(value)] = 1.0
            else:
                vector[coords.start] = position(spec, value)
        return vector

    def decode(self, vector):
        values = {}
        for spec, coords in zip(self.specs, self.slices):
            if spec.is_categorical:
                values[spec.name] = spec.categories[int(np.argmax(vector[coords]))]
            else:
                values[spec.name] = value_at(spec, vector[coords.start])
        return Configuration(values)

    def random_points(self, rng, count):
        """Uniform numeric coordinates and random one-hot categoricals."""
        points = rng.uniform(0.0, 1.0, size=(count, self.dimension))
        for spec, coords in zip(self.specs, self.slices):
            if spec.is_categorical:
                chosen = rng.integers(len(spec.categories), size=count)
                block = np.zeros((count, len(spec.categories)))
                block[np.arange(count), chosen] = 1.0
                points[:, coords] = block
        return points
