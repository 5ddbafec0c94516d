import unittest

import numpy as np

from knob_tuner.space.paramspace import load_space
from knob_tuner.tuning.domain import DomainCodec, position, value_at


def tuning_space():
    return load_space({"parameters": [
        {"name": "cache_size", "kind": "integer", "default": 64, "range": [4, 4096]},
        {"name": "ratio", "kind": "real", "default": 0.5, "range": [0.0, 1.0]},
        {"name": "queue", "kind": "categorical", "default": "wpq", "categories": ["wpq", "prioritized", "mclock"]},
        {"name": "offset", "kind": "integer", "default": 0, "range": [-10, 10]},
    ]})


class TestPosition(unittest.TestCase):

    def test_log_scale(self):
        spec = tuning_space().parameter("cache_size")
        self.assertEqual(position(spec, 4), 0.0)
        self.assertAlmostEqual(position(spec, 4096), 1.0)
        self.assertAlmostEqual(position(spec, 128), 0.5)

    def test_linear_scale(self):
        space = tuning_space()
        self.assertAlmostEqual(position(space.parameter("ratio"), 0.25), 0.25)
        self.assertAlmostEqual(position(space.parameter("offset"), 5), 0.75)

    def test_value_at_rounds_and_clips(self):
        space = tuning_space()
        self.assertEqual(value_at(space.parameter("cache_size"), 0.5), 128)
        self.assertEqual(value_at(space.parameter("cache_size"), 1.7), 4096)
        self.assertEqual(value_at(space.parameter("offset"), 0.52), 0)
        self.assertIsInstance(value_at(space.parameter("offset"), 0.52), int)
        self.assertEqual(value_at(space.parameter("ratio"), -0.5), 0.0)

    def test_degenerate_range(self):
        space = load_space({"parameters": [{"name": "x", "kind": "integer", "default": 5, "range": [5, 5]}]})
        self.assertEqual(position(space.parameter("x"), 5), 0.0)
        self.assertEqual(value_at(space.parameter("x"), 0.7), 5)


class TestDomainCodec(unittest.TestCase):

    def test_layout(self):
        codec = DomainCodec(tuning_space())
        self.assertEqual(codec.dimension, 6)
        self.assertEqual(list(codec.groups), [0, 1, 2, 2, 2, 3])
        self.assertEqual(codec.numeric_coordinates, [0, 1, 5])

    def test_encode_decode(self):
        space = tuning_space()
        codec = DomainCodec(space)
        config = space.defaults().updated({"queue": "prioritized", "cache_size": 128})
        vector = codec.encode(config)
        np.testing.assert_allclose(vector, [0.5, 0.5, 0.0, 1.0, 0.0, 0.5])
        self.assertEqual(codec.decode(vector), config)

    def test_decode_takes_largest_indicator(self):
        codec = DomainCodec(tuning_space())
        decoded = codec.decode(np.array([0.0, 1.0, 0.2, 0.3, 0.9, 1.0]))
        self.assertEqual(decoded["queue"], "mclock")
        self.assertEqual(decoded["cache_size"], 4)
        self.assertEqual(decoded["offset"], 10)

    def test_subset_of_names(self):
        codec = DomainCodec(tuning_space(), names=["ratio"])
        self.assertEqual(codec.dimension, 1)
        self.assertEqual(codec.decode(np.array([0.3])).values, {"ratio": 0.3})

    def test_random_points(self):
        codec = DomainCodec(tuning_space())
        points = codec.random_points(np.random.default_rng(0), 200)
        self.assertEqual(points.shape, (200, 6))
        np.testing.assert_array_equal(points[:, 2:5].sum(axis=1), np.ones(200))
        self.assertTrue(np.all((points >= 0) & (points <= 1)))


if __name__ == '__main__':
    unittest.main()
