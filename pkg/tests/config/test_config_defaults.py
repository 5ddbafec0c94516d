import os
import unittest

from knob_tuner import Config


def all_keys(config):
    return {**config.config_strings, **config.config_ints, **config.config_floats, **config.config_booleans}


class TestConfigDefaults(unittest.TestCase):

    def setUp(self):
        # defaults are only visible with no overriding environment variables
        self._saved_env = {}
        for key in all_keys(Config.get_instance()):
            if key not in ("BUILT_AT", "CONFIG_FOLDER") and key in os.environ:
                self._saved_env[key] = os.environ.pop(key)
        Config._instance = None
        self.config = Config.get_instance()

    def tearDown(self):
        os.environ.update(self._saved_env)
        Config._instance = None

    def test_every_group_converts_its_defaults(self):
        for key, default in self.config.config_strings.items():
            if key not in ("LOGGING_LEVEL", "BUILT_AT", "CONFIG_FOLDER"):
                self.assertEqual(getattr(self.config, key), default, key)
        for key, default in self.config.config_ints.items():
            self.assertEqual(getattr(self.config, key), int(default), key)
        for key, default in self.config.config_floats.items():
            self.assertEqual(getattr(self.config, key), float(default), key)
        for key, default in self.config.config_booleans.items():
            self.assertIs(getattr(self.config, key), default == "true", key)

    def test_logging_level_is_resolved_to_a_number(self):
        self.assertEqual(self.config.LOGGING_LEVEL, 20)

    def test_documented_tuning_defaults(self):
        self.assertEqual(self.config.LASSO_GRID_SIZE, 100)
        self.assertEqual(self.config.LASSO_MIN_RATIO, 1e-4)
        self.assertEqual(self.config.RANK_MIN_SAMPLES, 20)
        self.assertEqual(self.config.EI_XI, 0.01)
        self.assertEqual(self.config.N_INIT_MIN, 10)
        self.assertEqual(self.config.MAX_CONSECUTIVE_FAILURES, 10)
        self.assertEqual(self.config.REPAIR_PASSES, 32)
        self.assertEqual(self.config.REPAIR_RESAMPLES, 1000)
        self.assertEqual(self.config.BOUNDARY_EDGE_FRACTION, 0.1)
        self.assertEqual(self.config.METRICS_FILE, "")
        self.assertEqual(self.config.DEFAULT_WORKLOAD, "default")
        self.assertTrue(self.config.DYNAMIC_BOUNDS)

    def test_to_dict_tracks_sources(self):
        result = self.config.to_dict()
        self.assertEqual(result["built_at"], "LOCAL")
        names = [item["name"] for item in result["config_items"]]
        self.assertEqual(sorted(names), sorted(all_keys(self.config)))
        for item in result["config_items"]:
            if item["name"] not in ("BUILT_AT", "CONFIG_FOLDER"):
                self.assertEqual(item["from"], "default", item["name"])

    def test_singleton(self):
        self.assertIs(Config.get_instance(), self.config)
        with self.assertRaises(Exception) as context:
            Config()
        self.assertIn("singleton", str(context.exception))


if __name__ == '__main__':
    unittest.main()
