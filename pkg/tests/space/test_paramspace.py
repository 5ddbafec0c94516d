import json
import itertools
import tempfile
import unittest
from pathlib import Path

import numpy as np

from knob_tuner.common.exceptions import SelectionError, SpaceParseError, SpaceValidationError
from knob_tuner.space.paramspace import (
    Configuration,
    Kind,
    RangePolicy,
    Relation,
    check,
    load_space,
    load_space_file,
    prune,
    read_configuration,
    render_configuration,
    wash,
)

CEPH_LIKE = Path(__file__).resolve().parents[1] / "test_data" / "spaces" / "ceph_like.json"


def ratio_space(kv=0.4, meta=0.4):
    return load_space({
        "parameters": [
            {"name": "kv_ratio", "kind": "real", "default": kv, "range": [0.0, 1.0]},
            {"name": "meta_ratio", "kind": "real", "default": meta, "range": [0.0, 1.0]},
        ],
        "constraints": [{"terms": [["kv_ratio", 1], ["meta_ratio", 1]], "relation": "<=", "bound": 1}],
    })


class TestLoadSpace(unittest.TestCase):

    def test_single_hard_parameter(self):
        space = load_space({"parameters": [
            {"name": "pg_per_osd", "kind": "integer", "default": 100, "range": [30, 250], "range_policy": "hard"},
        ]})
        self.assertEqual(space.names, ("pg_per_osd",))
        spec = space.parameter("pg_per_osd")
        self.assertEqual(spec.default, 100)
        self.assertEqual(spec.range, (30, 250))
        self.assertIs(spec.range_policy, RangePolicy.HARD)

    def test_accepts_json_text(self):
        text = json.dumps({"parameters": [{"name": "x", "kind": "real", "default": 1.5, "range": [1, 2]}]})
        self.assertEqual(load_space(text).parameter("x").default, 1.5)

    def test_empty_parameters(self):
        with self.assertRaises(SpaceValidationError) as context:
            load_space({"parameters": []})
        self.assertIn("space has no parameters", context.exception.breaches)

    def test_default_violating_constraint_names_it(self):
        with self.assertRaises(SpaceValidationError) as context:
            ratio_space(kv=0.7, meta=0.5)
        self.assertIn("kv_ratio + meta_ratio <= 1", context.exception.message)

    def test_every_breach_is_listed(self):
        with self.assertRaises(SpaceValidationError) as context:
            load_space({"parameters": [
                {"name": "a", "kind": "integer", "default": 300, "range": [30, 250]},
                {"name": "b", "kind": "categorical", "default": "x", "categories": ["y", "z"]},
                {"name": "a", "kind": "real", "default": 1.0, "range": [0, 2]},
            ]})
        breaches = context.exception.breaches
        self.assertEqual(len(breaches), 3)
        self.assertTrue(any("outside range" in b for b in breaches))
        self.assertTrue(any("not one of the categories" in b for b in breaches))
        self.assertTrue(any("duplicate parameter name" in b for b in breaches))

    def test_parse_error_names_field(self):
        with self.assertRaises(SpaceParseError) as context:
            load_space({"parameters": [{"name": "x", "kind": "float", "default": 1.0}]})
        self.assertIn("parameters[0] (x).kind", context.exception.message)
        with self.assertRaises(SpaceParseError) as context:
            load_space({"parameters": [], "extras": {}})
        self.assertIn("extras", context.exception.message)
        with self.assertRaises(SpaceParseError):
            load_space("{not json")

    def test_boolean_becomes_categorical(self):
        space = load_space({"parameters": [{"name": "rbd_cache", "kind": "boolean", "default": True}]})
        spec = space.parameter("rbd_cache")
        self.assertIs(spec.kind, Kind.CATEGORICAL)
        self.assertEqual(spec.categories, ("false", "true"))
        self.assertEqual(spec.default, "true")

    def test_strict_integer_inequality_is_rewritten(self):
        space = load_space({
            "parameters": [
                {"name": "recovery", "kind": "integer", "default": 3, "range": [1, 63]},
                {"name": "client", "kind": "integer", "default": 63, "range": [1, 63]},
            ],
            "constraints": [{"terms": [["recovery", 1], ["client", -1]], "relation": "<", "bound": 0}],
        })
        constraint = space.constraints[0]
        self.assertIs(constraint.relation, Relation.LE)
        self.assertEqual(constraint.bound, -1.0)

    def test_strict_real_inequality_is_kept(self):
        space = load_space({
            "parameters": [
                {"name": "nearfull", "kind": "real", "default": 0.85, "range": [0.5, 0.99]},
                {"name": "full", "kind": "real", "default": 0.95, "range": [0.5, 0.99]},
            ],
            "constraints": [{"terms": [["nearfull", 1], ["full", -1]], "relation": "<", "bound": 0}],
        })
        self.assertIs(space.constraints[0].relation, Relation.LT)

    def test_dynamic_range_seeding(self):
        space = load_space({"parameters": [
            {"name": "cache", "kind": "integer", "default": 100, "range_policy": "dynamic"},
            {"name": "threads", "kind": "integer", "default": 2, "min": 1, "range_policy": "dynamic"},
            {"name": "zero_real", "kind": "real", "default": 0.0, "range_policy": "dynamic"},
            {"name": "zero_int", "kind": "integer", "default": 0, "range_policy": "dynamic"},
            {"name": "offset", "kind": "real", "default": -8.0, "range_policy": "dynamic"},
            {"name": "capped", "kind": "integer", "default": 100, "max": 200, "range_policy": "dynamic"},
            {"name": "implicit", "kind": "real", "default": 2.0},
        ]})
        self.assertEqual(space.parameter("cache").range, (25, 400))
        self.assertEqual(space.parameter("threads").range, (1, 8))
        self.assertEqual(space.parameter("zero_real").range, (0.0, 1.0))
        self.assertEqual(space.parameter("zero_int").range, (0, 4))
        self.assertEqual(space.parameter("offset").range, (-32.0, -2.0))
        self.assertEqual(space.parameter("capped").range, (25, 200))
        self.assertEqual(space.parameter("implicit").range, (0.5, 8.0))
        self.assertIs(space.parameter("implicit").range_policy, RangePolicy.DYNAMIC)

    def test_hard_policy_without_range(self):
        with self.assertRaises(SpaceValidationError):
            load_space({"parameters": [{"name": "x", "kind": "real", "default": 1.0, "range_policy": "hard"}]})

    def test_selector_must_be_categorical(self):
        with self.assertRaises(SpaceValidationError) as context:
            load_space({
                "parameters": [{"name": "x", "kind": "integer", "default": 1, "range": [0, 4]}],
                "selectors": [{"selector_param": "x", "activation": {"1": ["osd/a"]}}],
            })
        self.assertIn("not categorical", context.exception.message)

    def test_unmatched_activation_path_warns(self):
        space = load_space_file(CEPH_LIKE)
        self.assertTrue(any("osd/kstore" in w for w in space.warnings))

    def test_constraint_on_categorical_is_rejected(self):
        with self.assertRaises(SpaceValidationError):
            load_space({
                "parameters": [{"name": "mode", "kind": "categorical", "default": "a", "categories": ["a", "b"]}],
                "constraints": [{"terms": [["mode", 1]], "relation": "<=", "bound": 1}],
            })


class TestWash(unittest.TestCase):

    def test_removes_unconfigurable(self):
        space = load_space({"parameters": [
            {"name": "fsid", "kind": "categorical", "default": "abc", "categories": ["abc"], "configurable": False},
            {"name": "pg_per_osd", "kind": "integer", "default": 100, "range": [30, 250]},
        ]})
        self.assertEqual(wash(space).names, ("pg_per_osd",))

    def test_identity_when_all_configurable(self):
        space = ratio_space()
        self.assertEqual(wash(space), space)

    def test_drops_constraint_on_washed_parameter(self):
        space = load_space({
            "parameters": [
                {"name": "a", "kind": "real", "default": 0.2, "range": [0, 1], "configurable": False},
                {"name": "b", "kind": "real", "default": 0.2, "range": [0, 1]},
            ],
            "constraints": [{"terms": [["a", 1], ["b", 1]], "relation": "<=", "bound": 1}],
        })
        washed = wash(space)
        self.assertEqual(washed.constraints, ())
        self.assertTrue(any("dropped constraint" in w for w in washed.warnings))

    def test_idempotent(self):
        space = load_space_file(CEPH_LIKE)
        once = wash(space)
        self.assertEqual(wash(once), once)


class TestPrune(unittest.TestCase):

    def setUp(self):
        self.space = wash(load_space_file(CEPH_LIKE))

    def test_bluestore_drops_filestore(self):
        pruned = prune(self.space, {"osd_objectstore": "bluestore"})
        self.assertFalse(any(name.startswith("filestore_") for name in pruned.names))
        self.assertIn("bluestore_cache_kv_ratio", pruned.names)
        self.assertNotIn("osd_objectstore", pruned.names)
        self.assertEqual(pruned.pinned["osd_objectstore"], "bluestore")
        self.assertLessEqual(len(pruned), len(self.space))
        self.assertEqual(pruned.selectors, ())

    def test_no_selectors_is_identity(self):
        space = ratio_space()
        self.assertEqual(prune(space, {}), space)

    def test_kstore_keeps_only_module_less_parameters(self):
        pruned = prune(self.space, {"osd_objectstore": "kstore"})
        module_less = {spec.name for spec in self.space.parameters if spec.module is None} - {"osd_objectstore"}
        self.assertEqual(set(pruned.names), module_less)
        self.assertTrue(any("osd/kstore" in w for w in pruned.warnings))

    def test_missing_selection_lists_selectors(self):
        with self.assertRaises(SelectionError) as context:
            prune(self.space, {})
        self.assertIn("osd_objectstore", context.exception.message)

    def test_unknown_category(self):
        with self.assertRaises(SelectionError):
            prune(self.space, {"osd_objectstore": "zfs"})

    def test_selection_of_non_selector(self):
        with self.assertRaises(SelectionError):
            prune(self.space, {"osd_objectstore": "bluestore", "pg_per_osd": "100"})

    def test_drops_constraints_of_pruned_modules(self):
        pruned = prune(self.space, {"osd_objectstore": "bluestore"})
        for constraint in pruned.constraints:
            for name in constraint.names:
                self.assertIn(name, pruned.names)
        self.assertTrue(any("filestore_min_sync_interval" in w for w in pruned.warnings))

    def test_idempotent(self):
        selections = {"osd_objectstore": "filestore"}
        once = prune(self.space, selections)
        self.assertEqual(prune(once, selections), once)

    def test_defaults_pass_check_after_wash_and_prune(self):
        for label in ("bluestore", "filestore", "memstore", "kstore"):
            pruned = prune(self.space, {"osd_objectstore": label})
            self.assertEqual(check(pruned.defaults(), pruned), [])


class TestCheck(unittest.TestCase):

    def test_range_violation(self):
        space = load_space({"parameters": [
            {"name": "pg_per_osd", "kind": "integer", "default": 100, "range": [30, 250]},
        ]})
        violations = check(Configuration({"pg_per_osd": 251}), space)
        self.assertEqual(len(violations), 1)
        self.assertEqual(violations[0].kind, "range")
        self.assertEqual(violations[0].subject, "pg_per_osd")
        self.assertEqual(violations[0].observed, 251)

    def test_defaults_are_clean(self):
        space = wash(load_space_file(CEPH_LIKE))
        self.assertEqual(check(space.defaults(), space), [])

    def test_linear_violation_slack(self):
        violations = check({"kv_ratio": 0.7, "meta_ratio": 0.5}, ratio_space())
        self.assertEqual(len(violations), 1)
        self.assertEqual(violations[0].kind, "linear")
        self.assertAlmostEqual(violations[0].slack, -0.2, places=12)

    def test_unknown_parameter_is_data(self):
        violations = check({"kv_ratio": 0.1, "bogus": 3}, ratio_space())
        self.assertEqual([v.kind for v in violations], ["unknown-parameter"])

    def test_category_and_type(self):
        space = load_space({"parameters": [
            {"name": "mode", "kind": "categorical", "default": "wpq", "categories": ["wpq", "prioritized"]},
            {"name": "shards", "kind": "integer", "default": 8, "range": [1, 32]},
        ]})
        kinds = sorted(v.kind for v in check({"mode": "fifo", "shards": 2.5}, space))
        self.assertEqual(kinds, ["category", "type"])

    def test_pinned_value_mismatch(self):
        space = prune(wash(load_space_file(CEPH_LIKE)), {"osd_objectstore": "bluestore"})
        kinds = [v.kind for v in check({"osd_objectstore": "filestore"}, space)]
        self.assertEqual(kinds, ["pinned"])

    def test_matches_brute_force(self):
        """check agrees with an independent evaluation of every range and constraint."""
        rng = np.random.default_rng(11)
        for trial in range(20):
            d = int(rng.integers(2, 5))
            parameters = [
                {"name": f"x{i}", "kind": "real", "default": 0.0, "range": [-1.0, 1.0]} for i in range(d)
            ]
            constraints = []
            for _ in range(int(rng.integers(1, 4))):
                names = rng.choice(d, size=2, replace=False)
                coefs = rng.uniform(-2, 2, size=2).round(3)
                constraints.append({
                    "terms": [[f"x{names[0]}", float(coefs[0])], [f"x{names[1]}", float(coefs[1])]],
                    "relation": "<=", "bound": float(np.round(rng.uniform(0.1, 1.0), 3)),
                })
            space = load_space({"parameters": parameters, "constraints": constraints})
            for _ in range(50):
                values = {f"x{i}": float(v) for i, v in enumerate(rng.uniform(-1.3, 1.3, size=d))}
                expected = sum(1 for v in values.values() if not -1.0 <= v <= 1.0)
                for c in constraints:
                    lhs = sum(coef * values[name] for name, coef in c["terms"])
                    expected += lhs > c["bound"] + 1e-9 * max(1.0, abs(c["bound"]))
                self.assertEqual(len(check(values, space)), expected)


class TestConfigurationFiles(unittest.TestCase):

    def test_render_and_read(self):
        space = prune(wash(load_space_file(CEPH_LIKE)), {"osd_objectstore": "bluestore"})
        config = space.full_configuration(space.defaults())
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder) / "conf" / "ceph.conf"
            render_configuration(config, path, space)
            lines = path.read_text().splitlines()
            self.assertEqual(lines[0], "osd_objectstore = bluestore")
            self.assertIn("pg_per_osd = 100", lines)
            self.assertIn("bluestore_cache_kv_ratio = 0.4", lines)
            self.assertEqual(read_configuration(path, space), config)

    def test_read_coerces_and_rejects_unknown(self):
        space = ratio_space()
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder) / "manual.conf"
            path.write_text("# expert settings\nkv_ratio = 0.5\n\nmeta_ratio=0.25\n")
            config = read_configuration(path, space)
            self.assertEqual(config["kv_ratio"], 0.5)
            self.assertEqual(config["meta_ratio"], 0.25)
            path.write_text("cache_size = 3\n")
            with self.assertRaises(SpaceParseError):
                read_configuration(path, space)


class TestRestrict(unittest.TestCase):

    def test_pins_other_parameters(self):
        space = ratio_space()
        restricted = space.restrict(["kv_ratio"])
        self.assertEqual(restricted.names, ("kv_ratio",))
        self.assertEqual(restricted.pinned, {"meta_ratio": 0.4})
        self.assertEqual(len(restricted.constraints), 1)
        full = restricted.full_configuration({"kv_ratio": 0.5})
        self.assertEqual(full.values, {"meta_ratio": 0.4, "kv_ratio": 0.5})

    def test_unknown_name(self):
        with self.assertRaises(SelectionError):
            ratio_space().restrict(["cache"])


if __name__ == '__main__':
    unittest.main()
