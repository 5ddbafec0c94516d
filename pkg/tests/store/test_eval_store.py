import tempfile
import unittest
from pathlib import Path

from knob_tuner.common.exceptions import StoreError
from knob_tuner.store import eval_store
from knob_tuner.store.eval_store import EvalStore
from knob_tuner.targets.records import EvaluationRecord, Source


def make_records():
    return [
        EvaluationRecord.success({"pg_per_osd": 100, "rbd_cache": "true"}, "randread", 6123.4, duration_s=12.5,
                                 iteration=0),
        EvaluationRecord.failed_with({"pg_per_osd": 250, "rbd_cache": "false"}, "randread", "timeout: benchmark",
                                     source=Source.SHELL, iteration=1),
        EvaluationRecord.success({"pg_per_osd": 64, "rbd_cache": "true"}, "write", 880.25, source=Source.IMPORTED),
    ]


class TestEvalStore(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()
        self.path = Path(self.folder.name) / "db" / "evals.jsonl"
        self.store = EvalStore(self.path)

    def tearDown(self):
        self.folder.cleanup()

    def test_round_trip(self):
        records = make_records()
        self.store.append_many(records)
        self.assertEqual(self.store.load(), records)
        lines = self.path.read_text().splitlines()
        self.assertEqual(lines[0], '{"format":"sapphire-evals","version":1}')
        self.assertEqual(len(lines), 4)

    def test_workload_filter(self):
        self.store.append_many(make_records())
        self.assertEqual([r.metric for r in self.store.load(workload_id="write")], [880.25])
        self.assertEqual(len(eval_store.load(self.path, "randread")), 2)

    def test_module_functions(self):
        record = make_records()[0]
        eval_store.append(self.path, record)
        self.assertEqual(eval_store.load(self.path), [record])

    def test_torn_trailing_line_is_skipped(self):
        self.store.append_many(make_records())
        with open(self.path, "a") as handle:
            handle.write('{"config": {"pg_per_osd": 1')
        with self.assertLogs("knob_tuner.store.eval_store", level="WARNING"):
            self.assertEqual(len(self.store.load()), 3)

    def test_append_after_torn_line(self):
        self.store.append_many(make_records())
        with open(self.path, "a") as handle:
            handle.write('{"config": {"pg_per_osd": 1')
        extra = EvaluationRecord.success({"pg_per_osd": 128}, "randread", 5000.0)
        with self.assertLogs("knob_tuner.store.eval_store", level="WARNING"):
            self.store.append(extra)
        lines = self.path.read_text().splitlines()
        self.assertEqual(len(lines), 5)
        self.assertNotIn('{"config": {"pg_per_osd": 1', lines)
        records = self.store.load()
        self.assertEqual(len(records), 4)
        self.assertEqual(records[-1], extra)

    def test_garbage_line_in_the_middle(self):
        self.store.append_many(make_records())
        lines = self.path.read_text().splitlines()
        lines.insert(2, "this line is garbage")
        self.path.write_text("\n".join(lines) + "\n")
        with self.assertRaises(StoreError) as context:
            self.store.load()
        self.assertIn("line 3", context.exception.message)

    def test_unterminated_fragment_in_the_middle(self):
        self.store.append_many(make_records())
        lines = self.path.read_text().splitlines()
        lines.insert(3, '{"config": {"pg_per_osd": 1')
        self.path.write_text("\n".join(lines) + "\n")
        with self.assertRaises(StoreError) as context:
            self.store.load()
        self.assertIn("line 4", context.exception.message)

    def test_parameter_named_timestamp(self):
        record = EvaluationRecord.success({"timestamp": "20240101", "pg_per_osd": 100}, "randread", 12.0)
        self.store.append(record)
        self.assertEqual(self.store.load(), [record])

    def test_reads_compact_header(self):
        self.path.parent.mkdir(parents=True)
        self.path.write_text('{"format":"sapphire-evals","version":1}\n')
        self.assertEqual(self.store.load(), [])

    def test_malformed_line_names_its_number(self):
        self.store.append_many(make_records())
        lines = self.path.read_text().splitlines()
        lines.insert(2, '{"config": {}, "workload_id": "w", "metric": 1.0, "colour": "red"}')
        self.path.write_text("\n".join(lines) + "\n")
        with self.assertRaises(StoreError) as context:
            self.store.load()
        self.assertIn("line 3", context.exception.message)

    def test_malformed_last_line_with_newline(self):
        self.store.append_many(make_records())
        with open(self.path, "a") as handle:
            handle.write('{"config": {}, "workload_id": 7}\n')
        with self.assertRaises(StoreError):
            self.store.load()

    def test_missing_file(self):
        with self.assertRaises(StoreError):
            self.store.load()

    def test_not_a_database(self):
        self.path.parent.mkdir(parents=True)
        self.path.write_text('{"format": "csv"}\n')
        with self.assertRaises(StoreError):
            self.store.load()
        with self.assertRaises(StoreError):
            self.store.append(make_records()[0])

    def test_unsupported_version(self):
        self.path.parent.mkdir(parents=True)
        self.path.write_text('{"format":"sapphire-evals","version":2}\n')
        with self.assertRaises(StoreError) as context:
            self.store.load()
        self.assertIn("unsupported version", context.exception.message)

    def test_empty_file(self):
        self.path.parent.mkdir(parents=True)
        self.path.write_text("")
        with self.assertRaises(StoreError):
            self.store.load()


if __name__ == '__main__':
    unittest.main()
