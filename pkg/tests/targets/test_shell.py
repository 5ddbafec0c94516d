import tempfile
import time
import unittest
from pathlib import Path

from knob_tuner.common.exceptions import TemplateError
from knob_tuner.space.paramspace import Configuration
from knob_tuner.targets.records import Source
from knob_tuner.targets.shell import ExecTemplate, ShellTarget, extract_metric, load_template, shell_eval

EXEC = Path(__file__).resolve().parents[1] / "test_data" / "exec"
BANDWIDTH = r"Bandwidth \(MB/sec\):\s+([0-9.]+)"


class ShellTestCase(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.TemporaryDirectory()
        self.render_path = str(Path(self.folder.name) / "ceph.conf")

    def tearDown(self):
        self.folder.cleanup()

    def template(self, bench_cmd, **overrides):
        settings = dict(render_path=self.render_path, bench_cmd=bench_cmd, timeout_s=10, metric_regex=BANDWIDTH)
        settings.update(overrides)
        return ExecTemplate(**settings)


class TestExtractMetric(unittest.TestCase):

    def test_regex(self):
        template = ExecTemplate("ceph.conf", "true", 10, metric_regex=BANDWIDTH)
        self.assertEqual(extract_metric(template, "Total time run: 10\nBandwidth (MB/sec): 6123.4\n"), 6123.4)
        self.assertIsNone(extract_metric(template, "no bandwidth here"))

    def test_path(self):
        template = ExecTemplate("ceph.conf", "true", 10, metric_path="jobs.0.read.bw_mean")
        self.assertEqual(extract_metric(template, '{"jobs": [{"read": {"bw_mean": 6123.4}}]}'), 6123.4)
        self.assertIsNone(extract_metric(template, '{"jobs": []}'))
        self.assertIsNone(extract_metric(template, "not json"))
        self.assertIsNone(extract_metric(template, '{"jobs": [{"read": {"bw_mean": "fast"}}]}'))


class TestTemplate(unittest.TestCase):

    def test_load_fixture(self):
        template = load_template(EXEC / "rados_template.json")
        self.assertEqual(template.apply_cmd, "true")
        self.assertEqual(template.timeout_s, 30.0)
        self.assertEqual(template.environment("randread"), {"RADOS_BENCH_MODE": "rand"})
        self.assertEqual(template.environment("seqread"), {})

    def test_invalid_templates(self):
        base = {"render_path": "ceph.conf", "bench_cmd": "true", "timeout_s": 10, "metric_regex": BANDWIDTH}
        broken = [
            {**base, "metric_regex": r"(\d+) (\d+)"},
            {**base, "metric_regex": "([0-9"},
            {**base, "metric_path": "a.b"},
            {k: v for k, v in base.items() if k != "metric_regex"},
            {**base, "timeout_s": 0},
            {**base, "bench_cmd": ""},
            {**base, "retries": 3},
            {**base, "workloads": {"randread": {"env": ["FIO_RW=randread"]}}},
        ]
        for document in broken:
            with self.assertRaises(TemplateError, msg=str(document)):
                load_template(document)

    def test_unreadable(self):
        with self.assertRaises(TemplateError):
            load_template(EXEC / "missing.json")


class TestShellEval(ShellTestCase):

    def test_rados_bench_regex(self):
        template = self.template(f"sh {EXEC / 'rados_bench.sh'}", apply_cmd="true")
        record = shell_eval(template, Configuration({"io_threads": 4, "pg_per_osd": 100}), "seqwrite")
        self.assertFalse(record.failed, record.failure)
        self.assertEqual(record.metric, 400.5)
        self.assertIs(record.source, Source.SHELL)
        self.assertIn("io_threads = 4", Path(self.render_path).read_text())

    def test_metric_path_and_workload_environment(self):
        template = self.template(
            f"sh {EXEC / 'bench_json.sh'}", metric_regex=None, metric_path="jobs.0.read.bw_mean",
        )
        record = shell_eval(template, Configuration({"io_threads": 4}), "randread")
        self.assertEqual(record.metric, 6123.4)

        template = self.template(
            'echo "{\\"depth\\": $FIO_IODEPTH}"', metric_regex=None, metric_path="depth",
            workloads={"randread": {"env": {"FIO_IODEPTH": 32}}},
        )
        self.assertEqual(shell_eval(template, Configuration({}), "randread").metric, 32.0)

        template = self.template('test "$KNOB_TUNER_WORKLOAD" = write && echo "Bandwidth (MB/sec): 1.5"')
        self.assertEqual(shell_eval(template, Configuration({}), "write").metric, 1.5)
        self.assertTrue(shell_eval(template, Configuration({}), "randread").failed)

    def test_apply_failure(self):
        template = self.template("echo 'Bandwidth (MB/sec): 1.0'", apply_cmd=f"sh {EXEC / 'apply_fail.sh'}")
        record = shell_eval(template, Configuration({"io_threads": 4}), "seqwrite")
        self.assertTrue(record.failed)
        self.assertTrue(record.failure.startswith("apply failed (exit 1)"))
        self.assertIn("failed to inject args", record.failure)

    def test_timeout(self):
        template = self.template(f"sh {EXEC / 'bench_slow.sh'}", timeout_s=1)
        started = time.monotonic()
        record = shell_eval(template, Configuration({}), "seqwrite")
        self.assertLess(time.monotonic() - started, 10)
        self.assertTrue(record.failed)
        self.assertTrue(record.failure.startswith("timeout"))

    def test_timeout_with_child_ignoring_term(self):
        bench_cmd = "(trap '' TERM; sleep 8; echo x); echo done"
        template = self.template(bench_cmd, timeout_s=1)
        started = time.monotonic()
        record = shell_eval(template, Configuration({}), "seqwrite")
        self.assertLess(time.monotonic() - started, 5)
        self.assertTrue(record.failure.startswith("timeout"))

    def test_timeout_after_leader_exits(self):
        bench_cmd = "sh -c \"trap '' TERM; sleep 8\" & exit 0"
        template = self.template(bench_cmd, timeout_s=1)
        started = time.monotonic()
        record = shell_eval(template, Configuration({}), "seqwrite")
        self.assertLess(time.monotonic() - started, 5)
        self.assertTrue(record.failed)

    def test_benchmark_failure(self):
        record = shell_eval(self.template("echo boom >&2; exit 3"), Configuration({}), "seqwrite")
        self.assertEqual(record.failure, "benchmark failed (exit 3): boom")

    def test_metric_not_found(self):
        record = shell_eval(self.template("echo 'Average IOPS: 152'"), Configuration({}), "seqwrite")
        self.assertTrue(record.failure.startswith("metric not found"))
        self.assertIn("Average IOPS", record.failure)

    def test_shell_target(self):
        target = ShellTarget(self.template("echo 'Bandwidth (MB/sec): 88.25'"))
        record = target.evaluate(Configuration({"io_threads": 2}), "seqwrite", draw_seed=3)
        self.assertEqual(record.metric, 88.25)


if __name__ == '__main__':
    unittest.main()
