"""
Shell-command target for real systems.

An exec template says where to render the configuration file, which command
applies it (restart, injection, redeploy), which command benchmarks the system
and how to read the metric from the benchmark output. Every failure mode
(apply exit code, timeout, benchmark exit code, missing metric) becomes a
failure record; nothing here raises once the template is valid.
"""
import json
import math
import os
import re
import signal
import subprocess
import time
import logging
from dataclasses import dataclass, field
from pathlib import Path

from knob_tuner.common.exceptions import TemplateError
from knob_tuner.space.paramspace import render_configuration
from knob_tuner.targets.records import EvaluationRecord, Source, utc_now

logger = logging.getLogger(__name__)

_TEMPLATE_KEYS = {"render_path", "apply_cmd", "bench_cmd", "metric_regex", "metric_path", "timeout_s", "workloads"}
_EXCERPT_CHARS = 400
_TERM_GRACE_S = 1.0
_DRAIN_S = 1.0


@dataclass(frozen=True)
class ExecTemplate:
    render_path: str
    bench_cmd: str
    timeout_s: float
    apply_cmd: str | None = None
    metric_regex: str | None = None
    metric_path: str | None = None
    workloads: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.render_path:
            raise TemplateError("exec template needs render_path")
        if not self.bench_cmd:
            raise TemplateError("exec template needs bench_cmd")
        if not self.timeout_s or self.timeout_s <= 0:
            raise TemplateError("exec template timeout_s must be > 0")
        if (self.metric_regex is None) == (self.metric_path is None):
            raise TemplateError("exec template needs exactly one of metric_regex and metric_path")
        if self.metric_regex is not None:
            try:
                pattern = re.compile(self.metric_regex)
            except re.error as e:
                raise TemplateError(f"metric_regex does not compile: {e}") from e
            if pattern.groups != 1:
                raise TemplateError(f"metric_regex must have exactly one capture group, found {pattern.groups}")
        for name, settings in self.workloads.items():
            env = settings.get("env", {}) if isinstance(settings, dict) else None
            if not isinstance(env, dict):
                raise TemplateError(f"workload {name}: expected {{\"env\": {{...}}}}")

    def environment(self, workload_id):
        settings = self.workloads.get(workload_id, {})
        return {str(k): str(v) for k, v in settings.get("env", {}).items()}


def load_template(source):
    """Read an exec template from a JSON file path or mapping."""
    if isinstance(source, (str, Path)):
        try:
            document = json.loads(Path(source).read_text())
        except (OSError, ValueError) as e:
            raise TemplateError(f"cannot read exec template {source}: {e}") from e
    else:
        document = dict(source)
    if not isinstance(document, dict):
        raise TemplateError("exec template must be a JSON object")
    unknown = set(document) - _TEMPLATE_KEYS
    if unknown:
        raise TemplateError(f"unknown exec template key(s): {', '.join(sorted(unknown))}")
    try:
        timeout = float(document.get("timeout_s", 0))
    except (TypeError, ValueError):
        raise TemplateError("exec template timeout_s must be a number")
    return ExecTemplate(
        render_path=document.get("render_path", ""),
        bench_cmd=document.get("bench_cmd", ""),
        timeout_s=timeout,
        apply_cmd=document.get("apply_cmd") or None,
        metric_regex=document.get("metric_regex"),
        metric_path=document.get("metric_path"),
        workloads=dict(document.get("workloads", {})),
    )


def extract_metric(template, stdout):
    """Metric value from benchmark output, or None when it is not there."""
    if template.metric_regex is not None:
        match = re.search(template.metric_regex, stdout)
        if match is None:
            return None
        try:
            value = float(match.group(1))
        except ValueError:
            return None
        return value if math.isfinite(value) else None
    try:
        node = json.loads(stdout)
    except ValueError:
        return None
    for part in template.metric_path.split("."):
        if isinstance(node, list) and part.isdigit() and int(part) < len(node):
            node = node[int(part)]
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            return None
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        return None
    return float(node)


def _excerpt(text):
    text = (text or "").strip()
    return text[-_EXCERPT_CHARS:]


def _signal_group(process, signum):
    try:
        os.killpg(process.pid, signum)
    except (ProcessLookupError, PermissionError):
        pass


def _kill_group(process):
    """TERM the whole group, then KILL it after the grace period.

    The KILL goes to the group even when the leader exited on TERM: a child
    that ignores TERM would otherwise keep the output pipes open.
    """
    _signal_group(process, signal.SIGTERM)
    try:
        process.wait(timeout=_TERM_GRACE_S)
    except subprocess.TimeoutExpired:
        pass
    _signal_group(process, signal.SIGKILL)


def _drain(process):
    """Collect what the killed group wrote, never waiting past the drain period."""
    try:
        return process.communicate(timeout=_DRAIN_S)
    except subprocess.TimeoutExpired:
        # a process outside the group still holds the pipes
        for stream in (process.stdout, process.stderr):
            if stream is not None:
                stream.close()
        try:
            process.wait(timeout=_DRAIN_S)
        except subprocess.TimeoutExpired:
            logger.warning(f"Process {process.pid} survived SIGKILL of its group")
        return "", ""


def run_command(command, env, deadline):
    """
    Run a shell command in its own process group until ``deadline`` (monotonic).

    Returns:
        tuple: (exit code, or None on timeout; stdout; stderr)
    """
    process = subprocess.Popen(
        command, shell=True, env=env, text=True,
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, start_new_session=True,
    )
    try:
        stdout, stderr = process.communicate(timeout=max(0.0, deadline - time.monotonic()))
    except subprocess.TimeoutExpired:
        _kill_group(process)
        stdout, stderr = _drain(process)
        return None, stdout, stderr
    return process.returncode, stdout, stderr


def shell_eval(template, config, workload_id="default"):
    """
    Render, apply and benchmark one configuration.

    Returns:
        EvaluationRecord: a success with the extracted metric, or a failure
            whose reason starts with "apply failed", "timeout",
            "benchmark failed" or "metric not found".
    """
    started = utc_now()
    clock = time.monotonic()
    deadline = clock + template.timeout_s

    def finish(metric=None, failure=None):
        elapsed = time.monotonic() - clock
        if failure is not None:
            logger.warning(f"Shell evaluation failed: {failure}")
            return EvaluationRecord.failed_with(config, workload_id, failure, duration_s=elapsed,
                                                source=Source.SHELL, timestamp=started)
        return EvaluationRecord.success(config, workload_id, metric, duration_s=elapsed,
                                        source=Source.SHELL, timestamp=started)

    try:
        render_configuration(config, template.render_path)
    except OSError as e:
        return finish(failure=f"render failed: {e}")
    env = {
        **os.environ,
        **template.environment(workload_id),
        "KNOB_TUNER_CONFIG": str(template.render_path),
        "KNOB_TUNER_WORKLOAD": workload_id,
    }

    if template.apply_cmd:
        code, _, stderr = run_command(template.apply_cmd, env, deadline)
        if code is None:
            return finish(failure=f"timeout: apply exceeded {template.timeout_s:g}s")
        if code != 0:
            return finish(failure=f"apply failed (exit {code}): {_excerpt(stderr)}")

    code, stdout, stderr = run_command(template.bench_cmd, env, deadline)
    if code is None:
        return finish(failure=f"timeout: benchmark exceeded {template.timeout_s:g}s")
    if code != 0:
        return finish(failure=f"benchmark failed (exit {code}): {_excerpt(stderr)}")
    metric = extract_metric(template, stdout)
    if metric is None:
        return finish(failure=f"metric not found in benchmark output: {_excerpt(stdout) or _excerpt(stderr)}")
    return finish(metric=metric)


class ShellTarget:
    def __init__(self, template):
        self.template = template
        self.source = Source.SHELL

    def evaluate(self, config, workload_id, draw_seed):
        return shell_eval(self.template, config, workload_id)
