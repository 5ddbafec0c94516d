"""
Append-only evaluation database for knob_tuner.

Records are stored one JSON object per line after a versioned header line.
Appends are flushed and fsynced one line at a time, so a crash can at worst
leave a torn trailing line. load() skips it with a warning and the next append
cuts it off, so a torn line never ends up in the middle of the file.
"""
import json
import os
import logging
from pathlib import Path

from knob_tuner.common.exceptions import StoreError
from knob_tuner.common.json_encoder import dumps
from knob_tuner.store.encode_record import document_to_record, record_to_document

logger = logging.getLogger(__name__)

FORMAT_NAME = "sapphire-evals"
FORMAT_VERSION = 1
HEADER = {"format": FORMAT_NAME, "version": FORMAT_VERSION}


class EvalStore:
    """
    Evaluation database bound to one file.

    A single writer per file is supported; any number of readers may load
    concurrently.

    Example:
        >>> store = EvalStore("evals.jsonl")
        >>> store.append(record)
        >>> records = store.load(workload_id="randread")
    """

    def __init__(self, db_path):
        self.db_path = Path(db_path)

    def append(self, record):
        """
        Append one record as a single line.

        Raises:
            StoreError: the file cannot be written or is not an evaluation database.
        """
        line = dumps(record_to_document(record), separators=(",", ":"))
        try:
            exists = self.db_path.exists() and self.db_path.stat().st_size > 0
            if exists:
                self._check_header()
                self._drop_torn_tail()
            else:
                self.db_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.db_path, "a", encoding="utf-8") as handle:
                if not exists:
                    handle.write(dumps(HEADER, separators=(",", ":")) + "\n")
                handle.write(line + "\n")
                handle.flush()
                os.fsync(handle.fileno())
        except OSError as e:
            raise StoreError(f"cannot append to {self.db_path}: {e}") from e

    def append_many(self, records):
        for record in records:
            self.append(record)

    def load(self, workload_id=None):
        """
        Records in append order, optionally only those of one workload.

        Failure records are included; callers decide whether to use them.

        Raises:
            StoreError: missing file, bad header, or a malformed line that is not
                the last one (the message names the line number).
        """
        try:
            lines = self.db_path.read_text(encoding="utf-8").split("\n")
        except OSError as e:
            raise StoreError(f"cannot read {self.db_path}: {e}") from e
        if lines and lines[-1] == "":
            lines.pop()
            torn_allowed = False
        else:
            torn_allowed = True
        if not lines:
            raise StoreError(f"{self.db_path} is empty (missing header line)")
        self._parse_header(lines[0])

        records = []
        last = len(lines)
        for number, text in enumerate(lines[1:], start=2):
            if not text.strip():
                continue
            try:
                record = document_to_record(json.loads(text))
            except ValueError as e:
                if number == last and torn_allowed:
                    logger.warning(f"Skipped torn trailing line {number} of {self.db_path}")
                    continue
                raise StoreError(f"{self.db_path}: line {number}: malformed record: {e}") from e
            if workload_id is None or record.workload_id == workload_id:
                records.append(record)
        return records

    def _parse_header(self, text):
        try:
            header = json.loads(text)
        except ValueError as e:
            raise StoreError(f"{self.db_path}: line 1 is not a header: {e}") from e
        if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
            raise StoreError(f"{self.db_path} is not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise StoreError(f"{self.db_path}: unsupported version {header.get('version')}")

    def _check_header(self):
        with open(self.db_path, "r", encoding="utf-8") as handle:
            self._parse_header(handle.readline())

    def _drop_torn_tail(self):
        """Cut off an unterminated last line left by a crashed append."""
        with open(self.db_path, "rb") as handle:
            data = handle.read()
        if data.endswith(b"\n"):
            return
        keep = data.rfind(b"\n") + 1
        if keep == 0:
            raise StoreError(f"{self.db_path}: line 1: header line is not terminated")
        logger.warning(f"Truncated torn trailing line of {self.db_path} before appending")
        os.truncate(self.db_path, keep)


def append(db_path, record):
    """Append one EvaluationRecord to the database at ``db_path``."""
    EvalStore(db_path).append(record)


def load(db_path, workload_id=None):
    """Load the records of the database at ``db_path`` (see EvalStore.load)."""
    return EvalStore(db_path).load(workload_id)
