"""Append-only NDJSON event log: the single durable artifact.

Every state mutation is one JSON record on one line. Restart recovery is a
full replay; there is no other persistence.
"""

from __future__ import annotations

import json
import os
from typing import Iterator


class EventLog:
    def __init__(self, path: str | None):
        self.path = path
        self._fh = None
        if path is not None:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            self._fh = open(path, "a", encoding="utf-8")

    def append(self, record: dict) -> None:
        if self._fh is not None:
            self._fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @staticmethod
    def read(path: str) -> Iterator[dict]:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)
