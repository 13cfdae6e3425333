"""Resumable chunked upload sessions with end-to-end checksum verification.

A session buffers arbitrary-order byte chunks against a declared total size.
Overlapping resends must match the already-stored bytes. finish() succeeds
only when coverage is complete and the SHA-256 of the assembled payload
matches the digest declared at open time.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field


class UploadError(Exception):
    pass


class ChunkConflictError(UploadError):
    pass


class IncompleteUploadError(UploadError):
    pass


class ChecksumMismatchError(UploadError):
    pass


def _merge(intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for s, e in sorted(intervals):
        if out and s <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


@dataclass
class UploadSession:
    session_id: str
    participant_id: str
    declared_total_bytes: int
    checksum_hex: str
    state: str = "open"  # open | complete | aborted
    _buf: bytearray = field(default_factory=bytearray, repr=False)
    _intervals: list[tuple[int, int]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if len(self._buf) < self.declared_total_bytes:
            self._buf = bytearray(self.declared_total_bytes)

    def put_chunk(self, offset: int, data: bytes) -> None:
        if self.state != "open":
            raise UploadError(f"session {self.session_id} is {self.state}")
        if offset < 0 or offset + len(data) > self.declared_total_bytes:
            raise UploadError(
                f"chunk [{offset},{offset + len(data)}) exceeds declared size "
                f"{self.declared_total_bytes}"
            )
        # resends must be byte-identical over any overlap
        for s, e in self._intervals:
            lo, hi = max(s, offset), min(e, offset + len(data))
            if lo < hi and self._buf[lo:hi] != data[lo - offset : hi - offset]:
                raise ChunkConflictError(
                    f"overlap [{lo},{hi}) differs from previously stored bytes"
                )
        self._buf[offset : offset + len(data)] = data
        self._intervals = _merge(self._intervals + [(offset, offset + len(data))])

    def missing(self) -> list[tuple[int, int]]:
        gaps = []
        pos = 0
        for s, e in self._intervals:
            if s > pos:
                gaps.append((pos, s))
            pos = max(pos, e)
        if pos < self.declared_total_bytes:
            gaps.append((pos, self.declared_total_bytes))
        return gaps

    def received_bytes(self) -> int:
        return sum(e - s for s, e in self._intervals)

    def assemble(self) -> bytes:
        """Verify coverage and checksum; aborts the session on digest failure
        so the client restarts from scratch."""
        gaps = self.missing()
        if gaps:
            a, b = gaps[0]
            raise IncompleteUploadError(f"incomplete: missing [{a},{b})")
        digest = hashlib.sha256(bytes(self._buf)).hexdigest()
        if digest != self.checksum_hex:
            self.state = "aborted"
            raise ChecksumMismatchError(
                f"checksum mismatch: declared {self.checksum_hex}, got {digest}"
            )
        self.state = "complete"
        return bytes(self._buf)
