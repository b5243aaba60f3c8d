"""Time-tag streams and their file formats.

CSV::

    # ttag v1, resolution_ps=1
    # acquisition_ps=1000000000        (optional)
    A,1234
    B,1740

Binary: the 8-byte magic ``TTAGv1\\0\\0`` followed by packed little-endian
records ``(u8 channel, u64 timestamp_ps)``; channel 0 is A, 1 is B.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_HEADER = "# ttag v1, resolution_ps=1"
BINARY_MAGIC = b"TTAGv1\x00\x00"
RECORD_DTYPE = np.dtype([("channel", "u1"), ("timestamp", "<u8")])

CHANNEL_A = 0
CHANNEL_B = 1
_CHANNEL_CODES = {b"A": CHANNEL_A, b"B": CHANNEL_B, b"0": CHANNEL_A, b"1": CHANNEL_B}


class TimeTagFormatError(ValueError):
    """Malformed time-tag file; ``offset`` is the byte position of the problem."""

    def __init__(self, path, offset: int, message: str):
        super().__init__(f"{path}: byte {offset}: {message}")
        self.path = path
        self.offset = offset


@dataclass(eq=False)
class TimeTagStream:
    """Detection events as parallel arrays: channel (0 = A, 1 = B) and picosecond timestamp."""

    channels: np.ndarray
    timestamps: np.ndarray
    acquisition_time: float | None = None

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.uint8)
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if self.channels.shape != self.timestamps.shape or self.channels.ndim != 1:
            raise ValueError("channels and timestamps must be 1-D arrays of equal length")
        if np.any(self.channels > CHANNEL_B):
            raise ValueError("channel codes must be 0 (A) or 1 (B)")

    def __len__(self):
        return len(self.timestamps)

    def __eq__(self, other):
        if not isinstance(other, TimeTagStream):
            return NotImplemented
        return np.array_equal(self.channels, other.channels) and np.array_equal(self.timestamps, other.timestamps)

    @property
    def duration(self) -> float:
        """Acquisition time in seconds; falls back to the span of the timestamps."""
        if self.acquisition_time is not None:
            return self.acquisition_time
        if len(self) == 0:
            return 0.0
        return (int(self.timestamps[-1]) + 1) * 1e-12

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.timestamps) >= 0))

    def sorted(self) -> TimeTagStream:
        order = np.lexsort((self.channels, self.timestamps))
        return TimeTagStream(self.channels[order], self.timestamps[order], self.acquisition_time)

    def channel(self, code: int) -> np.ndarray:
        return self.timestamps[self.channels == code]

    def shifted(self, offset_ps: int) -> TimeTagStream:
        return TimeTagStream(self.channels, self.timestamps + int(offset_ps), self.acquisition_time)

    @classmethod
    def merge(cls, *streams: TimeTagStream) -> TimeTagStream:
        ch = np.concatenate([s.channels for s in streams])
        ts = np.concatenate([s.timestamps for s in streams])
        acq = [s.acquisition_time for s in streams]
        acquisition = max(acq) if all(a is not None for a in acq) else None
        return cls(ch, ts, acquisition).sorted()


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_csv(stream: TimeTagStream, path) -> None:
    path = Path(path)
    lines = [CSV_HEADER]
    if stream.acquisition_time is not None:
        lines.append(f"# acquisition_ps={round(stream.acquisition_time * 1e12)}")
    names = np.array(["A", "B"])[stream.channels]
    body = np.char.add(np.char.add(names, ","), stream.timestamps.astype(str)) if len(stream) else []
    text = "\n".join(lines + list(body)) + "\n"
    _atomic_write_bytes(path, text.encode("ascii"))


def read_csv(path) -> TimeTagStream:
    path = Path(path)
    data = path.read_bytes()
    lines = data.split(b"\n")
    if not lines or lines[0].rstrip(b"\r").decode("ascii", "replace") != CSV_HEADER:
        raise TimeTagFormatError(path, 0, f"expected header {CSV_HEADER!r}")
    acquisition = None
    channels = []
    stamps = []
    offset = len(lines[0]) + 1
    for raw in lines[1:]:
        line = raw.rstrip(b"\r")
        here = offset
        offset += len(raw) + 1
        if not line:
            continue
        if line.startswith(b"#"):
            if line.startswith(b"# acquisition_ps="):
                try:
                    acquisition = int(line.split(b"=", 1)[1]) * 1e-12
                except ValueError:
                    raise TimeTagFormatError(path, here, "bad acquisition_ps value") from None
            continue
        if line == b"channel,timestamp_ps":
            continue
        parts = line.split(b",")
        if len(parts) != 2 or parts[0].strip() not in _CHANNEL_CODES:
            raise TimeTagFormatError(path, here, f"expected 'channel,timestamp_ps', got {line[:40]!r}")
        try:
            stamp = int(parts[1])
        except ValueError:
            raise TimeTagFormatError(path, here, f"bad timestamp {parts[1][:40]!r}") from None
        if stamp < 0:
            raise TimeTagFormatError(path, here, "negative timestamp")
        channels.append(_CHANNEL_CODES[parts[0].strip()])
        stamps.append(stamp)
    return TimeTagStream(np.array(channels, dtype=np.uint8), np.array(stamps, dtype=np.int64), acquisition)


def write_binary(stream: TimeTagStream, path) -> None:
    if np.any(stream.timestamps < 0):
        raise ValueError("binary format stores unsigned timestamps")
    rec = np.empty(len(stream), dtype=RECORD_DTYPE)
    rec["channel"] = stream.channels
    rec["timestamp"] = stream.timestamps
    _atomic_write_bytes(Path(path), BINARY_MAGIC + rec.tobytes())


def read_binary(path) -> TimeTagStream:
    path = Path(path)
    data = path.read_bytes()
    if data[: len(BINARY_MAGIC)] != BINARY_MAGIC:
        raise TimeTagFormatError(path, 0, "missing TTAGv1 magic")
    body = data[len(BINARY_MAGIC) :]
    extra = len(body) % RECORD_DTYPE.itemsize
    if extra:
        raise TimeTagFormatError(
            path, len(data) - extra, f"truncated record ({extra} trailing bytes)"
        )
    rec = np.frombuffer(body, dtype=RECORD_DTYPE)
    bad = np.flatnonzero(rec["channel"] > CHANNEL_B)
    if bad.size:
        raise TimeTagFormatError(
            path, len(BINARY_MAGIC) + int(bad[0]) * RECORD_DTYPE.itemsize, "channel code must be 0 or 1"
        )
    big = np.flatnonzero(rec["timestamp"] > np.iinfo(np.int64).max)
    if big.size:
        raise TimeTagFormatError(
            path, len(BINARY_MAGIC) + int(big[0]) * RECORD_DTYPE.itemsize + 1, "timestamp out of range"
        )
    return TimeTagStream(rec["channel"].copy(), rec["timestamp"].astype(np.int64))


def read_stream(path) -> TimeTagStream:
    """Read either format, chosen by the file's leading bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
    if head == BINARY_MAGIC:
        return read_binary(path)
    return read_csv(path)


def write_stream(stream: TimeTagStream, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        write_csv(stream, path)
    elif fmt == "binary":
        write_binary(stream, path)
    else:
        raise ValueError(f"unknown time-tag format {fmt!r}")
