"""Reading and writing channel records, event logs and run manifests.

The binary layout is documented byte by byte in ``docs/record_format.md``.
Every writer goes through :func:`atomic_write`, so a reader never sees a
partially written file.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cir import CirRecord
from .evolution import BirthDeathEvent

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "RecordFormatError",
    "RunManifest",
    "atomic_write",
    "record_to_bytes",
    "record_from_bytes",
    "write_record",
    "read_record",
    "write_record_csv",
    "write_events_csv",
    "write_table_csv",
    "format_float",
    "file_sha256",
]

MAGIC = b"NSMIMOCR"
FORMAT_VERSION = 1
# magic, version, flags, seed, realization, n_rays, sample_interval, carrier_frequency,
# U, S, T, E, fingerprint length, config length
_HEADER = struct.Struct("<8sHHQIIddIIQQII")


class RecordFormatError(ValueError):
    """A file is not a valid channel record."""


def format_float(x: float) -> str:
    """17 significant digits, '.' separator regardless of locale."""
    return format(float(x), ".17g")


def atomic_write(path: str | Path, data: bytes | str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _le(a: np.ndarray, dtype: str) -> bytes:
    return np.ascontiguousarray(a, dtype=dtype).tobytes()


def record_to_bytes(record: CirRecord, config_text: str = "") -> bytes:
    """Serialize a record (and optionally the effective config text)."""
    fp = record.fingerprint.encode("ascii")
    cfg = config_text.encode("utf-8")
    u, s = record.n_rx, record.n_tx
    t, e = record.n_snapshots, len(record.cluster_ids)
    if record.coefficients.shape != (e, u, s):
        raise ValueError("coefficient array does not match the record dimensions")
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, 0, record.seed, record.realization, record.n_rays,
                        record.sample_interval, record.carrier_frequency, u, s, t, e, len(fp), len(cfg))
    body = b"".join([
        head, fp, cfg,
        _le(record.rx_positions, "<f8"), _le(record.tx_positions, "<f8"),
        _le(record.steps, "<i8"), _le(record.offsets, "<i8"), _le(record.cluster_ids, "<i8"),
        _le(record.delays, "<f8"), _le(record.powers, "<f8"), _le(record.coefficients, "<c16"),
    ])
    return body + hashlib.sha256(body).digest()


def record_from_bytes(data: bytes) -> tuple[CirRecord, str]:
    """Inverse of :func:`record_to_bytes`; returns ``(record, config_text)``.

    Raises:
        RecordFormatError: on a bad magic, unknown version, truncation or
            checksum mismatch.
    """
    if len(data) < _HEADER.size + 32:
        raise RecordFormatError("file too short for a channel record")
    body, digest = data[:-32], data[-32:]
    (magic, version, _flags, seed, realization, n_rays, dt, fc, u, s, t, e,
     n_fp, n_cfg) = _HEADER.unpack_from(body)
    if magic != MAGIC:
        raise RecordFormatError("not a channel record (bad magic)")
    if version != FORMAT_VERSION:
        raise RecordFormatError(f"unsupported record format version {version}")
    if hashlib.sha256(body).digest() != digest:
        raise RecordFormatError("checksum mismatch (file corrupted or truncated)")
    pos = _HEADER.size
    sizes = [n_fp, n_cfg, 8 * 3 * u, 8 * 3 * s, 8 * t, 8 * (t + 1), 8 * e, 8 * e, 8 * e, 16 * e * u * s]
    if pos + sum(sizes) != len(body):
        raise RecordFormatError("record length does not match its header")
    chunks = []
    for n in sizes:
        chunks.append(body[pos:pos + n])
        pos += n
    fp, cfg = chunks[0].decode("ascii"), chunks[1].decode("utf-8")

    def arr(b, dtype, shape=None):
        a = np.frombuffer(b, dtype=dtype).astype(dtype[1:], copy=True)
        return a if shape is None else a.reshape(shape)

    record = CirRecord(
        fingerprint=fp, sample_interval=dt, carrier_frequency=fc, n_rays=n_rays, seed=seed,
        realization=realization, rx_positions=arr(chunks[2], "<f8", (u, 3)),
        tx_positions=arr(chunks[3], "<f8", (s, 3)), steps=arr(chunks[4], "<i8"), offsets=arr(chunks[5], "<i8"),
        cluster_ids=arr(chunks[6], "<i8"), delays=arr(chunks[7], "<f8"), powers=arr(chunks[8], "<f8"),
        coefficients=arr(chunks[9], "<c16", (e, u, s)),
    )
    return record, cfg


def write_record(path, record: CirRecord, config_text: str = "") -> Path:
    return atomic_write(path, record_to_bytes(record, config_text))


def read_record(path) -> tuple[CirRecord, str]:
    try:
        return record_from_bytes(Path(path).read_bytes())
    except RecordFormatError as exc:
        raise RecordFormatError(f"{path}: {exc}") from None


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> Path:
    """CSV with '#'-prefixed comment lines, floats at 17 significant digits."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return atomic_write(path, buf.getvalue())


def write_record_csv(path, record: CirRecord) -> Path:
    """One row per (snapshot, entry, rx, tx).

    This export is for inspection and plotting: the array geometry and the
    config text are not included, so it cannot be read back as a record.
    """
    comments = [f"fingerprint={record.fingerprint}", f"seed={record.seed}", f"realization={record.realization}",
                f"sample_interval={format_float(record.sample_interval)}",
                f"carrier_frequency={format_float(record.carrier_frequency)}"]
    header = ["snapshot", "time", "cluster_id", "delay", "power", "rx", "tx", "re", "im"]
    idx = record.snapshot_index
    times = record.times

    def rows():
        for k in range(len(record.cluster_ids)):
            i = idx[k]
            for u in range(record.n_rx):
                for s in range(record.n_tx):
                    h = record.coefficients[k, u, s]
                    yield (int(record.steps[i]), float(times[i]), int(record.cluster_ids[k]),
                           float(record.delays[k]), float(record.powers[k]), u, s, float(h.real), float(h.imag))

    return write_table_csv(path, header, rows(), comments)


def write_events_csv(path, events: Sequence[BirthDeathEvent]) -> Path:
    """Birth and death instants, one row per cluster event."""
    def rows():
        for ev in events:
            for cid in ev.died:
                yield float(ev.time), "death", int(cid)
            for cid in ev.born:
                yield float(ev.time), "birth", int(cid)

    return write_table_csv(path, ["time", "event", "cluster_id"], rows())


@dataclass
class RunManifest:
    command_line: list[str]
    fingerprint: str
    seed: int
    version: str
    started: str
    wall_clock_seconds: float
    outputs: list[dict] = field(default_factory=list)

    def add_output(self, path: str | Path):
        path = Path(path)
        self.outputs.append({"path": path.name, "sha256": file_sha256(path), "bytes": path.stat().st_size})

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, path) -> Path:
        return atomic_write(path, self.to_json())

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))
