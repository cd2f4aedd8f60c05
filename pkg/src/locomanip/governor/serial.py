"""Binary container for admissible sets.

Layout (all little-endian):
  magic "MOAS" | u32 format version | u32 set count |
  per set: u16 axis-name length + utf8 name |
           grid block: 5 x (f64 min, f64 max, u32 count) |
           u32 metadata length + metadata JSON utf8 |
           u64 point count | points as f64 row-major (n x 5) |
  u32 crc32 over everything before it.

Round-trips are bit-exact; truncated or tampered files fail to load with no
partial result.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .constraints import GridSpec
from .moas import AdmissibleSet

_MAGIC = b"MOAS"
_VERSION = 1


class MoasFormatError(RuntimeError):
    pass


def serialize_sets(sets: dict[str, AdmissibleSet]) -> bytes:
    buf = bytearray()
    buf += _MAGIC
    buf += struct.pack("<II", _VERSION, len(sets))
    for axis, aset in sets.items():
        name = axis.encode("utf-8")
        buf += struct.pack("<H", len(name)) + name
        for d in range(5):
            buf += struct.pack("<ddI", aset.grid.mins[d], aset.grid.maxs[d], int(aset.grid.counts[d]))
        meta = json.dumps(aset.metadata, sort_keys=True).encode("utf-8")
        buf += struct.pack("<I", len(meta)) + meta
        buf += struct.pack("<Q", len(aset.points))
        buf += np.ascontiguousarray(aset.points, dtype="<f8").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)))
    return bytes(buf)


def save_sets(sets: dict[str, AdmissibleSet], path: str | Path):
    Path(path).write_bytes(serialize_sets(sets))


def deserialize_sets(raw: bytes) -> dict[str, AdmissibleSet]:
    if len(raw) < 16 or raw[:4] != _MAGIC:
        raise MoasFormatError("not an admissible-set file")
    if zlib.crc32(raw[:-4]) != struct.unpack("<I", raw[-4:])[0]:
        raise MoasFormatError("checksum mismatch (truncated or corrupt file)")
    version, n_sets = struct.unpack_from("<II", raw, 4)
    if version != _VERSION:
        raise MoasFormatError(f"unsupported format version {version}")
    off = 12
    sets: dict[str, AdmissibleSet] = {}
    try:
        for _ in range(n_sets):
            (name_len,) = struct.unpack_from("<H", raw, off)
            off += 2
            axis = raw[off : off + name_len].decode("utf-8")
            off += name_len
            mins, maxs, counts = np.empty(5), np.empty(5), np.empty(5, dtype=int)
            for d in range(5):
                mins[d], maxs[d], counts[d] = struct.unpack_from("<ddI", raw, off)
                off += 20
            (meta_len,) = struct.unpack_from("<I", raw, off)
            off += 4
            metadata = json.loads(raw[off : off + meta_len].decode("utf-8"))
            off += meta_len
            (n_points,) = struct.unpack_from("<Q", raw, off)
            off += 8
            points = np.frombuffer(raw, dtype="<f8", count=n_points * 5, offset=off)
            off += n_points * 5 * 8
            sets[axis] = AdmissibleSet(axis, GridSpec(mins, maxs, counts), points.reshape(-1, 5).copy(), metadata)
    except (struct.error, ValueError, json.JSONDecodeError) as exc:
        raise MoasFormatError(f"malformed admissible-set file: {exc}") from exc
    if off != len(raw) - 4:
        raise MoasFormatError("trailing bytes after declared sets")
    return sets


def load_sets(path: str | Path) -> dict[str, AdmissibleSet]:
    return deserialize_sets(Path(path).read_bytes())
