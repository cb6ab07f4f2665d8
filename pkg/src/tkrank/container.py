"""Single-file container: magic, JSON header, then raw little-endian float64 arrays.

Writing the same content always yields the same bytes, and arrays round-trip
bit for bit.
"""

import json
import struct

import numpy as np


class ContainerError(ValueError):
    pass


def write_container(path, magic, header, arrays=None):
    """``arrays`` is an ordered mapping of name -> float64 array."""
    arrays = arrays or {}
    entries, blobs, offset = [], [], 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(data.shape), "offset": offset})
        blobs.append(data.tobytes())
        offset += data.nbytes
    head = dict(header)
    head["arrays"] = entries
    raw = json.dumps(head, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for blob in blobs:
            fh.write(blob)


def read_container(path, magic):
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(magic):
        raise ContainerError(f"{path}: not a {magic!r} file")
    pos = len(magic)
    if len(data) < pos + 8:
        raise ContainerError(f"{path}: truncated header")
    (n,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    header = json.loads(data[pos:pos + n].decode("utf-8"))
    body = memoryview(data)[pos + n:]
    arrays = {}
    for e in header.pop("arrays"):
        count = int(np.prod(e["shape"], dtype=np.int64))
        end = e["offset"] + 8 * count
        if end > len(body):
            raise ContainerError(f"{path}: array {e['name']!r} extends past end of file")
        arrays[e["name"]] = np.frombuffer(body[e["offset"]:end], dtype="<f8").reshape(e["shape"]).astype(np.float64)
    return header, arrays
