"""Flat binary checkpoint format for named float64 arrays.

Layout, little-endian throughout: 8-byte magic, u32 array count, then per
array a u32 name length, the UTF-8 name, u32 ndim, ndim u32 dims, and the
float64 values in C order.  Self-describing so load needs no shape
metadata.
"""

import struct

import numpy as np

MAGIC = b"QGPARAM1"


def save_arrays(arrays, path):
    """arrays: mapping name -> ndarray, order preserved on disk."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d
            data = np.asarray(arr, dtype=np.float64, order="C")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(data.tobytes())


def load_arrays(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint (bad magic)")
    pos = len(MAGIC)

    def take(n):
        nonlocal pos
        if pos + n > len(blob):
            raise ValueError(f"{path}: truncated checkpoint")
        chunk = blob[pos : pos + n]
        pos += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    arrays = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        n_values = int(np.prod(shape)) if ndim else 1
        values = np.frombuffer(take(8 * n_values), dtype="<f8").copy()
        arrays[name] = values.reshape(shape)
    if pos != len(blob):
        raise ValueError(f"{path}: trailing bytes after last array")
    return arrays
