from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Literal

import numpy as np
import numpy.typing as npt

from occlite.errors import RejectedInputError

OCCT_MAGIC = b"OCCT"
OCCT_VERSION = 0x01

# dtype byte -> little-endian storage dtype
_STORAGE_DTYPES: dict[int, np.dtype] = {
    0x00: np.dtype("<f4"),
    0x01: np.dtype("<f8"),
    0x02: np.dtype("<i8"),
}
_DTYPE_CODES = {"f32": 0x00, "f64": 0x01, "i64": 0x02}

StorageDtype = Literal["f32", "f64", "i64"]


def load_json(filepath: str | Path) -> dict | list:
    """Loads a provided JSON filepath as a Python dictionary or list."""
    with open(filepath, "r") as f:
        return json.load(f)


def save_json(data: Any, filepath: str | Path) -> None:
    """Writes `data` as indented, key-sorted JSON so reruns are
    byte-identical.
    """
    with open(filepath, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def write_occt(
    filepath: str | Path,
    array: npt.ArrayLike,
    dtype: StorageDtype | None = None,
) -> None:
    """Writes an array to an `.occt` tensor file.

    Layout: magic `OCCT`, version byte, dtype byte, rank byte, rank unsigned
    64-bit little-endian dims, then the row-major payload.

    Args:
        filepath: Destination path.
        array: The tensor to store.
        dtype: Storage type. Defaults to `i64` for integer arrays and `f64`
            otherwise. `f32` is a storage mode only; values are widened back
            to 64-bit on read.
    """
    arr = np.asarray(array)
    if dtype is None:
        dtype = "i64" if np.issubdtype(arr.dtype, np.integer) else "f64"
    if dtype not in _DTYPE_CODES:
        raise RejectedInputError(f"Unknown .occt dtype: {dtype}")
    if arr.ndim > 255:
        raise RejectedInputError(f"Rank {arr.ndim} does not fit in one byte")
    code = _DTYPE_CODES[dtype]
    if code != 0x02 and not np.all(np.isfinite(arr)):
        raise RejectedInputError(
            f"Refusing to write non-finite values to {filepath}"
        )

    header = OCCT_MAGIC + bytes([OCCT_VERSION, code, arr.ndim])
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype=_STORAGE_DTYPES[code])
    with open(filepath, "wb") as f:
        f.write(header)
        f.write(payload.tobytes(order="C"))


def read_occt(filepath: str | Path) -> np.ndarray:
    """Reads an `.occt` tensor file.

    Returns:
        A float64 array for float payloads (either storage width) or an int64
        array for label payloads.
    """
    raw = Path(filepath).read_bytes()
    if len(raw) < 7 or raw[:4] != OCCT_MAGIC:
        raise RejectedInputError(f"{filepath} is not an .occt file")
    version, code, rank = raw[4], raw[5], raw[6]
    if version != OCCT_VERSION:
        raise RejectedInputError(
            f"{filepath}: unsupported .occt version {version}"
        )
    if code not in _STORAGE_DTYPES:
        raise RejectedInputError(f"{filepath}: unknown dtype byte {code}")

    offset = 7 + 8 * rank
    if len(raw) < offset:
        raise RejectedInputError(f"{filepath}: truncated header")
    dims = struct.unpack(f"<{rank}Q", raw[7:offset])
    storage = _STORAGE_DTYPES[code]
    expected = int(np.prod(dims, dtype=np.int64)) * storage.itemsize
    if len(raw) - offset != expected:
        raise RejectedInputError(
            f"{filepath}: payload holds {len(raw) - offset} bytes, "
            f"dims {list(dims)} need {expected}"
        )

    arr = np.frombuffer(raw, dtype=storage, offset=offset).reshape(dims)
    if code == 0x02:
        return arr.astype(np.int64)
    return arr.astype(np.float64)
