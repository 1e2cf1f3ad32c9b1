"""Raw-tensor container: one little-endian binary file per array + manifest.

Layout of a container directory:

    manifest.txt     one line per array: ``name shape dtype filename``,
                     preceded by ``meta:`` key/value lines (config hash etc.)
    <name>.bin       raw array bytes, C order, little endian

Arrays default to float32; other dtypes (uint8 frames, int64 counters) are
recorded in the manifest so containers stay self-describing.
"""

from __future__ import annotations

import json
import os
from typing import Dict, Optional

import numpy as np

_DTYPES = {
    "float32": np.dtype("<f4"),
    "float64": np.dtype("<f8"),
    "uint8": np.dtype("u1"),
    "int64": np.dtype("<i8"),
    "bool": np.dtype("?"),
}


def _dtype_name(arr: np.ndarray) -> str:
    for name, dt in _DTYPES.items():
        if arr.dtype == dt or arr.dtype == np.dtype(name):
            return name
    raise TypeError(f"unsupported dtype {arr.dtype}")


def save_tensors(path: str, tensors: Dict[str, np.ndarray],
                 meta: Optional[Dict[str, str]] = None) -> None:
    os.makedirs(path, exist_ok=True)
    lines = []
    for key, value in sorted((meta or {}).items()):
        lines.append(f"meta: {key}={value}")
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        dname = _dtype_name(arr)
        arr = arr.astype(_DTYPES[dname], copy=False)
        fname = name.replace("/", "__") + ".bin"
        with open(os.path.join(path, fname), "wb") as f:
            f.write(arr.tobytes())
        shape = ",".join(str(s) for s in arr.shape) or "scalar"
        lines.append(f"{name} {shape} {dname} {fname}")
    with open(os.path.join(path, "manifest.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")


def load_tensors(path: str):
    """Returns (tensors dict, meta dict)."""
    tensors: Dict[str, np.ndarray] = {}
    meta: Dict[str, str] = {}
    with open(os.path.join(path, "manifest.txt")) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("meta: "):
                key, _, value = line[len("meta: "):].partition("=")
                meta[key] = value
                continue
            name, shape_s, dname, fname = line.rsplit(" ", 3)
            shape = () if shape_s == "scalar" else tuple(int(s) for s in shape_s.split(","))
            with open(os.path.join(path, fname), "rb") as fh:
                arr = np.frombuffer(fh.read(), dtype=_DTYPES[dname]).reshape(shape)
            tensors[name] = arr.copy()
    return tensors, meta


def save_json(path: str, name: str, obj) -> None:
    with open(os.path.join(path, name), "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True)


def load_json(path: str, name: str):
    with open(os.path.join(path, name)) as f:
        return json.load(f)
