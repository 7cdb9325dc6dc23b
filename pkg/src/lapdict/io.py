"""Binary and CSV persistence for datasets and learned models.

``LDS1`` dataset blob::

    b"LDS1" | u64 rows | u64 cols | u64 classes | f64[rows*cols] | u32[rows]

one signal per row (row-major, little-endian), followed by the labels.

``LDM1`` matrix blob::

    b"LDM1" | u64 rows | u64 cols | f64[rows*cols]

Composite models (separable pairs, block unions, per-class dictionaries)
are directories of ``LDM1`` blobs next to a ``model.json`` sidecar.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import FormatError
from .graphgen import LabeledDataset
from .lapdl import LapAtomDictionary
from .sbo import BlockUnion
from .sepdl import SeparableDictPair

LDS_MAGIC = b"LDS1"
LDM_MAGIC = b"LDM1"
_HEADER_LDS = struct.Struct("<4sQQQ")
_HEADER_LDM = struct.Struct("<4sQQ")


def dataset_to_bytes(ds: LabeledDataset) -> bytes:
    rows = ds.signals.T
    header = _HEADER_LDS.pack(LDS_MAGIC, rows.shape[0], rows.shape[1], len(ds.classes))
    return (header + np.ascontiguousarray(rows, dtype="<f8").tobytes()
            + ds.labels.astype("<u4").tobytes())


def dataset_from_bytes(raw: bytes, layout: str = "vectorized-laplacian") -> LabeledDataset:
    if len(raw) < _HEADER_LDS.size:
        raise FormatError("truncated LDS1 header")
    magic, rows, cols, classes = _HEADER_LDS.unpack_from(raw)
    if magic != LDS_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {LDS_MAGIC!r}")
    body = _HEADER_LDS.size
    n_sig = rows * cols * 8
    if len(raw) != body + n_sig + rows * 4:
        raise FormatError("LDS1 payload size does not match its header")
    X = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=body).reshape(rows, cols)
    labels = np.frombuffer(raw, dtype="<u4", count=rows, offset=body + n_sig)
    ds = LabeledDataset(X.T.astype(float), labels.astype(np.int64), layout)
    if len(ds.classes) != classes:
        raise FormatError("class count in header does not match the labels")
    return ds


def write_dataset(path, ds: LabeledDataset) -> None:
    Path(path).write_bytes(dataset_to_bytes(ds))


def read_dataset(path, layout: str = "vectorized-laplacian") -> LabeledDataset:
    return dataset_from_bytes(Path(path).read_bytes(), layout)


def write_dataset_csv(path, ds: LabeledDataset) -> None:
    """One signal per row with its label in the last column."""
    rows = np.column_stack([ds.signals.T, ds.labels])
    fmt = ["%.17g"] * ds.dim + ["%d"]
    np.savetxt(path, rows, fmt=fmt, delimiter=",")


def read_dataset_csv(path, layout: str = "vectorized-laplacian") -> LabeledDataset:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return LabeledDataset(rows[:, :-1].T, rows[:, -1].astype(np.int64), layout)


def matrix_to_bytes(M: np.ndarray) -> bytes:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("LDM1 stores 2-D matrices")
    return _HEADER_LDM.pack(LDM_MAGIC, *M.shape) + np.ascontiguousarray(M, dtype="<f8").tobytes()


def matrix_from_bytes(raw: bytes) -> np.ndarray:
    if len(raw) < _HEADER_LDM.size:
        raise FormatError("truncated LDM1 header")
    magic, rows, cols = _HEADER_LDM.unpack_from(raw)
    if magic != LDM_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {LDM_MAGIC!r}")
    if len(raw) != _HEADER_LDM.size + rows * cols * 8:
        raise FormatError("LDM1 payload size does not match its header")
    return np.frombuffer(raw, dtype="<f8", offset=_HEADER_LDM.size).reshape(rows, cols).astype(float)


def write_matrix(path, M) -> None:
    Path(path).write_bytes(matrix_to_bytes(M))


def read_matrix(path) -> np.ndarray:
    return matrix_from_bytes(Path(path).read_bytes())


def _dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_models(directory, method: str, models: dict, meta: dict | None = None) -> None:
    """Write per-class models of ``method`` (lapdl, sepdl, sbo or src)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = {}
    for c in sorted(models):
        model = models[c]
        if method == "sepdl":
            files = [f"class{c}_D1.ldm", f"class{c}_D2.ldm"]
            write_matrix(d / files[0], model.D1)
            write_matrix(d / files[1], model.D2)
            m1, n1 = model.D1.shape
            m2, n2 = model.D2.shape
            info = {"files": files, "m1": m1, "n1": n1, "m2": m2, "n2": n2}
        elif method == "sbo":
            files = [f"class{c}_block{j:03d}.ldm" for j in range(len(model))]
            for f, Q in zip(files, model.blocks):
                write_matrix(d / f, Q)
            info = {"files": files, "m": model.m, "L": len(model),
                    "class_of_block": [int(c)] * len(model)}
        elif method in ("lapdl", "src"):
            files = [f"class{c}.ldm"]
            write_matrix(d / files[0], getattr(model, "atoms", model))
            info = {"files": files}
        else:
            raise ValueError(f"unknown method {method!r}")
        entries[str(int(c))] = info
    _dump_json(d / "model.json", {"method": method, "classes": entries, **(meta or {})})


def load_models(directory) -> tuple[str, dict, dict]:
    """Inverse of :func:`save_models`: ``(method, models, sidecar)``."""
    d = Path(directory)
    try:
        side = json.loads((d / "model.json").read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable model sidecar: {exc}") from exc
    method = side["method"]
    models = {}
    for key, info in side["classes"].items():
        mats = [read_matrix(d / f) for f in info["files"]]
        c = int(key)
        if method == "sepdl":
            models[c] = SeparableDictPair(mats[0], mats[1])
        elif method == "sbo":
            models[c] = BlockUnion(np.stack(mats), np.full(len(mats), c))
        elif method == "lapdl":
            models[c] = LapAtomDictionary(mats[0])
        else:
            models[c] = mats[0]
    return method, models, side
