"""Binary containers and structured-text artifacts.

Checkpoint container (magnitude-independent of platform):

    magic   8 bytes  b"HFCKPT01"
    u32 LE  length of the UTF-8 JSON config block, then the block itself
    u32 LE  number of tensors, then per tensor:
        u16 LE  name length, name bytes (UTF-8)
        u8      kind: 0 = float64, 1 = complex128
        u8      rank, then rank * u32 LE dims
        payload: little-endian float64, complex as interleaved (re, im)

Dataset container: same framing with magic b"HFDATA01", a JSON header
(task kind, n, shapes, seed, generator params) and two tensors named
"inputs" and "targets".

Metric/report files are JSON with sorted keys so identical runs emit
byte-identical artifacts.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .synthdata import Dataset

CKPT_MAGIC = b"HFCKPT01"
DATA_MAGIC = b"HFDATA01"


def _write_tensor(fh, name: str, arr: np.ndarray):
    arr = np.asarray(arr)
    if not arr.flags["C_CONTIGUOUS"]:  # ascontiguousarray would promote 0-d
        arr = np.ascontiguousarray(arr)
    if arr.dtype == np.complex128:
        kind = 1
    elif arr.dtype == np.float64:
        kind = 0
    elif arr.dtype.kind in "iu":
        arr = arr.astype(np.float64)
        kind = 0
    else:
        raise DataError(f"tensor {name!r}: unsupported dtype {arr.dtype}")
    raw = name.encode("utf-8")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)
    fh.write(struct.pack("<BB", kind, arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(arr.astype("<c16" if kind else "<f8").tobytes())


def _read_tensor(fh):
    (nlen,) = struct.unpack("<H", fh.read(2))
    name = fh.read(nlen).decode("utf-8")
    kind, ndim = struct.unpack("<BB", fh.read(2))
    shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
    count = int(np.prod(shape)) if ndim else 1
    dtype = "<c16" if kind else "<f8"
    arr = np.frombuffer(fh.read(count * (16 if kind else 8)), dtype=dtype)
    native = np.complex128 if kind else np.float64
    return name, arr.astype(native).reshape(shape)


def _write_container(path, magic: bytes, header: dict, tensors):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors:
            _write_tensor(fh, name, arr)


def _read_container(path, magic: bytes):
    with open(path, "rb") as fh:
        if fh.read(8) != magic:
            raise DataError(f"{path}: bad magic (expected {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        (n,) = struct.unpack("<I", fh.read(4))
        tensors = dict(_read_tensor(fh) for _ in range(n))
    return header, tensors


# ----------------------------------------------------------------------
# checkpoints
# ----------------------------------------------------------------------

def save_checkpoint(path, config: dict, params: dict):
    """Write a model checkpoint: config block plus named parameter tensors."""
    _write_container(path, CKPT_MAGIC, config, sorted(params.items()))


def load_checkpoint(path):
    """Read back (config dict, {name: array})."""
    return _read_container(path, CKPT_MAGIC)


# ----------------------------------------------------------------------
# datasets
# ----------------------------------------------------------------------

def save_dataset(path, ds: Dataset):
    header = {"task_kind": ds.task_kind, "meta": ds.meta, "n": len(ds)}
    _write_container(path, DATA_MAGIC, header,
                     [("inputs", ds.inputs), ("targets", ds.targets)])


def load_dataset(path) -> Dataset:
    header, tensors = _read_container(path, DATA_MAGIC)
    targets = tensors["targets"]
    if header["task_kind"] == "classification":
        targets = targets.real.astype(np.int64)
    return Dataset(tensors["inputs"], targets, header["task_kind"],
                   header.get("meta", {}))


def export_dataset_csv(path, ds: Dataset):
    """Plain-text inspection dump: one row per (sample, t), re/im columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, T, d = ds.inputs.shape
    cols = [f"{p}{c}" for c in range(d) for p in ("re", "im")]
    with open(path, "w") as fh:
        fh.write("sample,t," + ",".join(cols) + "\n")
        for i in range(n):
            for t in range(T):
                row = ds.inputs[i, t]
                vals = []
                for c in range(d):
                    vals += [repr(float(row[c].real)), repr(float(row[c].imag))]
                fh.write(f"{i},{t}," + ",".join(vals) + "\n")


# ----------------------------------------------------------------------
# structured-text records
# ----------------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dump_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def dump_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, default=_json_default) + "\n")


def load_jsonl(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
