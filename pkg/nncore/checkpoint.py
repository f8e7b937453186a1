"""
Parameter checkpoint format.

    offset 0   b"LUPICKPT"
    offset 8   u32 little-endian: header length L
    offset 12  L bytes of UTF-8 JSON header (sorted keys)
    then       raw little-endian array bytes, in header entry order

The header records the byte order, the precision, an opaque model config
and one entry per array (name, shape, offset into the payload, nbytes).
Equal arrays and config always produce equal bytes.
"""
import json
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from common.errors import ArgumentError, CheckpointError

PathLike = Union[str, Path]

MAGIC = b"LUPICKPT"
FORMAT_VERSION = 1
PRECISIONS = {"float32": np.dtype("<f4"), "float64": np.dtype("<f8")}


class CheckpointEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    shape: List[int]
    offset: int
    nbytes: int


class CheckpointHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    byteorder: str = "little"
    precision: str
    model: Dict[str, Any]
    entries: List[CheckpointEntry]


def encode_checkpoint(arrays: Mapping[str, np.ndarray], model: Mapping[str, Any], precision: str) -> bytes:
    if precision not in PRECISIONS:
        raise ArgumentError(f"Unknown precision: {precision}")
    dtype = PRECISIONS[precision]
    entries, chunks, offset = [], [], 0
    for name, array in arrays.items():
        raw = np.ascontiguousarray(array, dtype=dtype).tobytes()
        entries.append(CheckpointEntry(name=name, shape=list(np.shape(array)), offset=offset, nbytes=len(raw)))
        chunks.append(raw)
        offset += len(raw)
    header = CheckpointHeader(precision=precision, model=dict(model), entries=entries)
    header_bytes = json.dumps(header.model_dump(mode="json"), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(chunks)


def decode_checkpoint(blob: bytes) -> Tuple[CheckpointHeader, "OrderedDict[str, np.ndarray]"]:
    if blob[:len(MAGIC)] != MAGIC:
        raise CheckpointError("Not a checkpoint (bad magic)")
    start = len(MAGIC) + 4
    if len(blob) < start:
        raise CheckpointError("Truncated checkpoint header")
    (header_length,) = struct.unpack("<I", blob[len(MAGIC):start])
    try:
        header = CheckpointHeader.model_validate_json(blob[start:start + header_length])
    except ValidationError as exc:
        raise CheckpointError(f"Invalid checkpoint header: {exc}") from exc
    if header.byteorder != "little" or header.precision not in PRECISIONS:
        raise CheckpointError(f"Unsupported checkpoint encoding: {header.byteorder}/{header.precision}")
    if header.format_version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {header.format_version}")

    payload = memoryview(blob)[start + header_length:]
    dtype = PRECISIONS[header.precision]
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for entry in header.entries:
        end = entry.offset + entry.nbytes
        expected = int(np.prod(entry.shape, dtype=np.int64)) * dtype.itemsize
        if end > len(payload) or entry.nbytes != expected:
            raise CheckpointError(f"Checkpoint entry '{entry.name}' is truncated or mis-sized")
        array = np.frombuffer(payload[entry.offset:end], dtype=dtype).reshape(entry.shape)
        arrays[entry.name] = array.astype(dtype.newbyteorder("="), copy=True)
    return header, arrays


def save_checkpoint(path: PathLike, arrays: Mapping[str, np.ndarray], model: Mapping[str, Any], precision: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(arrays, model, precision))
    return path


def load_checkpoint(path: PathLike) -> Tuple[CheckpointHeader, "OrderedDict[str, np.ndarray]"]:
    """
    Raises:
        FileNotFoundError: path does not exist
        CheckpointError: unreadable or corrupt file
    """
    return decode_checkpoint(Path(path).read_bytes())
