"""Binary artifact container with byte-stable layout and sha256 digests.

Layout: one ASCII magic line, one line holding the manifest byte length, the
manifest itself (compact JSON, sorted keys), a newline, then each array's raw
little-endian C-order payload in manifest order.  Arrays are written sorted
by name, so the same contents always produce the same file bytes and the
same digest.

Writes are atomic: data goes to a sibling temp file that is renamed into
place only after a successful flush.
"""

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .exceptions import CheckpointError, DigestMismatchError
from .model import EmbeddingModel
from .families import get_family

MAGIC = b"ANKGE-BIN v1\n"

_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    hasher = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def _canonical_dtype(arr: np.ndarray) -> str:
    if arr.dtype == np.float64:
        return "<f8"
    if arr.dtype == np.int64:
        return "<i8"
    raise CheckpointError(f"unsupported array dtype {arr.dtype}; use float64 or int64")


def write_container(path, meta: dict, arrays: dict[str, np.ndarray]) -> str:
    """Serializes meta + named arrays; returns the file's sha256 digest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = sorted(arrays)
    manifest = {
        "arrays": [
            {
                "dtype": _canonical_dtype(arrays[n]),
                "name": n,
                "shape": list(arrays[n].shape),
            }
            for n in names
        ],
        "meta": meta,
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    hasher = hashlib.sha256()
    with open(tmp, "wb") as fh:

        def emit(data: bytes):
            fh.write(data)
            hasher.update(data)

        emit(MAGIC)
        emit(f"{len(manifest_bytes)}\n".encode("ascii"))
        emit(manifest_bytes)
        emit(b"\n")
        for n in names:
            arr = np.ascontiguousarray(arrays[n], dtype=_DTYPES[_canonical_dtype(arrays[n])])
            emit(arr.tobytes())
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return hasher.hexdigest()


def read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"artifact not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointError(f"{path}: not an artifact container (bad magic)")
        length_line = fh.readline()
        try:
            manifest_len = int(length_line.decode("ascii").strip())
        except ValueError:
            raise CheckpointError(f"{path}: corrupt manifest length")
        manifest_bytes = fh.read(manifest_len)
        if len(manifest_bytes) != manifest_len:
            raise CheckpointError(f"{path}: truncated manifest")
        try:
            manifest = json.loads(manifest_bytes.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{path}: corrupt manifest: {exc}")
        if fh.read(1) != b"\n":
            raise CheckpointError(f"{path}: corrupt manifest terminator")
        arrays: dict[str, np.ndarray] = {}
        for entry in manifest["arrays"]:
            dtype = _DTYPES.get(entry["dtype"])
            if dtype is None:
                raise CheckpointError(f"{path}: unsupported dtype {entry['dtype']}")
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            payload = fh.read(count * dtype.itemsize)
            if len(payload) != count * dtype.itemsize:
                raise CheckpointError(f"{path}: truncated payload for array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise CheckpointError(f"{path}: trailing bytes after declared payload")
    return manifest["meta"], arrays


def save_model(path, model: EmbeddingModel, meta: dict | None = None) -> str:
    """Writes a model checkpoint; returns its digest."""
    full_meta = {
        "dim": model.dim,
        "family": model.family.name,
        "kind": "model",
        "num_entities": model.num_entities,
        "num_relations": model.num_relations,
    }
    if meta:
        overlap = set(full_meta) & set(meta)
        if overlap:
            raise CheckpointError(f"meta keys {sorted(overlap)} are reserved")
        full_meta.update(meta)
    arrays = {"entity_emb": model.entity_emb, "relation_emb": model.relation_emb}
    if model.mix.size:
        arrays["mix"] = model.mix
    return write_container(path, full_meta, arrays)


def load_model(path) -> tuple[EmbeddingModel, dict]:
    meta, arrays = read_container(path)
    if meta.get("kind") != "model":
        raise CheckpointError(f"{path}: expected a model checkpoint, found {meta.get('kind')!r}")
    try:
        family = get_family(meta["family"])
        model = EmbeddingModel(
            family=family,
            dim=int(meta["dim"]),
            entity_emb=arrays["entity_emb"],
            relation_emb=arrays["relation_emb"],
            mix=arrays.get("mix", np.empty(0)),
        )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: inconsistent checkpoint: {exc}")
    return model, meta


def require_digest(path, expected: str, what: str) -> None:
    """Fails with DigestMismatchError unless the file hashes to expected."""
    actual = sha256_file(path)
    if actual != expected:
        raise DigestMismatchError(
            f"{what} digest mismatch for {path}: expected {expected}, found {actual}"
        )
