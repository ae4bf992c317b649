"""
Artifact helpers: atomic writes, JSON documents and content hashes
"""

import hashlib
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Union

import numpy as np

PathLike = Union[str, Path]

FLOAT_FORMAT = '%.17g'


@contextmanager
def atomic_open(path: PathLike, mode: str = 'wb') -> Iterator:
    """
    Open a temporary file next to `path` and move it into place on success

    Interrupted writes never leave a truncated artifact behind.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, mode) as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_bytes_atomic(path: PathLike, payload: bytes):
    with atomic_open(path, 'wb') as handle:
        handle.write(payload)


def write_text_atomic(path: PathLike, text: str):
    write_bytes_atomic(path, text.encode('utf-8'))


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # NaN/Inf are not JSON; undefined metrics are written as null
        return value if np.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def dumps_json(document: Any) -> str:
    """
    Deterministic JSON rendering (sorted keys, shortest round-trip floats)
    """
    return json.dumps(_to_jsonable(document), indent=2, sort_keys=True) + '\n'


def write_json_atomic(path: PathLike, document: Any):
    write_text_atomic(path, dumps_json(document))


def read_json(path: PathLike) -> Any:
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def git_blob_hash(payload: bytes) -> str:
    """SHA-1 of a git blob object wrapping `payload`"""
    header = f"blob {len(payload)}\0".encode('ascii')
    return hashlib.sha1(header + payload).hexdigest()


def file_content_hash(path: PathLike) -> str:
    return git_blob_hash(Path(path).read_bytes())
