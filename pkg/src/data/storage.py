"""
Dataset file storage

Binary layout (little-endian):
    b"CTRR" | u32 version | u64 N | u64 d | u32 K
    N*d f64 features (row-major) | N u32 true labels | N u32 noisy labels | N u8 flipped mask

A JSON sidecar `<file>.json` records the generating config, the noise
bookkeeping and the content hash of the binary file.

CSV import/export uses the header f0..f{d-1},true_label,noisy_label.
"""

import struct
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from src.data.synthetic import Dataset
from src.utils.errors import DatasetFormatError
from src.utils.io import FLOAT_FORMAT, atomic_open, git_blob_hash, read_json, write_bytes_atomic, write_json_atomic
from src.utils.logger import setup_logger

logger = setup_logger('data_storage')

MAGIC = b'CTRR'
VERSION = 1
HEADER = struct.Struct('<4sIQQI')

PathLike = Union[str, Path]


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + '.json')


def encode_dataset(ds: Dataset) -> bytes:
    header = HEADER.pack(MAGIC, VERSION, ds.size, ds.dim, ds.num_classes)
    return b''.join([
        header,
        ds.features.astype('<f8').tobytes(),
        ds.true_labels.astype('<u4').tobytes(),
        ds.noisy_labels.astype('<u4').tobytes(),
        ds.flipped_mask.astype('u1').tobytes(),
    ])


def decode_dataset(blob: bytes, noise_info: Optional[Dict] = None) -> Dataset:
    """
    Raises:
        DatasetFormatError: bad magic, unsupported version or truncated payload
    """
    if len(blob) < HEADER.size:
        raise DatasetFormatError(f"dataset file too short ({len(blob)} bytes)")
    magic, version, n, d, k = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise DatasetFormatError(f"unsupported dataset version {version}")
    expected = HEADER.size + n * d * 8 + n * 4 * 2 + n
    if len(blob) != expected:
        raise DatasetFormatError(f"dataset payload is {len(blob)} bytes, header implies {expected}")

    offset = HEADER.size
    features = np.frombuffer(blob, dtype='<f8', count=n * d, offset=offset).reshape(n, d)
    offset += n * d * 8
    true_labels = np.frombuffer(blob, dtype='<u4', count=n, offset=offset)
    offset += n * 4
    noisy_labels = np.frombuffer(blob, dtype='<u4', count=n, offset=offset)
    offset += n * 4
    flipped = np.frombuffer(blob, dtype='u1', count=n, offset=offset).astype(bool)
    try:
        return Dataset(features, true_labels, noisy_labels, flipped, k, noise_info or {})
    except ValueError as exc:
        raise DatasetFormatError(f"dataset contents are inconsistent: {exc}") from exc


def save_dataset(path: PathLike, ds: Dataset, config: Optional[Dict] = None) -> str:
    """
    Write the binary file and its sidecar atomically

    Returns:
        Content hash of the binary file
    """
    payload = encode_dataset(ds)
    content_hash = git_blob_hash(payload)
    write_bytes_atomic(path, payload)
    write_json_atomic(sidecar_path(path), {
        'format': 'ctrr-dataset',
        'version': VERSION,
        'config': config or {},
        'noise': ds.noise_info,
        'content_hash': content_hash,
        'shape': {'N': ds.size, 'd': ds.dim, 'K': ds.num_classes},
    })
    logger.info(f"✓ Saved dataset N={ds.size} d={ds.dim} K={ds.num_classes} to {path}")
    return content_hash


def load_dataset(path: PathLike) -> Dataset:
    """Read a binary dataset; noise bookkeeping comes from the sidecar when present"""
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(f"dataset file {path} does not exist")
    sidecar = sidecar_path(path)
    noise_info = read_json(sidecar).get('noise', {}) if sidecar.exists() else {}
    return decode_dataset(path.read_bytes(), noise_info)


def load_sidecar(path: PathLike) -> Dict:
    sidecar = sidecar_path(path)
    return read_json(sidecar) if sidecar.exists() else {}


def to_frame(ds: Dataset) -> pd.DataFrame:
    frame = pd.DataFrame(ds.features, columns=[f"f{i}" for i in range(ds.dim)])
    frame['true_label'] = ds.true_labels
    frame['noisy_label'] = ds.noisy_labels
    return frame


def export_csv(path: PathLike, ds: Dataset):
    with atomic_open(path, 'w') as handle:
        to_frame(ds).to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"✓ Exported {ds.size} rows to {path}")


def import_csv(path: PathLike, num_classes: Optional[int] = None) -> Dataset:
    """
    Read a dataset CSV

    Args:
        path: CSV with header f0..f{d-1},true_label,noisy_label
        num_classes: K; inferred as max label + 1 when omitted

    Raises:
        DatasetFormatError: header or values do not follow the layout
    """
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DatasetFormatError(f"cannot read dataset CSV {path}: {exc}") from exc

    columns = list(frame.columns)
    if columns[-2:] != ['true_label', 'noisy_label']:
        raise DatasetFormatError(f"CSV must end with true_label,noisy_label columns, got {columns[-2:]}")
    feature_columns = columns[:-2]
    if not feature_columns or feature_columns != [f"f{i}" for i in range(len(feature_columns))]:
        raise DatasetFormatError(f"feature columns must be f0..f{{d-1}}, got {feature_columns[:5]}")

    labels = frame[['true_label', 'noisy_label']]
    if labels.isna().any().any() or not all(pd.api.types.is_integer_dtype(t) for t in labels.dtypes):
        raise DatasetFormatError("label columns must hold integers")
    true_labels = labels['true_label'].to_numpy(dtype=np.int64)
    noisy_labels = labels['noisy_label'].to_numpy(dtype=np.int64)
    if num_classes is None:
        num_classes = max(2, int(max(true_labels.max(initial=0), noisy_labels.max(initial=0))) + 1)

    try:
        return Dataset.from_labels(frame[feature_columns].to_numpy(dtype=np.float64), true_labels,
                                   num_classes, noisy_labels)
    except ValueError as exc:
        raise DatasetFormatError(f"dataset CSV is inconsistent: {exc}") from exc
