"""
Parameter checkpoint file

Layout:
    u64 little-endian header length
    JSON header: {"format", "version", "spec", "tensors": [{name, shape, offset, nbytes}]}
    tensor payloads as little-endian float64, offsets relative to the payload start
"""

import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.model.arch import ArchSpec, ModelParams
from src.numeric.tensor import Tensor
from src.utils.errors import ConfigError, DatasetFormatError
from src.utils.io import write_bytes_atomic

FORMAT = 'ctrr-params'
VERSION = 1


def serialize_params(params: ModelParams) -> bytes:
    entries = []
    payload = bytearray()
    for name, tensor in params.named_tensors():
        raw = tensor.data.astype('<f8').tobytes()
        entries.append({'name': name, 'shape': list(tensor.shape), 'offset': len(payload), 'nbytes': len(raw)})
        payload.extend(raw)
    header = json.dumps({
        'format': FORMAT,
        'version': VERSION,
        'spec': params.spec.to_dict(),
        'tensors': entries,
    }, sort_keys=True).encode('utf-8')
    return struct.pack('<Q', len(header)) + header + bytes(payload)


def deserialize_params(blob: bytes) -> ModelParams:
    if len(blob) < 8:
        raise DatasetFormatError("checkpoint too short")
    (header_len,) = struct.unpack('<Q', blob[:8])
    try:
        header = json.loads(blob[8:8 + header_len].decode('utf-8'))
    except ValueError as exc:
        raise DatasetFormatError(f"checkpoint header is not valid JSON: {exc}") from exc
    if header.get('format') != FORMAT or header.get('version') != VERSION:
        raise DatasetFormatError(f"unsupported checkpoint {header.get('format')} v{header.get('version')}")

    spec = ArchSpec.from_dict(header['spec'])
    payload = blob[8 + header_len:]
    groups = {'encoder': [], 'predictor': [], 'classifier': []}
    for entry in header['tensors']:
        start, stop = entry['offset'], entry['offset'] + entry['nbytes']
        if stop > len(payload):
            raise DatasetFormatError(f"tensor {entry['name']} runs past the end of the file")
        values = np.frombuffer(payload[start:stop], dtype='<f8').reshape(entry['shape'])
        groups[entry['name'].split('.')[0]].append(Tensor(values))
    return ModelParams(spec, tuple(groups['encoder']), tuple(groups['predictor']), tuple(groups['classifier']))


def save_params(path: Union[str, Path], params: ModelParams):
    write_bytes_atomic(path, serialize_params(params))


def load_params(path: Union[str, Path]) -> ModelParams:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint {path} does not exist")
    return deserialize_params(path.read_bytes())
