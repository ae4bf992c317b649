"""
Tests for logging setup, artifact helpers and the error hierarchy
"""

import json
import logging

import numpy as np
import pytest

from src.utils.errors import (
    ConfigError,
    CTRRError,
    NumericError,
    ShapeError,
    TrainingDivergedError,
)
from src.utils.io import (
    atomic_open,
    dumps_json,
    git_blob_hash,
    read_json,
    write_json_atomic,
)
from src.utils.logger import qualified_name, setup_logger


def test_loggers_live_under_the_ctrr_namespace():
    assert qualified_name('training') == 'ctrr.training'
    assert qualified_name('ctrr.theory') == 'ctrr.theory'
    assert setup_logger('unit', log_to_file=False).name == 'ctrr.unit'


def test_repeated_setup_does_not_stack_handlers():
    setup_logger('unit', level='debug', log_to_file=False)
    logger = setup_logger('unit', level='warning', log_to_file=False)
    assert len(logger.handlers) == 1
    assert logger.level == logging.WARNING


def test_json_is_sorted_and_nan_becomes_null():
    text = dumps_json({'b': float('nan'), 'a': np.int64(3), 'c': np.array([1.5, np.inf])})
    assert text.endswith('\n')
    assert list(json.loads(text)) == ['a', 'b', 'c']
    assert json.loads(text) == {'a': 3, 'b': None, 'c': [1.5, None]}


def test_json_write_then_read(tmp_path):
    path = tmp_path / 'nested' / 'doc.json'
    write_json_atomic(path, {'flag': np.bool_(True)})
    assert read_json(path) == {'flag': True}


def test_failed_atomic_write_leaves_nothing_behind(tmp_path):
    path = tmp_path / 'artifact.bin'
    path.write_bytes(b'old')
    with pytest.raises(RuntimeError):
        with atomic_open(path) as handle:
            handle.write(b'partial')
            raise RuntimeError('interrupted')
    assert path.read_bytes() == b'old'
    assert [p.name for p in tmp_path.iterdir()] == ['artifact.bin']


def test_git_blob_hash_of_empty_payload():
    assert git_blob_hash(b'') == 'e69de29bb2d1d6434b8b29ae775ad8c2e48c5391'


def test_domain_errors_are_value_errors():
    for error in (ConfigError('x'), NumericError('x'), ShapeError('matmul', [(2, 3), (2, 3)])):
        assert isinstance(error, CTRRError)
        assert isinstance(error, ValueError)


def test_shape_error_message_lists_operands():
    error = ShapeError('matmul', [(2, 3), (2, 3)], 'inner dimensions differ')
    assert str(error) == 'matmul: incompatible shapes [(2, 3), (2, 3)] (inner dimensions differ)'


def test_diverged_error_records_position():
    error = TrainingDivergedError('non-finite gradient', epoch=3, batch=7)
    assert (error.epoch, error.batch) == (3, 7)
    assert str(error).endswith('[epoch=3, batch=7]')
