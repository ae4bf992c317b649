"""
Immutable dense float64 tensor
"""

from typing import Sequence, Tuple, Union

import numpy as np

from src.utils.errors import NumericError

ArrayLike = Union['Tensor', np.ndarray, Sequence, float, int]


class Tensor:
    """
    Dense row-major array of 64-bit reals

    Values are copied on construction and frozen, so a Tensor can be shared
    between graphs and threads.
    """

    __slots__ = ('_data',)

    def __init__(self, data: ArrayLike):
        if isinstance(data, Tensor):
            arr = data._data
        else:
            arr = np.array(data, dtype=np.float64, order='C')
            if not np.all(np.isfinite(arr)):
                bad = np.argwhere(~np.isfinite(arr))
                raise NumericError(f"Tensor contains non-finite values at {bad[:5].tolist()}")
            arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the values"""
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def numpy(self) -> np.ndarray:
        """Writable copy of the values"""
        return np.array(self._data)

    def item(self) -> float:
        if self._data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self._data.reshape(-1)[0])

    def tolist(self):
        return self._data.tolist()

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> 'Tensor':
        return cls(np.zeros(tuple(shape)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    __hash__ = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, data={np.array2string(self._data, precision=6, threshold=8)})"


def as_array(value: ArrayLike) -> np.ndarray:
    """float64 ndarray view of a Tensor or array-like"""
    if isinstance(value, Tensor):
        return value.data
    return np.asarray(value, dtype=np.float64)
