"""
Plug-in information measures on finite probability tables

A table is an n-dimensional array of probabilities, one axis per random
variable. Variables are selected by axis index or, when `names` is given,
by axis name. Every value is in nats and 0·log 0 is taken as 0.
"""

from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import entropy as scipy_entropy

from src.utils.errors import CTRRError, NumericError

Axis = Union[int, str]

QUERIES = ('entropy', 'conditional_entropy', 'mutual_info', 'conditional_mutual_info')

SUM_TOLERANCE = 1e-12
# entropy differences below this are float round-off, reported as 0
ROUNDOFF = 1e-12


def validate_table(table: np.ndarray, tolerance: float = SUM_TOLERANCE) -> np.ndarray:
    """Float64 copy of a probability table; entries ≥ 0 and total 1"""
    table = np.asarray(table, dtype=np.float64)
    if table.ndim == 0 or table.size == 0:
        raise NumericError("probability table must have at least one axis and one entry")
    if not np.all(np.isfinite(table)):
        raise NumericError("probability table has non-finite entries")
    if np.any(table < 0):
        raise NumericError(f"probability table has negative entries (min {table.min():.3g})")
    total = float(table.sum())
    if abs(total - 1.0) > tolerance:
        raise NumericError(f"probability table sums to {total:.15g}, expected 1")
    return table


def _resolve(axes: Iterable[Axis], ndim: int, names: Optional[Sequence[str]]) -> Tuple[int, ...]:
    resolved = []
    for axis in axes:
        if isinstance(axis, str):
            if names is None or axis not in names:
                raise CTRRError(f"unknown variable '{axis}' (variables: {list(names or [])})")
            axis = list(names).index(axis)
        if not 0 <= int(axis) < ndim:
            raise CTRRError(f"variable axis {axis} out of range for a {ndim}-variable table")
        resolved.append(int(axis))
    if len(set(resolved)) != len(resolved):
        raise CTRRError(f"variable selection repeats an axis: {resolved}")
    return tuple(resolved)


def marginal(table: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Marginal over `axes` (kept in the order given)"""
    drop = tuple(a for a in range(table.ndim) if a not in axes)
    kept = table.sum(axis=drop) if drop else table
    remaining = [a for a in range(table.ndim) if a in axes]
    return np.transpose(kept, [remaining.index(a) for a in axes])


def joint_entropy(table: np.ndarray, axes: Sequence[int]) -> float:
    if not axes:
        return 0.0
    return float(scipy_entropy(marginal(table, axes).ravel()))


def _nonnegative(value: float) -> float:
    return 0.0 if -ROUNDOFF < value < 0.0 else value


def entropy(table: np.ndarray, a: Sequence[int]) -> float:
    return joint_entropy(table, a)


def conditional_entropy(table: np.ndarray, a: Sequence[int], given: Sequence[int]) -> float:
    """H(A | C) = H(A, C) − H(C)"""
    return _nonnegative(joint_entropy(table, tuple(a) + tuple(given)) - joint_entropy(table, given))


def mutual_info(table: np.ndarray, a: Sequence[int], b: Sequence[int]) -> float:
    """I(A; B) = H(A) + H(B) − H(A, B)"""
    value = joint_entropy(table, a) + joint_entropy(table, b) - joint_entropy(table, tuple(a) + tuple(b))
    return _nonnegative(value)


def conditional_mutual_info(table: np.ndarray, a: Sequence[int], b: Sequence[int],
                            given: Sequence[int]) -> float:
    """I(A; B | C) = H(A, C) + H(B, C) − H(A, B, C) − H(C)"""
    a, b, given = tuple(a), tuple(b), tuple(given)
    value = (joint_entropy(table, a + given) + joint_entropy(table, b + given)
             - joint_entropy(table, a + b + given) - joint_entropy(table, given))
    return _nonnegative(value)


def info_measures(table: np.ndarray, query: str, a: Sequence[Axis], b: Sequence[Axis] = (),
                  given: Sequence[Axis] = (), names: Optional[Sequence[str]] = None) -> float:
    """
    Exact information measure of a probability table

    Args:
        table: joint probabilities, one axis per variable
        query: one of QUERIES
        a: first variable group
        b: second variable group (mutual information queries)
        given: conditioning group (conditional queries)
        names: optional axis names usable in a, b and given

    Returns:
        Value in nats

    Raises:
        CTRRError: invalid query or variable selection
        NumericError: the table is not a probability table
    """
    if query not in QUERIES:
        raise CTRRError(f"unknown query '{query}'. Available: {list(QUERIES)}")
    table = validate_table(table)
    if names is not None and len(names) != table.ndim:
        raise CTRRError(f"{len(names)} names given for a {table.ndim}-variable table")

    a_ax = _resolve(a, table.ndim, names)
    b_ax = _resolve(b, table.ndim, names)
    c_ax = _resolve(given, table.ndim, names)
    if not a_ax:
        raise CTRRError("variable selection 'a' is empty")
    if set(a_ax) & set(b_ax) or set(a_ax) & set(c_ax) or set(b_ax) & set(c_ax):
        raise CTRRError("variable groups must be disjoint")

    needs_b = query in ('mutual_info', 'conditional_mutual_info')
    needs_given = query in ('conditional_entropy', 'conditional_mutual_info')
    if needs_b != bool(b_ax):
        raise CTRRError(f"query '{query}' {'needs' if needs_b else 'takes no'} second variable group")
    if needs_given != bool(c_ax):
        raise CTRRError(f"query '{query}' {'needs' if needs_given else 'takes no'} conditioning group")

    if query == 'entropy':
        return entropy(table, a_ax)
    if query == 'conditional_entropy':
        return conditional_entropy(table, a_ax, c_ax)
    if query == 'mutual_info':
        return mutual_info(table, a_ax, b_ax)
    return conditional_mutual_info(table, a_ax, b_ax, c_ax)


def binary_entropy(p: float) -> float:
    return float(scipy_entropy([p, 1.0 - p]))
