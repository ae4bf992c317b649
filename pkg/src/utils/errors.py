"""
Exception hierarchy

All domain errors derive from ValueError so callers that validate inputs the
usual way keep working; the CLI maps CTRRError to exit code 1.
"""

from typing import Optional, Sequence, Tuple


class CTRRError(ValueError):
    """Base class for all domain errors"""


class ShapeError(CTRRError):
    """Operand shapes do not conform to an operation's rules"""

    def __init__(self, op: str, shapes: Sequence[Tuple[int, ...]], detail: str = ''):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        message = f"{op}: incompatible shapes {self.shapes}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class NumericError(CTRRError):
    """Non-finite values, clamp bypass or degenerate rows"""


class ConfigError(CTRRError):
    """Invalid configuration value or document"""


class EnumerationGuardError(CTRRError):
    """Exhaustive search would exceed the enumeration limits"""


class DatasetFormatError(CTRRError):
    """Dataset file is malformed"""


class TrainingDivergedError(NumericError):
    """A non-finite loss or gradient appeared during training"""

    def __init__(self, message: str, epoch: Optional[int] = None, batch: Optional[int] = None):
        self.epoch = epoch
        self.batch = batch
        where = []
        if epoch is not None:
            where.append(f"epoch={epoch}")
        if batch is not None:
            where.append(f"batch={batch}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)
