"""
Finite joint laws over (X, Y, Ỹ) and the quantities derived from them
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.config.settings import TheoryDefaults
from src.theory.measures import conditional_mutual_info, mutual_info, validate_table
from src.utils.errors import ConfigError, CTRRError

# axis order of DiscreteJoint.table
AXES = ('x', 'y', 'y_noisy')
# axis order of DiscreteJoint.pair_table()
PAIR_AXES = ('x', 'x_pos', 'y', 'y_noisy')

MARKOV_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """
    p(x, y, ỹ) over a finite product

    With markov=True (the default) the noise channel may depend on the true
    label only: p(ỹ | x, y) = p(ỹ | y) wherever p(x, y) > 0. markov=False
    admits instance-dependent noise.
    """
    table: np.ndarray
    markov: bool = True

    def __post_init__(self):
        table = validate_table(self.table)
        if table.ndim != 3:
            raise ConfigError(f"joint table must have axes {AXES}, got {table.ndim} axes")
        table = table.copy()
        table.setflags(write=False)
        object.__setattr__(self, 'table', table)
        if self.markov:
            self._check_markov()

    def _check_markov(self):
        p_xy = self.table.sum(axis=2)
        p_y_noisy = self.table.sum(axis=0)
        p_y = p_y_noisy.sum(axis=1, keepdims=True)
        channel = np.divide(p_y_noisy, p_y, out=np.zeros_like(p_y_noisy), where=p_y > 0)
        expected = p_xy[:, :, None] * channel[None, :, :]
        gap = float(np.max(np.abs(self.table - expected)))
        if gap > MARKOV_TOLERANCE:
            raise ConfigError(f"noisy label depends on x beyond the true label (max deviation {gap:.3g}); "
                              f"pass markov=False for instance-dependent noise")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.table.shape

    @property
    def support_x(self) -> int:
        return self.table.shape[0]

    @property
    def num_classes(self) -> int:
        return self.table.shape[1]

    @property
    def num_noisy(self) -> int:
        return self.table.shape[2]

    @property
    def p_y(self) -> np.ndarray:
        return self.table.sum(axis=(0, 2))

    @property
    def p_xy(self) -> np.ndarray:
        return self.table.sum(axis=2)

    def x_given_y(self) -> np.ndarray:
        """p(x | y) as an |X|×|Y| column-stochastic matrix"""
        p_y = self.p_y
        if np.any(p_y <= 0):
            raise CTRRError(f"classes {np.flatnonzero(p_y <= 0).tolist()} have zero probability")
        return self.p_xy / p_y[None, :]

    @classmethod
    def from_channel(cls, p_xy: np.ndarray, channel: np.ndarray) -> 'DiscreteJoint':
        """
        Markov joint from p(x, y) and a noise channel T[y, ỹ] = p(ỹ | y)
        """
        p_xy = np.asarray(p_xy, dtype=np.float64)
        channel = _stochastic_rows(channel, 'noise channel')
        if p_xy.ndim != 2 or channel.shape[0] != p_xy.shape[1]:
            raise ConfigError(f"p(x,y) {p_xy.shape} and channel {channel.shape} do not conform")
        return cls(p_xy[:, :, None] * channel[None, :, :])

    @classmethod
    def instance_dependent(cls, p_xy: np.ndarray, channel: np.ndarray) -> 'DiscreteJoint':
        """Joint from p(x, y) and T[x, y, ỹ] = p(ỹ | x, y)"""
        p_xy = np.asarray(p_xy, dtype=np.float64)
        channel = _stochastic_rows(channel, 'noise channel')
        if p_xy.ndim != 2 or channel.shape[:2] != p_xy.shape:
            raise ConfigError(f"p(x,y) {p_xy.shape} and channel {channel.shape} do not conform")
        return cls(p_xy[:, :, None] * channel, markov=False)

    def pair_table(self) -> np.ndarray:
        """p(x, x⁺, y, ỹ) = p(x, y, ỹ) · p(x⁺ | y)"""
        x_pos = self.x_given_y()
        return self.table[:, None, :, :] * x_pos[None, :, :, None]

    def to_dict(self) -> Dict:
        return {'shape': list(self.shape), 'table': self.table.ravel().tolist(), 'markov': self.markov}

    @classmethod
    def from_dict(cls, document: Dict) -> 'DiscreteJoint':
        try:
            table = np.asarray(document['table'], dtype=np.float64)
            if 'shape' in document:
                table = table.reshape([int(s) for s in document['shape']])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid joint document: {exc}") from exc
        return cls(table, markov=bool(document.get('markov', True)))


def _stochastic_rows(matrix: np.ndarray, what: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if np.any(matrix < 0) or not np.allclose(matrix.sum(axis=-1), 1.0, rtol=0.0, atol=1e-12):
        raise ConfigError(f"{what} rows must be probability vectors")
    return matrix


def positive_pair_joint(joint: DiscreteJoint) -> np.ndarray:
    """
    p(x, x⁺) = Σ_y p(y) p(x | y) p(x⁺ | y)

    X and X⁺ are conditionally independent given the class they share.

    Raises:
        CTRRError: some class has zero probability
    """
    x_given_y = joint.x_given_y()
    return (x_given_y * joint.p_y[None, :]) @ x_given_y.T


@dataclass(frozen=True)
class EpsilonGammaReport:
    epsilon: float
    gamma: float
    query: Optional[Tuple[float, float]] = None
    satisfied: Optional[bool] = None

    def satisfies(self, epsilon: float, gamma: float,
                  tolerance: float = TheoryDefaults.TOLERANCE) -> bool:
        """I(X;Y|X⁺) ≤ ε and I(X;Ỹ|X⁺) > γ"""
        return self.epsilon <= epsilon + tolerance and self.gamma > gamma

    def to_dict(self) -> Dict:
        return {'epsilon': self.epsilon, 'gamma': self.gamma,
                'query': list(self.query) if self.query else None, 'satisfied': self.satisfied}


def epsilon_gamma(joint: DiscreteJoint, epsilon: Optional[float] = None,
                  gamma: Optional[float] = None) -> EpsilonGammaReport:
    """
    ε = I(X; Y | X⁺) and γ = I(X; Ỹ | X⁺) on the positive-pair extension;
    `satisfied` is filled in when a query pair is given
    """
    pairs = joint.pair_table()
    eps = conditional_mutual_info(pairs, (0,), (2,), (1,))
    gam = conditional_mutual_info(pairs, (0,), (3,), (1,))
    report = EpsilonGammaReport(eps, gam)
    if epsilon is None and gamma is None:
        return report
    if epsilon is None or gamma is None:
        raise ConfigError("query both epsilon and gamma, or neither")
    return EpsilonGammaReport(eps, gam, (float(epsilon), float(gamma)), report.satisfies(epsilon, gamma))


@dataclass(frozen=True)
class RepresentationMap:
    """Deterministic map X → Z over the codomain {0, ..., m−1}"""
    table: Tuple[int, ...]
    codomain: int
    _onehot: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.codomain < 1:
            raise ConfigError(f"codomain size must be ≥ 1, got {self.codomain}")
        table = tuple(int(z) for z in self.table)
        if not table:
            raise ConfigError("representation map needs at least one input")
        if min(table) < 0 or max(table) >= self.codomain:
            raise ConfigError(f"map values must lie in [0, {self.codomain}), got {table}")
        object.__setattr__(self, 'table', table)
        onehot = np.zeros((len(table), self.codomain))
        onehot[np.arange(len(table)), table] = 1.0
        onehot.setflags(write=False)
        object.__setattr__(self, '_onehot', onehot)

    @classmethod
    def identity(cls, size: int) -> 'RepresentationMap':
        return cls(tuple(range(size)), size)

    @classmethod
    def constant(cls, size: int) -> 'RepresentationMap':
        return cls((0,) * size, 1)

    def push_forward(self, table: np.ndarray, axis: int = 0) -> np.ndarray:
        """Replace the X axis of `table` by Z, summing over each preimage"""
        table = np.moveaxis(np.asarray(table, dtype=np.float64), axis, -1)
        if table.shape[-1] != len(self.table):
            raise ConfigError(f"map covers {len(self.table)} inputs, table axis has {table.shape[-1]}")
        return np.moveaxis(table @ self._onehot, -1, axis)

    def to_dict(self) -> Dict:
        return {'table': list(self.table), 'codomain': self.codomain}


def representation_joint(joint: DiscreteJoint, zmap: RepresentationMap) -> np.ndarray:
    """p(z, y, ỹ)"""
    return zmap.push_forward(joint.table, axis=0)


def representation_info(joint: DiscreteJoint, zmap: RepresentationMap) -> Dict[str, float]:
    """I(Z; X⁺), I(Z; Y) and I(Z; Ỹ) of a map"""
    zyy = representation_joint(joint, zmap)
    return {
        'z_x_pos': mutual_info(zmap.push_forward(positive_pair_joint(joint), axis=0), (0,), (1,)),
        'z_y': mutual_info(zyy, (0,), (1,)),
        'z_y_noisy': mutual_info(zyy, (0,), (2,)),
    }


def label_info(joint: DiscreteJoint) -> Dict[str, float]:
    """I(X; Y), I(X; Ỹ) and I(X; X⁺)"""
    return {
        'x_y': mutual_info(joint.table, (0,), (1,)),
        'x_y_noisy': mutual_info(joint.table, (0,), (2,)),
        'x_x_pos': mutual_info(positive_pair_joint(joint), (0,), (1,)),
    }

