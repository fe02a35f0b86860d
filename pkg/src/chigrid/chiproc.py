import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateZeroVector, GridFinerThanMesh

logger = logging.getLogger(__name__)


class GridKind(enum.Enum):
    SPARSE = "sparse"
    PICKANDS = "pickands"
    DENSE = "dense"


@dataclass(frozen=True, eq=False)
class ChiPath:
    spec: object
    values: np.ndarray = field(repr=False)
    m: int


@dataclass(frozen=True)
class GridSpec:
    kind: GridKind
    D: float | None = None
    delta0: float = 1.0

    def __post_init__(self):
        if self.kind == GridKind.PICKANDS and not (self.D and self.D > 0):
            raise ValueError("a Pickands grid needs D > 0")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")

    def nominal_spacing(self, T, alpha):
        log_scale = 2.0 * math.log(T)
        if self.kind == GridKind.PICKANDS:
            return self.D * log_scale ** (-1.0 / alpha)
        if self.kind == GridKind.DENSE:
            return log_scale ** (-2.0 / alpha)
        return self.delta0

    def to_dict(self):
        data = {"kind": self.kind.value}
        if self.kind == GridKind.PICKANDS:
            data["D"] = self.D
        if self.kind == GridKind.SPARSE:
            data["delta0"] = self.delta0
        return data


@dataclass(frozen=True)
class GridSpacing:
    delta_used: float
    stride: int
    nominal: float


@dataclass(frozen=True)
class MaximaPair:
    m_cont: float
    m_grid: float
    delta_used: float
    T: float


def chi_path(chi_input):
    values = np.linalg.norm(chi_input.components, axis=0)
    return ChiPath(spec=chi_input.spec, values=values, m=chi_input.m)


def pickands_scale(T, alpha):
    """Correlation length (2 ln T)^(-1/alpha) of exceedance clusters."""
    return (2.0 * math.log(T)) ** (-1.0 / alpha)


def grid_spacing(grid, T, alpha, mesh):
    if not T > math.e:
        raise ValueError("T must exceed e so that ln T > 1, got %r" % T)
    nominal = grid.nominal_spacing(T, alpha)
    if nominal < mesh * (1 - 1e-9):
        raise GridFinerThanMesh(nominal, mesh)
    stride = max(1, int(round(nominal / mesh)))
    return GridSpacing(delta_used=stride * mesh, stride=stride, nominal=nominal)


def lattice_maxima(values, last_index, stride):
    """Maxima over lattice indices 0..last_index and over its multiples of stride."""
    window = values[: last_index + 1]
    return float(window.max()), float(window[::stride].max())


def maxima_pair(chi, grid, T, alpha, spacing=None):
    if spacing is None:
        spacing = grid_spacing(grid, T, alpha, chi.spec.mesh)
    last = chi.spec.last_index(T)
    m_cont, m_grid = lattice_maxima(chi.values, last, spacing.stride)
    return MaximaPair(
        m_cont=m_cont, m_grid=m_grid, delta_used=spacing.delta_used, T=T
    )


@dataclass(frozen=True, eq=False)
class SphereCheck:
    lhs: float
    rhs_max: float
    direction_values: np.ndarray = field(repr=False)


def sphere_oracle(chi_input, k, n_directions, rng):
    """
    Compare the chi value at lattice index k with inner products over the unit
    sphere: the direction X/|X| attains it, random directions stay below.
    """
    if n_directions < 1:
        raise ValueError("n_directions must be at least 1")
    x = chi_input.components[:, k]
    lhs = float(np.linalg.norm(x))
    if lhs == 0:
        raise DegenerateZeroVector("component vector vanishes at index %s" % k)
    directions = rng.standard_normal((n_directions, chi_input.m))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    direction_values = directions @ x
    attained = float(x @ (x / lhs))
    return SphereCheck(
        lhs=lhs,
        rhs_max=max(attained, float(direction_values.max())),
        direction_values=direction_values,
    )
