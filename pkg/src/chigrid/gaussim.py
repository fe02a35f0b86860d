"""
Exact synthesis of stationary Gaussian lattice paths.

Paths are drawn by circulant embedding: the covariance sequence r(kΔ) is
wrapped into a symmetric circulant whose eigenvalues (its discrete Fourier
transform) are the spectral weights of a Fourier synthesis. Fractional
Brownian motion is obtained by cumulating fractional Gaussian noise drawn the
same way.
"""

import enum
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft

from .exceptions import EmbeddingNotPSD
from .settings import CHIGRID_EMBEDDING_DOUBLINGS, CHIGRID_EMBEDDING_TOLERANCE

logger = logging.getLogger(__name__)


class CorrelationFamily(enum.Enum):
    EXP_POWER = "exp_power"
    STRONG_MIXTURE = "strong_mixture"


@dataclass(frozen=True)
class CorrelationModel:
    family: CorrelationFamily = CorrelationFamily.EXP_POWER
    alpha: float = 1.0
    r: float = 0.0
    T_horizon: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2], got %r" % self.alpha)
        if self.r < 0:
            raise ValueError("r must be nonnegative, got %r" % self.r)
        if self.family == CorrelationFamily.STRONG_MIXTURE:
            if self.T_horizon is None or self.T_horizon <= 1:
                raise ValueError("strong mixture needs T_horizon > 1")
            if self.rho >= 1:
                raise ValueError(
                    "r / ln(T_horizon) = %.4g must be below 1" % self.rho
                )

    @classmethod
    def exp_power(cls, alpha):
        return cls(family=CorrelationFamily.EXP_POWER, alpha=alpha)

    @classmethod
    def strong_mixture(cls, alpha, r, T_horizon):
        return cls(
            family=CorrelationFamily.STRONG_MIXTURE,
            alpha=alpha,
            r=r,
            T_horizon=T_horizon,
        )

    @property
    def rho(self):
        """Weight of the shared constant component, r / ln T."""
        if self.family == CorrelationFamily.EXP_POWER:
            return 0.0
        return self.r / math.log(self.T_horizon)

    @property
    def base(self):
        return CorrelationModel.exp_power(self.alpha)

    def __call__(self, t):
        return eval_correlation(self, t)


def eval_correlation(model, t):
    t = np.abs(np.asarray(t, dtype=float))
    value = np.exp(-(t**model.alpha))
    if model.family == CorrelationFamily.STRONG_MIXTURE:
        rho = model.rho
        value = (1.0 - rho) * value + rho
    if value.ndim == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class LatticeSpec:
    mesh: float
    n_points: int

    def __post_init__(self):
        if not self.mesh > 0:
            raise ValueError("mesh must be positive, got %r" % self.mesh)
        if self.n_points < 2:
            raise ValueError("a lattice needs at least two points")

    @classmethod
    def covering(cls, horizon, mesh):
        """Smallest lattice of the given mesh whose span reaches ``horizon``."""
        n_points = max(2, int(math.ceil(horizon / mesh - 1e-9)) + 1)
        if (n_points - 1) * mesh < horizon * (1 - 1e-12):
            n_points += 1
        return cls(mesh=mesh, n_points=n_points)

    @property
    def horizon(self):
        return (self.n_points - 1) * self.mesh

    @property
    def times(self):
        return np.arange(self.n_points) * self.mesh

    def last_index(self, T):
        """Index of the last lattice point in [0, T]."""
        if T > self.horizon * (1 + 1e-12):
            raise ValueError(
                "lattice covers [0, %.6g] but horizon %.6g was requested"
                % (self.horizon, T)
            )
        return min(self.n_points - 1, int(math.floor(T / self.mesh + 1e-9)))


@dataclass(frozen=True, eq=False)
class SpectralEmbedding:
    circulant_size: int
    eigenvalues: np.ndarray = field(repr=False)
    clipped_mass: float
    n_points: int

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)

    @functools.cached_property
    def scale(self):
        scale = np.sqrt(self.eigenvalues / self.circulant_size)
        scale.setflags(write=False)
        return scale


@dataclass(frozen=True, eq=False)
class LatticePath:
    spec: LatticeSpec
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class VectorChiInput:
    spec: LatticeSpec
    components: np.ndarray = field(repr=False)
    shared_z: np.ndarray | None = None

    @property
    def m(self):
        return self.components.shape[0]

    @property
    def paths(self):
        return [LatticePath(spec=self.spec, values=row) for row in self.components]


def _next_power_of_two(n):
    return 1 << max(1, (int(n) - 1).bit_length())


def embed_covariance(covariance, n_points, tolerance=None, doublings=None):
    """
    Embed the covariance sequence ``covariance(k)``, k = 0..n_points-1, in a
    nonnegative definite circulant.

    ``covariance`` receives an integer lag array. The circulant size starts at
    the smallest power of two not below 2(n_points - 1) and is doubled when
    the clipped negative mass is too large.
    """
    if tolerance is None:
        tolerance = CHIGRID_EMBEDDING_TOLERANCE
    if doublings is None:
        doublings = CHIGRID_EMBEDDING_DOUBLINGS

    size = max(2, _next_power_of_two(2 * (n_points - 1)))
    for _attempt in range(doublings + 1):
        lags = np.arange(size)
        lags = np.minimum(lags, size - lags)
        row = covariance(lags)
        eigenvalues = sp_fft.fft(row).real
        negative = eigenvalues < 0
        clipped_mass = float(-eigenvalues[negative].sum())
        total = float(np.abs(eigenvalues).sum())
        ratio = clipped_mass / total if total > 0 else 0.0
        if ratio <= tolerance:
            if clipped_mass > 0:
                logger.debug(
                    "Clipped negative eigenvalue mass %.3g in circulant of size %s",
                    clipped_mass,
                    size,
                )
            eigenvalues = np.where(negative, 0.0, eigenvalues)
            return SpectralEmbedding(
                circulant_size=size,
                eigenvalues=eigenvalues,
                clipped_mass=clipped_mass,
                n_points=n_points,
            )
        logger.info(
            "Circulant of size %s not PSD (relative mass %.3g), doubling",
            size,
            ratio,
        )
        size *= 2
    raise EmbeddingNotPSD(ratio, size // 2)


def build_embedding(model, spec, tolerance=None, doublings=None):
    def covariance(lags):
        return eval_correlation(model, lags * spec.mesh)

    return embed_covariance(
        covariance, spec.n_points, tolerance=tolerance, doublings=doublings
    )


def _draw_noise(embedding, rng, count):
    size = embedding.circulant_size
    real = rng.standard_normal((count, size))
    imag = rng.standard_normal((count, size))
    return real + 1j * imag


def _synthesize(embedding, noise, n_points):
    field_ = sp_fft.fft(noise * embedding.scale, axis=-1)
    return np.ascontiguousarray(field_.real[:, :n_points])


def sample_paths(embedding, spec, rng, count):
    """Draw ``count`` independent paths from one stream, shape (count, n)."""
    if embedding.n_points < spec.n_points:
        raise ValueError("embedding was built for a shorter lattice")
    noise = _draw_noise(embedding, rng, count)
    return _synthesize(embedding, noise, spec.n_points)


def sample_path(embedding, spec, rng):
    values = sample_paths(embedding, spec, rng, 1)[0]
    return LatticePath(spec=spec, values=values)


def sample_vector_chi_input(model, spec, m, rng, embedding=None):
    """
    Draw the m components of the vector process.

    For the strong mixture the components are sqrt(1 - rho) Y_i + sqrt(rho) Z_i
    with Y_i exponential-power paths and Z_i standard normals drawn after the
    paths. ``embedding`` must then be built for ``model.base``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if embedding is None:
        embedding = build_embedding(model.base, spec)
    components = sample_paths(embedding, spec, rng, m)
    shared_z = None
    if model.family == CorrelationFamily.STRONG_MIXTURE:
        rho = model.rho
        shared_z = rng.standard_normal(m)
        components = (
            math.sqrt(1.0 - rho) * components + math.sqrt(rho) * shared_z[:, None]
        )
    return VectorChiInput(spec=spec, components=components, shared_z=shared_z)


def fgn_covariance(hurst):
    two_h = 2.0 * hurst

    def covariance(lags):
        k = np.asarray(lags, dtype=float)
        return 0.5 * (
            np.abs(k + 1) ** two_h - 2 * np.abs(k) ** two_h + np.abs(k - 1) ** two_h
        )

    return covariance


@functools.lru_cache(maxsize=32)
def fgn_embedding(hurst, n_increments):
    return embed_covariance(fgn_covariance(hurst), max(2, n_increments))


def _check_hurst(hurst):
    if not 0 < hurst <= 1:
        raise ValueError("hurst must lie in (0, 1], got %r" % hurst)


def sample_fbm_batch(hurst, n_points, mesh, rngs):
    """
    One fractional Brownian motion path per stream on the lattice kΔ.

    For hurst = 1 each stream draws a single standard normal Z and the path
    is the line t·Z.
    """
    _check_hurst(hurst)
    spec = LatticeSpec(mesh=mesh, n_points=n_points)
    if hurst == 1:
        slopes = np.array([rng.standard_normal() for rng in rngs])
        return slopes[:, None] * spec.times[None, :]

    embedding = fgn_embedding(hurst, n_points - 1)
    noise = np.concatenate([_draw_noise(embedding, rng, 1) for rng in rngs])
    increments = _synthesize(embedding, noise, n_points - 1)
    paths = np.zeros((len(rngs), n_points))
    np.cumsum(increments, axis=1, out=paths[:, 1:])
    paths *= mesh**hurst
    return paths


def sample_fbm(hurst, n_points, mesh, rng):
    values = sample_fbm_batch(hurst, n_points, mesh, [rng])[0]
    return LatticePath(spec=LatticeSpec(mesh=mesh, n_points=n_points), values=values)
