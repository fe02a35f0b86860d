"""
Monte Carlo estimation of Pickands-type constants.

Two estimators are available for every constant:

``window``
    the defining mean E exp(max over [0, lambda] of B*(t)) / lambda, where
    B*(t) = sqrt(2) B_{alpha/2}(t) - t^alpha. Its mass sits on rare large
    maxima, so for large windows it needs very many replications.

``normalized``
    E[max e^W / (mesh * sum over the lattice of e^W)] on the two-sided window
    [-lambda, lambda], with W the re-centered drifted fBm. The ratio is
    bounded by 1/mesh. Grid constants average the grid maximum over all
    D/mesh phases of the grid on the lattice.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate, special, stats

from .gaussim import LatticeSpec, sample_fbm_batch
from .streams import PICKANDS_DOMAIN, chunk_ranges, derive_streams

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
MIN_REPLICATIONS = 100
PICKANDS_CHUNK = 128
TAIL_QUANTILE = 0.999
# share of the sum carried by draws above the tail quantile that marks a run
UNSTABLE_TAIL_SHARE = 0.25
ORACLE_Z_LIMIT = 10.0


class EstimateKind(enum.Enum):
    CONTINUOUS = "continuous"
    GRID = "grid"
    TWO_INDEX = "two_index"


class EstimatorMethod(enum.Enum):
    WINDOW = "window"
    NORMALIZED = "normalized"


def default_window(alpha):
    """(lambda, mesh) used when a caller gives neither."""
    if alpha <= 1:
        return 50.0, 0.02
    return 20.0, 0.01


@dataclass(frozen=True)
class DriftedFieldSample:
    lambda_: float
    mesh: float
    cont_max: float
    grid_max: float


@dataclass(frozen=True)
class PickandsEstimate:
    value: float
    stderr: float
    lambda_: float
    mesh: float
    n_rep: int
    kind: EstimateKind
    method: EstimatorMethod = EstimatorMethod.NORMALIZED
    D: float | None = None
    quantile_999: float | None = None
    tail_share: float | None = None

    @property
    def unstable(self):
        return self.tail_share is not None and self.tail_share > UNSTABLE_TAIL_SHARE

    def to_dict(self):
        return {
            "value": self.value,
            "stderr": self.stderr,
            "lambda": self.lambda_,
            "mesh": self.mesh,
            "n_rep": self.n_rep,
            "kind": self.kind.value,
            "method": self.method.value,
            "D": self.D,
            "quantile_999": self.quantile_999,
            "tail_share": self.tail_share,
        }


@dataclass(frozen=True)
class PickandsConstants:
    H_alpha: PickandsEstimate
    H_D_alpha: PickandsEstimate | None
    pickands_terms: dict = field(default_factory=dict)
    term_stderr: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "H_alpha": self.H_alpha.to_dict(),
            "H_D_alpha": self.H_D_alpha.to_dict() if self.H_D_alpha else None,
            "pickands_term": [
                {"x": x, "y": y, "value": value, "stderr": self.term_stderr[(x, y)]}
                for (x, y), value in self.pickands_terms.items()
            ],
        }


def grid_stride(D, mesh):
    if D < mesh * (1 - 1e-9):
        raise ValueError("grid spacing D=%r is finer than the mesh %r" % (D, mesh))
    return max(1, int(round(D / mesh)))


def _check_arguments(alpha, lambda_, mesh):
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2], got %r" % alpha)
    if not 0 < mesh < lambda_:
        raise ValueError("need 0 < mesh < lambda")


def drifted_field_batch(alpha, n_points, mesh, rngs, origin=0):
    """
    Paths of sqrt(2) B(t) - |t|^alpha on the lattice t = (k - origin) * mesh.

    With ``origin`` > 0 the fBm is re-centered at that index, which yields a
    two-sided fBm by stationarity of increments.
    """
    paths = sample_fbm_batch(alpha / 2.0, n_points, mesh, rngs)
    if origin:
        paths -= paths[:, origin : origin + 1]
    times = (np.arange(n_points) - origin) * mesh
    return SQRT2 * paths - np.abs(times) ** alpha


def sample_drifted_field(alpha, lambda_, mesh, D, rng):
    _check_arguments(alpha, lambda_, mesh)
    stride = grid_stride(D, mesh)
    spec = LatticeSpec.covering(lambda_, mesh)
    field_ = drifted_field_batch(alpha, spec.n_points, mesh, [rng])[0]
    window = field_[: spec.last_index(lambda_) + 1]
    return DriftedFieldSample(
        lambda_=lambda_,
        mesh=mesh,
        cont_max=float(window.max()),
        grid_max=float(window[::stride].max()),
    )


def _window_chunk(alpha, lambda_, mesh, stride, seed, extra, start, stop):
    """Continuous and grid maxima over [0, lambda] plus ``extra`` normals."""
    spec = LatticeSpec.covering(lambda_, mesh)
    rngs = derive_streams(seed, start, stop, domain=PICKANDS_DOMAIN)
    fields = drifted_field_batch(alpha, spec.n_points, mesh, rngs)
    fields = fields[:, : spec.last_index(lambda_) + 1]
    normals = np.array([rng.standard_normal(extra) for rng in rngs])
    return fields.max(axis=1), fields[:, ::stride].max(axis=1), normals


def _half_width(lambda_, mesh):
    return LatticeSpec.covering(lambda_, mesh).n_points - 1


def _residue_maxima(fields, stride):
    """Maximum over each residue class of the lattice index modulo stride."""
    count, n_points = fields.shape
    padded = -(-n_points // stride) * stride
    if padded != n_points:
        filler = np.full((count, padded - n_points), -np.inf)
        fields = np.concatenate([fields, filler], axis=1)
    return fields.reshape(count, -1, stride).max(axis=1)


def _normalized_chunk(alpha, lambda_, mesh, stride, seed, start, stop):
    """Per draw: lattice max, residue maxima, log of mesh * sum of e^W."""
    half = _half_width(lambda_, mesh)
    rngs = derive_streams(seed, start, stop, domain=PICKANDS_DOMAIN)
    fields = drifted_field_batch(alpha, 2 * half + 1, mesh, rngs, origin=half)
    log_mass = special.logsumexp(fields, axis=1) + math.log(mesh)
    return fields.max(axis=1), _residue_maxima(fields, stride), log_mass


def _run_chunks(func, n_rep, workers, *args):
    chunks = chunk_ranges(n_rep, PICKANDS_CHUNK)
    results = Parallel(n_jobs=workers or 1)(
        delayed(func)(*args, start, stop) for start, stop in chunks
    )
    return [np.concatenate(parts) for parts in zip(*results, strict=True)]


def _summarize(contributions, scale=1.0):
    contributions = np.asarray(contributions, dtype=float)
    n = contributions.size
    mean = float(contributions.mean())
    stderr = float(contributions.std(ddof=1) / math.sqrt(n))
    quantile = float(np.quantile(contributions, TAIL_QUANTILE))
    total = float(contributions.sum())
    tail_share = (
        float(contributions[contributions > quantile].sum() / total) if total else 0.0
    )
    return mean / scale, stderr / scale, quantile, tail_share


def _estimate(contributions, kind, method, lambda_, mesh, D=None, scale=1.0):
    value, stderr, quantile, tail_share = _summarize(contributions, scale=scale)
    estimate = PickandsEstimate(
        value=value,
        stderr=stderr,
        lambda_=lambda_,
        mesh=mesh,
        n_rep=int(np.size(contributions)),
        kind=kind,
        method=method,
        D=D,
        quantile_999=quantile,
        tail_share=tail_share,
    )
    if estimate.unstable:
        logger.warning(
            "Unstable %s estimate (%s): %.0f%% of the mass above the %.3f quantile",
            kind.value,
            method.value,
            100 * tail_share,
            TAIL_QUANTILE,
        )
    return estimate


def _check_replications(n_rep):
    if n_rep < MIN_REPLICATIONS:
        raise ValueError("need at least %s replications" % MIN_REPLICATIONS)


def estimate_H(
    alpha,
    lambda_,
    mesh,
    n_rep,
    D=None,
    seed=0,
    method=EstimatorMethod.NORMALIZED,
    workers=1,
):
    """
    Estimate H_alpha (``D`` absent) or H_{D,alpha}.

    Replication i uses the stream derived from (seed, i), so estimates with
    equal seeds share their fBm draws across D and kinds.
    """
    _check_arguments(alpha, lambda_, mesh)
    _check_replications(n_rep)
    method = EstimatorMethod(method)
    stride = 1 if D is None else grid_stride(D, mesh)
    kind = EstimateKind.CONTINUOUS if D is None else EstimateKind.GRID

    if method == EstimatorMethod.WINDOW:
        cont_max, grid_max, _normals = _run_chunks(
            _window_chunk, n_rep, workers, alpha, lambda_, mesh, stride, seed, 0
        )
        maxima = cont_max if D is None else grid_max
        return _estimate(
            np.exp(maxima), kind, method, lambda_, mesh, D=D, scale=lambda_
        )

    cont_max, residue_max, log_mass = _run_chunks(
        _normalized_chunk, n_rep, workers, alpha, lambda_, mesh, stride, seed
    )
    if D is None:
        contributions = np.exp(cont_max - log_mass)
    else:
        contributions = np.exp(residue_max - log_mass[:, None]).mean(axis=1)
    return _estimate(contributions, kind, method, lambda_, mesh, D=D)


def estimate_window_bias(alpha, estimate, seed=0, workers=1):
    """
    Re-estimate a continuous constant at half its window with the same
    streams. The gap between the two finite-window values stands in for
    the bias against the lambda -> infinity limit; nothing is extrapolated.
    """
    half_lambda = estimate.lambda_ / 2.0
    if half_lambda <= estimate.mesh:
        return None
    half = estimate_H(
        alpha,
        half_lambda,
        estimate.mesh,
        estimate.n_rep,
        seed=seed,
        method=estimate.method,
        workers=workers,
    )
    return {
        "lambda": estimate.lambda_,
        "value": estimate.value,
        "half_lambda": half_lambda,
        "half_value": half.value,
        "half_stderr": half.stderr,
        "difference": estimate.value - half.value,
    }


def level_integral(A, B, x, y):
    """
    Closed form of the integral over s of e^s 1{A > s + x, B > s + y}.
    """
    return np.exp(np.minimum(A - x, B - y))


def alpha2_component_max(z, lambda_):
    """Maximum over [0, lambda] of sqrt(2) t z - t^2."""
    z = np.asarray(z, dtype=float)
    vertex = z / SQRT2
    return np.where(
        z <= 0,
        0.0,
        np.where(vertex <= lambda_, z * z / 2.0, SQRT2 * lambda_ * z - lambda_**2),
    )


def estimate_two_index(
    x,
    y,
    alpha,
    m,
    D,
    lambda_,
    mesh,
    n_rep,
    seed=0,
    method=EstimatorMethod.NORMALIZED,
    workers=1,
):
    """
    Estimate the two-index constant H^{x,y}_{D,alpha_0} with
    alpha_0 = (alpha, 2, ..., 2).

    The m-parameter field is a sum of independent coordinates, so its box
    maximum is the sum of coordinate maxima and only the first coordinate is
    restricted to the grid. The window estimator averages
    exp(min(M_cont - x, M_grid - y) + S) / lambda^m with S the (m - 1)
    closed-form maxima of the alpha = 2 coordinates. The normalized
    estimator estimates the one-coordinate constant and divides by
    pi^((m - 1) / 2), the limit of the alpha = 2 factors.
    """
    _check_arguments(alpha, lambda_, mesh)
    _check_replications(n_rep)
    if m < 1:
        raise ValueError("m must be at least 1")
    method = EstimatorMethod(method)
    stride = grid_stride(D, mesh)

    if method == EstimatorMethod.WINDOW:
        cont_max, grid_max, normals = _run_chunks(
            _window_chunk, n_rep, workers, alpha, lambda_, mesh, stride, seed, m - 1
        )
        normals = normals.reshape(n_rep, m - 1)
        extra = alpha2_component_max(normals, lambda_).sum(axis=1)
        contributions = level_integral(cont_max, grid_max, x, y) * np.exp(extra)
        return _estimate(
            contributions,
            EstimateKind.TWO_INDEX,
            method,
            lambda_,
            mesh,
            D=D,
            scale=lambda_**m,
        )

    cont_max, residue_max, log_mass = _run_chunks(
        _normalized_chunk, n_rep, workers, alpha, lambda_, mesh, stride, seed
    )
    contributions = _normalized_two_index(cont_max, residue_max, log_mass, x, y)
    return _estimate(
        contributions,
        EstimateKind.TWO_INDEX,
        method,
        lambda_,
        mesh,
        D=D,
        scale=math.pi ** ((m - 1) / 2.0),
    )


def _normalized_two_index(cont_max, residue_max, log_mass, x, y):
    levels = np.minimum(cont_max[:, None] - x, residue_max - y)
    return np.exp(levels - log_mass[:, None]).mean(axis=1)


def estimate_pickands_constants(
    alpha,
    mesh,
    lambda_,
    n_rep,
    m=1,
    D=None,
    eval_points=(),
    seed=0,
    method=EstimatorMethod.NORMALIZED,
    workers=1,
):
    """
    H_alpha, H_{D,alpha} and the Pickands grid term
    C(x, y) = pi^((m - 1) / 2) H^{ln H_alpha + x, ln H_{D,alpha} + y}
    at every eval point, all from one set of draws.
    """
    _check_arguments(alpha, lambda_, mesh)
    _check_replications(n_rep)
    method = EstimatorMethod(method)
    stride = 1 if D is None else grid_stride(D, mesh)
    logger.info(
        "Estimating Pickands constants alpha=%s D=%s lambda=%s mesh=%s n_rep=%s (%s)",
        alpha,
        D,
        lambda_,
        mesh,
        n_rep,
        method.value,
    )

    if method == EstimatorMethod.WINDOW:
        cont_max, grid_max, normals = _run_chunks(
            _window_chunk, n_rep, workers, alpha, lambda_, mesh, stride, seed, m - 1
        )
        H_alpha = _estimate(
            np.exp(cont_max),
            EstimateKind.CONTINUOUS,
            method,
            lambda_,
            mesh,
            scale=lambda_,
        )
        if D is None:
            return PickandsConstants(H_alpha=H_alpha, H_D_alpha=None)
        H_D_alpha = _estimate(
            np.exp(grid_max),
            EstimateKind.GRID,
            method,
            lambda_,
            mesh,
            D=D,
            scale=lambda_,
        )
        extra = alpha2_component_max(normals.reshape(n_rep, m - 1), lambda_).sum(axis=1)

        def term_contributions(x, y):
            return level_integral(
                cont_max - math.log(H_alpha.value),
                grid_max - math.log(H_D_alpha.value),
                x,
                y,
            ) * np.exp(extra)

        term_scale = lambda_**m / math.pi ** ((m - 1) / 2.0)
    else:
        cont_max, residue_max, log_mass = _run_chunks(
            _normalized_chunk, n_rep, workers, alpha, lambda_, mesh, stride, seed
        )
        H_alpha = _estimate(
            np.exp(cont_max - log_mass),
            EstimateKind.CONTINUOUS,
            method,
            lambda_,
            mesh,
        )
        if D is None:
            return PickandsConstants(H_alpha=H_alpha, H_D_alpha=None)
        H_D_alpha = _estimate(
            np.exp(residue_max - log_mass[:, None]).mean(axis=1),
            EstimateKind.GRID,
            method,
            lambda_,
            mesh,
            D=D,
        )

        def term_contributions(x, y):
            return _normalized_two_index(
                cont_max - math.log(H_alpha.value),
                residue_max - math.log(H_D_alpha.value),
                log_mass,
                x,
                y,
            )

        term_scale = 1.0

    terms = {}
    term_stderr = {}
    for x, y in eval_points:
        value, stderr, _quantile, _share = _summarize(
            term_contributions(x, y), scale=term_scale
        )
        terms[(float(x), float(y))] = value
        term_stderr[(float(x), float(y))] = stderr
    return PickandsConstants(
        H_alpha=H_alpha,
        H_D_alpha=H_D_alpha,
        pickands_terms=terms,
        term_stderr=term_stderr,
    )


def alpha2_window_oracle(lambda_, spacing):
    """
    Exact E exp(max_k sqrt(2) t_k Z - t_k^2) / lambda over t_k = k * spacing in
    [0, lambda].

    The maximum is attained at t_k on the Z-interval between the midpoints
    (t_{k-1} + t_k) / sqrt(2) and (t_k + t_{k+1}) / sqrt(2); there the
    integrand phi(z) e^{sqrt(2) t_k z - t_k^2} is the normal density shifted
    by sqrt(2) t_k.
    """
    last = int(math.floor(lambda_ / spacing + 1e-9))
    points = np.arange(last + 1) * spacing
    bounds = np.concatenate([[-np.inf], (points[:-1] + points[1:]) / SQRT2, [np.inf]])
    shift = SQRT2 * points
    mass = stats.norm.cdf(bounds[1:] - shift) - stats.norm.cdf(bounds[:-1] - shift)
    return float(mass.sum()) / lambda_


def alpha2_normalized_oracle(lambda_, mesh, stride=1):
    """
    The normalized estimator's expectation for alpha = 2 by quadrature over
    the single normal variable driving the degenerate fBm.
    """
    half = _half_width(lambda_, mesh)
    times = (np.arange(2 * half + 1) - half) * mesh
    log_mesh = math.log(mesh)

    def integrand(z):
        fields = (SQRT2 * times * z - times * times)[None, :]
        log_mass = special.logsumexp(fields) + log_mesh
        if stride == 1:
            ratio = math.exp(fields.max() - log_mass)
        else:
            ratio = float(np.exp(_residue_maxima(fields, stride) - log_mass).mean())
        return ratio * stats.norm.pdf(z)

    value, _error = integrate.quad(
        integrand, -ORACLE_Z_LIMIT, ORACLE_Z_LIMIT, limit=400, epsabs=1e-10
    )
    return value
