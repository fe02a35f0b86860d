import dataclasses
import functools
import logging
import time
from dataclasses import dataclass, field

from django.core.exceptions import ValidationError
from django.utils import timezone

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .chiproc import GridKind, chi_path, grid_spacing, maxima_pair, pickands_scale
from .config import ConstantsSource, config_from_dict
from .exceptions import ChiGridError
from .gaussim import LatticeSpec, build_embedding, sample_vector_chi_input
from .pickands import estimate_pickands_constants, estimate_window_bias
from .settings import CHIGRID_REPLICATION_CHUNK, CHIGRID_WORKERS
from .streams import chunk_ranges, derive_stream
from .theory import LimitSpec, limit_joint, limit_marginal_cdf, norm_constants

logger = logging.getLogger(__name__)

# Targets for desk-scale runs (T = 500, 2000 replications). The marginal KS
# meets them; a sparse grid at delta = 1 keeps a joint distance near 0.1 there
# because its spacing is only about 12 cluster lengths.
SUP_DISTANCE_TOLERANCE = 0.08
MARGINAL_KS_TOLERANCE = 0.08


@dataclass(frozen=True)
class NormalizedPair:
    norm_cont: float
    norm_grid: float


@dataclass(frozen=True)
class ReplicationResult:
    index: int
    pair: object
    normalized: NormalizedPair


@dataclass(frozen=True)
class ExperimentConstants:
    H_alpha: float
    H_D_alpha: float | None = None
    pickands_terms: dict = field(default_factory=dict)
    source: ConstantsSource = ConstantsSource.PROVIDED
    estimates: object = None
    window_bias: dict | None = None

    def to_dict(self):
        data = {
            "source": self.source.value,
            "H_alpha": self.H_alpha,
            "H_D_alpha": self.H_D_alpha,
            "pickands_term": [
                {"x": x, "y": y, "value": value}
                for (x, y), value in self.pickands_terms.items()
            ],
        }
        if self.estimates is not None:
            data["estimates"] = self.estimates.to_dict()
        if self.window_bias is not None:
            data["window_bias"] = self.window_bias
        return data


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    eval_points: tuple
    empirical: np.ndarray
    theoretical: np.ndarray
    per_point: np.ndarray
    sup_distance: float
    marginal_ks_cont: float
    marginal_ks_grid: float
    n_samples: int = 0
    marginal_ks_sphere: float | None = None
    results: tuple = ()
    metadata: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)

    @property
    def within_tolerance(self):
        return (
            self.sup_distance <= SUP_DISTANCE_TOLERANCE
            and self.marginal_ks_cont <= MARGINAL_KS_TOLERANCE
        )


def replication_lattice(config):
    return LatticeSpec.covering(config.T, config.mesh)


def replication_spacing(config, spec):
    return grid_spacing(config.grid, config.T, config.alpha, spec.mesh)


def simulate_replication(config, index, embedding=None):
    """One replication: the vector input, its chi path and the maxima pair."""
    spec = replication_lattice(config)
    spacing = replication_spacing(config, spec)
    model = config.correlation_model
    if embedding is None:
        embedding = build_embedding(model.base, spec)
    rng = derive_stream(config.master_seed, index)
    chi_input = sample_vector_chi_input(model, spec, config.m, rng, embedding=embedding)
    chi = chi_path(chi_input)
    pair = maxima_pair(chi, config.grid, config.T, config.alpha, spacing=spacing)
    return chi_input, chi, pair


def _replication_chunk(config, embedding, start, stop):
    return [
        simulate_replication(config, index, embedding=embedding)[2]
        for index in range(start, stop)
    ]


def run_replications(config, workers=None):
    """Maxima pairs for replications 0..n_rep-1, in index order."""
    workers = workers or CHIGRID_WORKERS
    spec = replication_lattice(config)
    embedding = build_embedding(config.correlation_model.base, spec)
    logger.info(
        "Running %s replications on %s lattice points (circulant %s) with %s workers",
        config.n_rep,
        spec.n_points,
        embedding.circulant_size,
        workers,
    )
    chunks = chunk_ranges(config.n_rep, CHIGRID_REPLICATION_CHUNK)
    batches = Parallel(n_jobs=workers)(
        delayed(_replication_chunk)(config, embedding, start, stop)
        for start, stop in chunks
    )
    return [pair for batch in batches for pair in batch]


def resolve_constants(config, spacing, workers=None):
    """
    Pickands constants for the normalization and the Pickands grid limit.

    Estimated constants are matched to the simulation lattice: the mesh
    eta * (2 ln T)^(-1/alpha) is a Pickands grid of spacing eta, so H_alpha
    is estimated with mesh eta and H_{D,alpha} with D = stride * eta.
    """
    settings = config.constants
    is_pickands = config.grid.kind == GridKind.PICKANDS
    if settings.source == ConstantsSource.PROVIDED:
        return ExperimentConstants(
            H_alpha=settings.H_alpha,
            H_D_alpha=settings.H_D_alpha if is_pickands else None,
            pickands_terms=dict(settings.pickands_term or {}),
            source=ConstantsSource.PROVIDED,
        )

    D = spacing.stride * config.eta if is_pickands else None
    estimates = estimate_pickands_constants(
        config.alpha,
        mesh=config.eta,
        lambda_=settings.lambda_,
        n_rep=settings.n_rep,
        m=config.m,
        D=D,
        eval_points=config.eval_points if is_pickands else (),
        seed=config.master_seed,
        method=settings.method,
        workers=workers or CHIGRID_WORKERS,
    )
    window_bias = estimate_window_bias(
        config.alpha,
        estimates.H_alpha,
        seed=config.master_seed,
        workers=workers or CHIGRID_WORKERS,
    )
    logger.info(
        "Estimated H_alpha=%.6g (stderr %.2g), H_D_alpha=%s",
        estimates.H_alpha.value,
        estimates.H_alpha.stderr,
        estimates.H_D_alpha.value if estimates.H_D_alpha else None,
    )
    return ExperimentConstants(
        H_alpha=estimates.H_alpha.value,
        H_D_alpha=estimates.H_D_alpha.value if estimates.H_D_alpha else None,
        pickands_terms=dict(estimates.pickands_terms),
        source=ConstantsSource.ESTIMATE,
        estimates=estimates,
        window_bias=window_bias,
    )


def experiment_norm_constants(config, constants, spacing):
    return norm_constants(
        config.T,
        config.m,
        config.alpha,
        config.grid.kind,
        constants.H_alpha,
        H_D_alpha=constants.H_D_alpha,
        delta=spacing.delta_used,
    )


def normalize_pairs(pairs, norm):
    results = []
    for index, pair in enumerate(pairs):
        norm_cont, norm_grid = norm.normalize(pair.m_cont, pair.m_grid)
        results.append(
            ReplicationResult(
                index=index,
                pair=pair,
                normalized=NormalizedPair(norm_cont=norm_cont, norm_grid=norm_grid),
            )
        )
    return results


def _as_sample_array(samples):
    rows = [
        (s.norm_cont, s.norm_grid) if isinstance(s, NormalizedPair) else tuple(s)
        for s in samples
    ]
    return np.asarray(rows, dtype=float).reshape(-1, 2)


def empirical_joint_cdf(samples, eval_points):
    """Fraction of samples with both coordinates at or below each eval point."""
    values = _as_sample_array(samples)
    if not len(values):
        raise ValueError("need at least one sample")
    points = np.asarray(eval_points, dtype=float).reshape(-1, 2)
    below = (values[:, None, 0] <= points[None, :, 0]) & (
        values[:, None, 1] <= points[None, :, 1]
    )
    return below.mean(axis=0)


def theoretical_cdf(config, constants):
    spec = LimitSpec(
        m=config.m,
        r=config.r,
        grid_kind=config.grid.kind,
        pickands_terms=constants.pickands_terms,
    )
    return np.array([limit_joint(x, y, spec) for x, y in config.eval_points])


def marginal_ks(values, r, m, sphere=False):
    """KS distance of a sample against the mixed Gumbel law."""
    cdf = functools.partial(limit_marginal_cdf, r=r, m=m, sphere=sphere)
    result = stats.kstest(np.asarray(values), cdf)
    return float(result.statistic)


def two_sample_ks(first, second):
    """(statistic, p-value) of the two-sample KS test."""
    result = stats.ks_2samp(np.asarray(first), np.asarray(second))
    return float(result.statistic), float(result.pvalue)


def compare(samples, config, constants, results=(), metadata=None, runtime=None):
    values = _as_sample_array(samples)
    empirical = empirical_joint_cdf(values, config.eval_points)
    theoretical = theoretical_cdf(config, constants)
    per_point = empirical - theoretical
    return ComparisonReport(
        eval_points=tuple(config.eval_points),
        empirical=empirical,
        theoretical=theoretical,
        per_point=per_point,
        sup_distance=float(np.abs(per_point).max()),
        marginal_ks_cont=marginal_ks(values[:, 0], config.r, config.m),
        marginal_ks_grid=marginal_ks(values[:, 1], config.r, config.m),
        marginal_ks_sphere=(
            marginal_ks(values[:, 0], config.r, config.m, sphere=True)
            if config.r > 0
            else None
        ),
        n_samples=len(values),
        results=tuple(results),
        metadata=metadata or {},
        runtime=runtime or {},
    )


def run_experiment(config, workers=None):
    """
    Full pipeline: constants, replications, normalization and comparison with
    the limiting joint CDF. Nothing is returned unless every step succeeds.
    """
    started = time.perf_counter()
    spec = replication_lattice(config)
    spacing = replication_spacing(config, spec)
    logger.info(
        "Experiment m=%s alpha=%s r=%s T=%s grid=%s: mesh %.4g, grid stride %s",
        config.m,
        config.alpha,
        config.r,
        config.T,
        config.grid.kind.value,
        spec.mesh,
        spacing.stride,
    )

    constants = resolve_constants(config, spacing, workers=workers)
    constants_done = time.perf_counter()
    norm = experiment_norm_constants(config, constants, spacing)

    pairs = run_replications(config, workers=workers)
    replications_done = time.perf_counter()
    results = normalize_pairs(pairs, norm)
    scale = pickands_scale(config.T, config.alpha)

    metadata = {
        "config": config.to_dict(),
        "master_seed": config.master_seed,
        "mesh": spec.mesh,
        "n_points": spec.n_points,
        "delta_used": spacing.delta_used,
        "delta_nominal": spacing.nominal,
        "stride": spacing.stride,
        "pickands_scale": scale,
        "cluster_spacing": spacing.delta_used / scale,
        "normalization": {
            "a_T": norm.a_T,
            "b_T": norm.b_T,
            "b_delta_T": norm.b_delta_T,
        },
        "constants": constants.to_dict(),
        "tolerances": {
            "sup_distance": SUP_DISTANCE_TOLERANCE,
            "marginal_ks": MARGINAL_KS_TOLERANCE,
            "calibration": "empirical; joint distance shrinks as cluster_spacing grows",
        },
    }
    report = compare(
        [result.normalized for result in results],
        config,
        constants,
        results=results,
        metadata=metadata,
    )
    finished = time.perf_counter()
    runtime = {
        "constants_seconds": constants_done - started,
        "replications_seconds": replications_done - constants_done,
        "total_seconds": finished - started,
    }
    logger.info(
        "Experiment done: sup distance %.4f, KS %.4f / %.4f in %.1fs",
        report.sup_distance,
        report.marginal_ks_cont,
        report.marginal_ks_grid,
        runtime["total_seconds"],
    )
    return dataclasses.replace(report, runtime=runtime)


def run_recorded_experiment(experiment, workers=None, force=False):
    from .models import Experiment
    from .outputs import summary_dict, write_outputs

    experiment.status = Experiment.Status.RUNNING
    experiment.error = ""
    experiment.save(update_fields=["status", "error"])
    try:
        config = config_from_dict(experiment.config)
        report = run_experiment(config, workers=workers)
        if experiment.output_dir:
            write_outputs(report, experiment.output_dir, force=force)
    except (ChiGridError, ValidationError, ValueError, OSError) as e:
        logger.exception("Experiment %s failed", experiment.pk)
        experiment.status = Experiment.Status.FAILED
        experiment.error = str(e)
        experiment.finished_at = timezone.now()
        experiment.save(update_fields=["status", "error", "finished_at"])
        raise
    experiment.summary = summary_dict(report)
    experiment.status = Experiment.Status.DONE
    experiment.finished_at = timezone.now()
    experiment.save(update_fields=["summary", "status", "finished_at"])
    return report
