import math

import numpy as np
import pytest
from joblib import parallel_config

from chigrid.config import ConstantsSource, config_from_dict
from chigrid.exceptions import GridFinerThanMesh
from chigrid.models import Experiment
from chigrid.services import (
    NormalizedPair,
    compare,
    empirical_joint_cdf,
    marginal_ks,
    replication_lattice,
    replication_spacing,
    resolve_constants,
    run_experiment,
    run_recorded_experiment,
    run_replications,
    simulate_replication,
    theoretical_cdf,
    two_sample_ks,
)
from chigrid.theory import frechet_bounds, limit_marginal, mixture_expectation


def provided_constants(config):
    spacing = replication_spacing(config, replication_lattice(config))
    return resolve_constants(config, spacing)


def test_empirical_joint_cdf_counting():
    samples = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]
    assert empirical_joint_cdf(samples, [(1.0, 1.0)]) == pytest.approx([2 / 3])
    assert empirical_joint_cdf([(0.0, 0.0)] * 4, [(1.0, 1.0)])[0] == 1.0
    assert empirical_joint_cdf(samples, [(-1e6, -1e6)])[0] == 0.0
    single = empirical_joint_cdf([NormalizedPair(0.3, -0.2)], [(0, 0), (1, 1)])
    assert set(single) <= {0.0, 1.0}
    with pytest.raises(ValueError):
        empirical_joint_cdf([], [(0.0, 0.0)])


def test_lattice_and_spacing(small_config):
    spec = replication_lattice(small_config)
    assert spec.mesh == pytest.approx(0.1 / (2 * math.log(20)))
    assert spec.horizon >= 20
    spacing = replication_spacing(small_config, spec)
    assert spacing.stride == 60
    assert spacing.delta_used == pytest.approx(60 * spec.mesh)


def test_replications_in_index_order(small_config):
    pairs = run_replications(small_config, workers=1)
    assert len(pairs) == small_config.n_rep
    for index in (0, 7, 19):
        _chi_input, _chi, pair = simulate_replication(small_config, index)
        assert pairs[index] == pair
    assert all(pair.m_grid <= pair.m_cont for pair in pairs)


def test_replications_independent_of_workers(small_config):
    single = run_replications(small_config, workers=1)
    with parallel_config(backend="threading"):
        split = run_replications(small_config, workers=3)
    assert single == split


def test_theoretical_cdf_sparse(small_config):
    constants = provided_constants(small_config)
    assert constants.source == ConstantsSource.PROVIDED
    values = theoretical_cdf(small_config, constants)
    assert values[0] == pytest.approx(math.exp(-2))
    assert values[1] == pytest.approx(math.exp(-2 * math.exp(-1)))


def test_marginal_ks_range():
    rng = np.random.default_rng(0)
    gumbel = rng.gumbel(size=500)
    assert 0 <= marginal_ks(gumbel, 0.0, 2) < 0.1
    assert marginal_ks(gumbel + 3, 0.0, 2) > 0.5


def test_two_sample_ks():
    rng = np.random.default_rng(1)
    first = rng.gumbel(size=1000)
    statistic, pvalue = two_sample_ks(first, rng.gumbel(size=1000))
    assert 0 <= statistic < 0.1
    assert pvalue > 0.001
    statistic, pvalue = two_sample_ks(first, first + 1)
    assert statistic > 0.3
    assert pvalue < 1e-6


def test_compare_reports_sup_distance(small_config):
    constants = provided_constants(small_config)
    samples = [(0.0, 0.0), (1.0, 1.0), (-1.0, 2.0), (3.0, 3.0)]
    report = compare(samples, small_config, constants)
    expected = empirical_joint_cdf(samples, small_config.eval_points) - theoretical_cdf(
        small_config, constants
    )
    assert report.sup_distance == pytest.approx(float(np.abs(expected).max()))
    assert report.n_samples == 4
    assert report.per_point == pytest.approx(expected)


def test_run_experiment_is_deterministic(small_config):
    first = run_experiment(small_config, workers=1)
    second = run_experiment(small_config, workers=1)
    assert first.sup_distance == second.sup_distance
    assert np.array_equal(first.empirical, second.empirical)
    assert first.metadata == second.metadata
    assert len(first.results) == small_config.n_rep
    assert set(first.runtime) == {
        "constants_seconds",
        "replications_seconds",
        "total_seconds",
    }
    assert first.metadata["stride"] == 60
    # 60 lattice steps of eta = 0.1 cluster lengths
    assert first.metadata["cluster_spacing"] == pytest.approx(6.0)
    assert first.marginal_ks_sphere is None
    assert first.metadata["normalization"]["a_T"] == pytest.approx(
        math.sqrt(2 * math.log(20))
    )


def test_seed_changes_samples(small_config):
    first = run_replications(small_config)
    other = run_replications(small_config.with_seed(8))
    assert first != other


def test_dense_grid_equals_continuous(experiment_data):
    experiment_data["grid"] = {"kind": "dense"}
    experiment_data["eta"] = 0.15
    config = config_from_dict(experiment_data)
    report = run_experiment(config)
    assert report.metadata["stride"] == 1
    for result in report.results:
        assert result.pair.m_grid == result.pair.m_cont
        assert result.normalized.norm_grid == result.normalized.norm_cont


def test_dense_grid_finer_than_mesh(experiment_data):
    experiment_data["grid"] = {"kind": "dense"}
    experiment_data["eta"] = 1
    with pytest.raises(GridFinerThanMesh):
        run_experiment(config_from_dict(experiment_data))


def test_pickands_experiment_with_estimated_constants(experiment_data):
    experiment_data["grid"] = {"kind": "pickands", "D": 1}
    experiment_data["constants"] = {"n_rep": 100, "lambda": 2}
    config = config_from_dict(experiment_data)
    report = run_experiment(config)

    constants = report.metadata["constants"]
    assert constants["source"] == "estimate"
    assert constants["H_D_alpha"] <= constants["H_alpha"]
    assert constants["window_bias"]["half_lambda"] == 1.0
    assert constants["estimates"]["H_D_alpha"]["D"] == pytest.approx(
        report.metadata["stride"] * config.eta
    )
    assert len(constants["pickands_term"]) == len(config.eval_points)
    for (x, y), value in zip(config.eval_points, report.theoretical, strict=True):
        lower, upper = frechet_bounds(limit_marginal(x, 0, 2), limit_marginal(y, 0, 2))
        assert lower - 1e-9 <= value <= upper + 1e-9


def test_experiment_with_window_constants(experiment_data):
    experiment_data["m"] = 3
    experiment_data["constants"] = {"n_rep": 100, "lambda": 2, "method": "window"}
    report = run_experiment(config_from_dict(experiment_data))
    estimates = report.metadata["constants"]["estimates"]
    assert estimates["H_alpha"]["method"] == "window"
    assert report.metadata["constants"]["H_alpha"] > 0
    assert len(report.results) == 20


def test_strong_mixture_experiment(experiment_data):
    experiment_data["r"] = 0.5
    config = config_from_dict(experiment_data)
    chi_input = simulate_replication(config, 0)[0]
    assert chi_input.shared_z.shape == (2,)
    report = run_experiment(config)
    assert report.theoretical[0] == pytest.approx(mixture_expectation(2.0, 0.5, 2))
    assert report.metadata["config"]["family"] == "strong_mixture"
    values = np.array([result.normalized.norm_cont for result in report.results])
    assert report.marginal_ks_sphere == pytest.approx(
        marginal_ks(values, 0.5, 2, sphere=True)
    )


@pytest.mark.django_db
def test_recorded_experiment(experiment_factory, tmp_path):
    experiment = experiment_factory(output_dir=str(tmp_path / "out"))
    report = run_recorded_experiment(experiment)
    experiment.refresh_from_db()
    assert experiment.status == Experiment.Status.DONE
    assert experiment.finished_at is not None
    assert experiment.summary["sup_distance"] == report.sup_distance
    assert experiment.summary["n_rep"] == 20
    assert (tmp_path / "out" / "samples.csv").exists()


@pytest.mark.django_db
def test_recorded_experiment_failure(experiment_factory):
    config = experiment_factory.build().config
    config["grid"] = {"kind": "dense"}
    config["eta"] = 1
    experiment = experiment_factory(config=config)
    with pytest.raises(GridFinerThanMesh):
        run_recorded_experiment(experiment)
    experiment.refresh_from_db()
    assert experiment.status == Experiment.Status.FAILED
    assert "finer than the lattice mesh" in experiment.error


@pytest.mark.django_db
def test_recorded_experiment_value_error(experiment_factory, monkeypatch):
    def broken(config, workers=None):
        raise ValueError("need at least one array to concatenate")

    monkeypatch.setattr("chigrid.services.run_experiment", broken)
    experiment = experiment_factory()
    with pytest.raises(ValueError):
        run_recorded_experiment(experiment)
    experiment.refresh_from_db()
    assert experiment.status == Experiment.Status.FAILED
    assert experiment.finished_at is not None
    assert "concatenate" in experiment.error
