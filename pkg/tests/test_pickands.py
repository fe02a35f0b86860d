import math

import numpy as np
import pytest
from joblib import parallel_config

from chigrid.pickands import (
    EstimateKind,
    EstimatorMethod,
    alpha2_component_max,
    alpha2_normalized_oracle,
    alpha2_window_oracle,
    default_window,
    estimate_H,
    estimate_pickands_constants,
    estimate_two_index,
    estimate_window_bias,
    level_integral,
    sample_drifted_field,
)
from chigrid.streams import derive_stream
from chigrid.theory import LimitSpec, frechet_bounds, limit_joint, limit_marginal

WINDOW = EstimatorMethod.WINDOW
NORMALIZED = EstimatorMethod.NORMALIZED


def test_default_window():
    assert default_window(1.0) == (50.0, 0.02)
    assert default_window(2.0) == (20.0, 0.01)


def test_drifted_field_starts_at_zero():
    for seed in range(5):
        sample = sample_drifted_field(1.0, 2.0, 0.01, 0.1, derive_stream(seed, 0))
        assert sample.cont_max >= 0
        assert sample.grid_max <= sample.cont_max


def test_alpha2_component_max():
    z = np.array([-1.0, 0.0, 1.0, 10.0])
    expected = [0.0, 0.0, 0.5, math.sqrt(2) * 2.0 * 10.0 - 4.0]
    assert alpha2_component_max(z, 2.0) == pytest.approx(expected)


def test_alpha2_drifted_field_matches_closed_form():
    lambda_, mesh = 2.0, 0.001
    rng = derive_stream(21, 0)
    sample = sample_drifted_field(2.0, lambda_, mesh, mesh, rng)
    z = derive_stream(21, 0).standard_normal()
    assert sample.cont_max == pytest.approx(
        float(alpha2_component_max(z, lambda_)), abs=1e-5
    )


def test_level_integral_identity():
    A, B, x, y = 1.3, 0.7, 0.2, -0.1
    s = np.linspace(-40.0, 5.0, 450_001)
    ds = s[1] - s[0]
    inside = (A > s + x) & (B > s + y)
    numeric = float((np.exp(s) * inside).sum() * ds)
    assert numeric == pytest.approx(float(level_integral(A, B, x, y)), abs=1e-3)


def test_grid_at_mesh_equals_continuous():
    kwargs = dict(alpha=1.0, lambda_=2.0, mesh=0.05, n_rep=100, seed=3)
    for method in (WINDOW, NORMALIZED):
        continuous = estimate_H(method=method, **kwargs)
        grid = estimate_H(D=0.05, method=method, **kwargs)
        assert continuous.kind == EstimateKind.CONTINUOUS
        assert grid.kind == EstimateKind.GRID
        assert grid.value == continuous.value


def test_monotone_in_grid_spacing():
    kwargs = dict(alpha=1.0, lambda_=3.0, mesh=0.05, n_rep=200, seed=5)
    for method in (WINDOW, NORMALIZED):
        continuous = estimate_H(method=method, **kwargs)
        fine = estimate_H(D=0.1, method=method, **kwargs)
        coarse = estimate_H(D=0.2, method=method, **kwargs)
        assert continuous.value >= fine.value >= coarse.value > 0


def test_estimate_independent_of_workers():
    kwargs = dict(alpha=1.5, lambda_=2.0, mesh=0.05, n_rep=300, seed=8)
    single = estimate_H(workers=1, **kwargs)
    with parallel_config(backend="threading"):
        split = estimate_H(workers=2, **kwargs)
    assert single.value == split.value
    assert single.stderr == split.stderr


def test_estimate_needs_replications():
    with pytest.raises(ValueError):
        estimate_H(1.0, 2.0, 0.05, n_rep=10)
    with pytest.raises(ValueError):
        estimate_H(1.0, 0.01, 0.05, n_rep=100)


def test_alpha2_window_oracle_continuum_limit():
    lambda_ = 2.0
    expected = (1 + lambda_ / math.sqrt(math.pi)) / lambda_
    assert alpha2_window_oracle(lambda_, 0.001) == pytest.approx(expected, abs=1e-3)
    assert alpha2_window_oracle(lambda_, 0.5) < alpha2_window_oracle(lambda_, 0.1)


def test_alpha2_window_estimate_matches_oracle():
    lambda_, mesh = 1.0, 0.01
    for D in (None, 0.5):
        estimate = estimate_H(2.0, lambda_, mesh, 2000, D=D, seed=13, method=WINDOW)
        oracle = alpha2_window_oracle(lambda_, D or mesh)
        assert abs(estimate.value - oracle) <= 4 * estimate.stderr


def test_alpha2_normalized_estimate_matches_oracle():
    lambda_, mesh = 3.0, 0.05
    for D, stride in ((None, 1), (0.5, 10)):
        estimate = estimate_H(2.0, lambda_, mesh, 1000, D=D, seed=17)
        oracle = alpha2_normalized_oracle(lambda_, mesh, stride=stride)
        assert abs(estimate.value - oracle) <= 4 * estimate.stderr + 1e-4
    assert alpha2_normalized_oracle(lambda_, mesh) == pytest.approx(
        1 / math.sqrt(math.pi), abs=2e-3
    )


def test_two_index_reduces_to_continuous_constant():
    kwargs = dict(alpha=1.0, lambda_=2.0, mesh=0.05, n_rep=200, seed=4)
    continuous = estimate_H(method=WINDOW, **kwargs)
    # with y far below every grid maximum the min picks the continuous term
    two_index = estimate_two_index(
        0.5, -1e3, m=1, D=0.1, method=WINDOW, **kwargs
    )
    assert two_index.kind == EstimateKind.TWO_INDEX
    assert two_index.value == pytest.approx(math.exp(-0.5) * continuous.value)


def test_two_index_normalized_factorizes_over_components():
    kwargs = dict(alpha=1.0, lambda_=2.0, mesh=0.05, n_rep=200, seed=4, D=0.1)
    one = estimate_two_index(0.0, 0.5, m=1, **kwargs)
    three = estimate_two_index(0.0, 0.5, m=3, **kwargs)
    assert three.value == pytest.approx(one.value / math.pi)


def test_two_index_window_with_gaussian_components():
    kwargs = dict(alpha=1.0, lambda_=2.0, mesh=0.05, n_rep=400, seed=8, D=0.1)
    one = estimate_two_index(0.0, 0.5, m=1, method=WINDOW, **kwargs)
    two = estimate_two_index(0.0, 0.5, m=2, method=WINDOW, **kwargs)
    assert two.kind == EstimateKind.TWO_INDEX
    assert two.n_rep == 400
    # the alpha = 2 coordinate is independent of the fBm coordinate
    factor = alpha2_window_oracle(kwargs["lambda_"], 1e-4)
    assert abs(two.value - one.value * factor) <= 5 * two.stderr


def test_window_constants_with_several_components():
    eval_points = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    constants = estimate_pickands_constants(
        1.0,
        mesh=0.05,
        lambda_=2.0,
        n_rep=200,
        m=3,
        D=0.2,
        eval_points=eval_points,
        seed=9,
        method=WINDOW,
    )
    assert constants.H_D_alpha.value <= constants.H_alpha.value
    assert constants.H_alpha.method == WINDOW
    terms = constants.pickands_terms
    assert set(terms) == set(eval_points)
    assert all(value > 0 for value in terms.values())
    assert terms[(1.0, 0.0)] <= terms[(0.0, 0.0)]
    assert terms[(0.0, 1.0)] <= terms[(0.0, 0.0)]


def test_pickands_terms_within_frechet_bounds():
    eval_points = [(float(x), float(y)) for x in (-1, 0, 2) for y in (-1, 0, 2)]
    constants = estimate_pickands_constants(
        1.0,
        mesh=0.05,
        lambda_=3.0,
        n_rep=200,
        m=2,
        D=0.2,
        eval_points=eval_points,
        seed=6,
    )
    assert constants.H_D_alpha.value <= constants.H_alpha.value
    spec = LimitSpec(
        m=2, r=0.0, grid_kind="pickands", pickands_terms=constants.pickands_terms
    )
    for x, y in eval_points:
        term = constants.pickands_terms[(x, y)]
        assert 0 <= term <= min(math.exp(-x), math.exp(-y)) + 1e-12
        lower, upper = frechet_bounds(limit_marginal(x, 0, 2), limit_marginal(y, 0, 2))
        assert lower - 1e-9 <= limit_joint(x, y, spec) <= upper + 1e-9

    data = constants.to_dict()
    assert len(data["pickands_term"]) == len(eval_points)
    assert data["H_alpha"]["method"] == "normalized"


def test_continuous_only_constants():
    constants = estimate_pickands_constants(
        1.0, mesh=0.05, lambda_=2.0, n_rep=100, seed=1
    )
    assert constants.H_D_alpha is None
    assert constants.pickands_terms == {}


def test_window_bias():
    estimate = estimate_H(2.0, 4.0, 0.05, 200, seed=3)
    bias = estimate_window_bias(2.0, estimate, seed=3)
    assert bias["half_lambda"] == 2.0
    assert bias["value"] == estimate.value
    assert bias["difference"] == pytest.approx(estimate.value - bias["half_value"])
    half = estimate_H(2.0, 2.0, 0.05, 200, seed=3)
    assert bias["half_value"] == half.value

    narrow = estimate_H(2.0, 0.08, 0.05, 100, seed=3)
    assert estimate_window_bias(2.0, narrow) is None


@pytest.mark.slow
def test_alpha1_constant_near_one():
    estimate = estimate_H(1.0, 20.0, 0.01, 1000, seed=2)
    assert 0.85 <= estimate.value <= 1.15
    assert not estimate.unstable
