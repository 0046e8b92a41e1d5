"""Discrete Bayes filter over the hidden graph state and its Cesaro average."""

import numpy as np
import pytest

from influtrack.chain import GraphProcessModel, iid_rows_coupling, trig_two_point_weights
from influtrack.errors import RuntimeInconsistencyError
from influtrack.hmm import (
    FilteredEvaluator,
    build_likelihoods,
    cesaro_influence,
    filter_update,
    filtered_influence_estimate,
    predict,
    run_filter,
)
from influtrack.diffusion import ExponentialDelays
from influtrack.estimator import EstimatorConfig
from influtrack.graphs import SbmParams, sbm_sample


def distinct_model(observed=None):
    gs = (sbm_sample(SbmParams((5, 5), 0.6, 0.1, seed=1)),
          sbm_sample(SbmParams((8, 2), 0.6, 0.1, seed=2)))
    if observed is None:
        observed = range(10)
    return GraphProcessModel(gs, iid_rows_coupling((0, 9)), tuple(observed))


def aliased_model():
    g = sbm_sample(SbmParams((5, 5), 0.6, 0.1, seed=1))
    return GraphProcessModel((g, g), iid_rows_coupling((0, 9)), tuple(range(10)))


def test_likelihood_matrix_is_one_hot_for_distinct_states():
    model = distinct_model()
    B = build_likelihoods(model)
    assert B.shape == (2, model.n_observations)
    assert np.array_equal(B.sum(axis=1), [1.0, 1.0])
    assert np.array_equal(B[0], 1.0 * (np.arange(2) == model.observe(0)))


def test_likelihoods_alias_identical_views():
    model = aliased_model()
    B = build_likelihoods(model)
    assert model.n_observations == 1
    assert np.array_equal(B, [[1.0], [1.0]])


def test_predict_applies_transpose():
    P = np.array([[0.9, 0.1], [0.2, 0.8]])
    pi = np.array([1.0, 0.0])
    assert np.allclose(predict(pi, P), [0.9, 0.1])


def test_perfect_observation_collapses_in_one_update():
    model = distinct_model()
    P, _ = model.transition_and_sampling(0.7)
    rng = np.random.default_rng(5)
    for true_state in (0, 1):
        obs = [model.observe(true_state)]
        post = run_filter(model, P, obs, np.array([0.5, 0.5]))
        one_hot = np.zeros(2)
        one_hot[true_state] = 1.0
        assert np.array_equal(post[1], one_hot)
    # along a whole path the filter pins the true state exactly
    path = rng.integers(0, 2, size=30)
    obs = [model.observe(s) for s in path]
    post = run_filter(model, P, obs, np.array([0.5, 0.5]))
    assert np.array_equal(np.argmax(post[1:], axis=1), path)
    assert np.allclose(post[1:].max(axis=1), 1.0)


def test_uninformative_observations_reduce_to_prediction():
    model = aliased_model()
    # a non-trivial transition matrix exercises the prediction step; the
    # single shared observation id carries no information
    P = np.array([[0.7, 0.3], [0.4, 0.6]])
    prior = np.array([0.9, 0.1])
    N = 17
    post = run_filter(model, P, [0] * N, prior)
    expected = prior.copy()
    for _ in range(N):
        expected = predict(expected, P)
    assert np.allclose(post[N], expected, atol=1e-10)


def test_filter_rows_are_normalized():
    model = distinct_model()
    P, _ = model.transition_and_sampling(1.0)
    rng = np.random.default_rng(8)
    path = rng.integers(0, 2, size=50)
    post = run_filter(model, P, [model.observe(s) for s in path],
                      np.array([0.3, 0.7]))
    assert np.allclose(post.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(post >= 0.0)


def test_impossible_observation_raises():
    model = distinct_model()
    P = np.eye(2)
    with pytest.raises(RuntimeInconsistencyError):
        run_filter(model, P, [model.observe(1)], np.array([1.0, 0.0]))


def test_filter_update_single_step():
    pi = np.array([0.5, 0.5])
    P = np.array([[0.9, 0.1], [0.2, 0.8]])
    lik = np.array([1.0, 0.0])
    post = filter_update(pi, P, lik)
    predicted = predict(pi, P)
    assert np.allclose(post, [1.0, 0.0])
    assert post[0] == pytest.approx(predicted[0] / predicted[0])


def test_cesaro_average_arithmetic():
    c = np.array([2.0, 4.0])
    posteriors = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    # mean of (2, 3, 4)
    assert cesaro_influence(c, posteriors) == pytest.approx(3.0)


def test_cesaro_converges_to_stationary_value():
    # on the identical-rows chain every predicted posterior equals the row,
    # so the running average approaches c . pi at rate O(1/N)
    model = distinct_model()
    theta = 0.8
    P, dist = model.transition_and_sampling(theta)
    pi = trig_two_point_weights(theta)
    c = np.array([3.0, 7.0])
    target = float(c @ pi)
    prior = np.array([1.0, 0.0])
    model_a = aliased_model()
    errs = []
    for N in (100, 1000, 10000):
        post = run_filter(model_a, P, [0] * N, prior)
        errs.append(abs(cesaro_influence(c, post[:-1]) - target))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02 * target
    # O(1/N): tenfold N shrinks the error about tenfold
    assert errs[1] / errs[2] == pytest.approx(10.0, rel=0.25)


def test_filtered_influence_estimate_composes_filter_and_average():
    model = distinct_model()
    theta = 0.7
    obs = [0, 1, 1, 0, 1]
    c = np.array([4.0, 9.0])
    got = filtered_influence_estimate(model, theta, obs, c)

    P, _ = model.transition_and_sampling(theta)
    prior = np.full(2, 0.5)
    posteriors = run_filter(model, P, obs, prior)
    assert got == pytest.approx(cesaro_influence(c, posteriors), rel=1e-14)

    # explicit prior overrides the uniform default
    sharp = np.array([1.0, 0.0])
    got_sharp = filtered_influence_estimate(model, theta, obs, c, prior=sharp)
    posteriors_sharp = run_filter(model, P, obs, sharp)
    assert got_sharp == pytest.approx(
        cesaro_influence(c, posteriors_sharp), rel=1e-14)
    assert got_sharp != pytest.approx(got)


def test_filtered_evaluator_is_deterministic_and_bounded():
    model = distinct_model(observed=range(5))
    delays = ExponentialDelays(1.0, 10.0)
    config = EstimatorConfig(n_delay_sets=4, n_label_sets=5)
    ev_a = FilteredEvaluator(model, delays, config, path_length=10, master_seed=42)
    ev_b = FilteredEvaluator(model, delays, config, path_length=10, master_seed=42)
    va = ev_a.evaluate(np.array([0.8]))
    vb = ev_b.evaluate(np.array([0.8]))
    assert va == vb
    assert 0.0 <= va <= 2 * model.n_nodes
    # separate calls consume fresh streams
    assert ev_a.evaluate(np.array([0.8])) != va


def test_filtered_evaluator_counts_calls():
    model = distinct_model(observed=range(5))
    ev = FilteredEvaluator(model, ExponentialDelays(1.0, 10.0),
                           EstimatorConfig(4, 5), path_length=6, master_seed=1)
    assert ev.n_calls == 0
    ev.evaluate(np.array([0.5]))
    ev.evaluate(np.array([0.6]))
    assert ev.n_calls == 2
