"""Two-point stochastic-gradient optimizer: gradient, steps, run loop."""

import numpy as np
import pytest

from influtrack.errors import RuntimeInconsistencyError
from influtrack.spsa import (
    IterationRecord,
    SpsaConfig,
    draw_perturbation,
    project_box,
    run,
    spsa_gradient,
    spsa_step,
)


class QuadraticEvaluator:
    """Deterministic concave quadratic with a call counter."""

    def __init__(self, target, scale=1.0, offset=10.0):
        self.target = np.asarray(target, dtype=float)
        self.scale = scale
        self.offset = offset
        self.n_calls = 0

    def evaluate(self, theta):
        self.n_calls += 1
        diff = np.asarray(theta, dtype=float) - self.target
        return self.offset - self.scale * float(diff @ diff)


def test_config_validation():
    with pytest.raises(ValueError):
        SpsaConfig(step_size=0.0)
    with pytest.raises(ValueError):
        SpsaConfig(perturbation=-0.1)
    with pytest.raises(ValueError):
        SpsaConfig(box_low=1.0, box_high=0.5)
    with pytest.raises(ValueError):
        SpsaConfig(theta0=2.0, box_low=0.0, box_high=1.0)
    with pytest.raises(ValueError):
        SpsaConfig(n_iterations=-1)


def test_perturbation_is_rademacher():
    rng = np.random.default_rng(3)
    draws = np.array([draw_perturbation(4, rng) for _ in range(4000)])
    assert set(np.unique(draws)) == {-1, 1}
    assert np.all(np.abs(draws.mean(axis=0)) < 4 / np.sqrt(4000))


def test_gradient_arithmetic():
    d = np.array([1.0, -1.0])
    g = spsa_gradient(2.0, 1.0, 0.1, d)
    assert np.allclose(g, [5.0, -5.0])


def test_gradient_exact_on_quadratic():
    # central differences are exact for quadratics, so the projected
    # derivative d * (f(t+Dd) - f(t-Dd)) / (2D) recovers grad . d * d
    ev = QuadraticEvaluator([0.4, 1.1], scale=2.0)
    theta = np.array([0.9, 0.2])
    delta = 0.05
    rng = np.random.default_rng(8)
    for _ in range(20):
        d = draw_perturbation(2, rng)
        g = spsa_gradient(ev.evaluate(theta + delta * d),
                          ev.evaluate(theta - delta * d), delta, d)
        grad_true = -2.0 * ev.scale * (theta - ev.target)
        assert np.allclose(g, d * (grad_true @ d), atol=1e-9)


def test_project_box():
    assert project_box(np.array([0.35]), 0.0, np.pi / 2)[0] == pytest.approx(0.35)
    assert project_box(np.array([-0.2]), 0.01, 1.0)[0] == 0.01
    assert project_box(np.array([5.0]), 0.01, 1.0)[0] == 1.0


def test_step_arithmetic():
    out = spsa_step(np.array([0.3]), np.array([1.0]), 0.05, 0.0, np.pi / 2)
    assert out[0] == pytest.approx(0.35)


def test_run_calls_evaluator_twice_per_iteration():
    ev = QuadraticEvaluator([0.5])
    config = SpsaConfig(n_iterations=7, theta0=0.8)
    records = run(config, ev, np.random.default_rng(0))
    assert len(records) == 7
    assert ev.n_calls == 14


def test_run_converges_on_deterministic_quadratic():
    ev = QuadraticEvaluator([0.5], scale=3.0)
    config = SpsaConfig(step_size=0.05, perturbation=0.05, n_iterations=60,
                        theta0=1.2)
    records = run(config, ev, np.random.default_rng(1))
    final = records[-1].theta_next[0]
    assert abs(final - 0.5) <= config.perturbation


def test_run_records_chain_consistently():
    ev = QuadraticEvaluator([0.3])
    config = SpsaConfig(n_iterations=5, theta0=0.9)
    records = run(config, ev, np.random.default_rng(2))
    for k, rec in enumerate(records):
        assert rec.k == k
        assert isinstance(rec, IterationRecord)
        step = spsa_step(rec.theta, rec.gradient, config.step_size,
                         config.box_low, config.box_high)
        assert np.allclose(rec.theta_next, step)
    for prev, nxt in zip(records, records[1:]):
        assert np.allclose(prev.theta_next, nxt.theta)


def test_run_applies_schedule_swap():
    first = QuadraticEvaluator([0.5])
    second = QuadraticEvaluator([1.0])
    config = SpsaConfig(n_iterations=6, theta0=0.7)
    run(config, first, np.random.default_rng(4), schedule={3: second})
    assert first.n_calls == 6
    assert second.n_calls == 6


def test_run_clips_overshooting_evaluations():
    class Overshoot:
        n_nodes = 10

        def evaluate(self, theta):
            return 12.5

    records = run(SpsaConfig(n_iterations=1, theta0=0.5), Overshoot(),
                  np.random.default_rng(0))
    assert records[0].c_plus == 10.0
    assert records[0].c_minus == 10.0
    assert np.allclose(records[0].gradient, 0.0)


def test_run_rejects_negative_or_nan_evaluations():
    class Bad:
        def __init__(self, value):
            self.value = value

        def evaluate(self, theta):
            return self.value

    for value in (-0.5, float("nan")):
        with pytest.raises(RuntimeInconsistencyError):
            run(SpsaConfig(n_iterations=1, theta0=0.5), Bad(value),
                np.random.default_rng(0))


def test_run_is_deterministic_given_seed():
    config = SpsaConfig(n_iterations=10, theta0=0.9)
    a = run(config, QuadraticEvaluator([0.5]), np.random.default_rng(11))
    b = run(config, QuadraticEvaluator([0.5]), np.random.default_rng(11))
    assert all(np.array_equal(x.theta, y.theta) for x, y in zip(a, b))
    assert a[-1].theta_next == pytest.approx(b[-1].theta_next)
