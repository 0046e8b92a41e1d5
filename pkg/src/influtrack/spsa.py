"""Simultaneous-perturbation stochastic approximation over the coupled
seed-sampling / graph-process parameter.

Each iteration perturbs the parameter along one random Rademacher direction,
evaluates the influence objective at the two perturbed points (each on its own
fresh sample path of the graph chain), forms the two-point gradient estimate,
and takes a constant-step ascent move projected onto a box.  The constant step
keeps the recursion adaptive: when the underlying model switches regime, the
iterate drifts to the new optimum instead of freezing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from influtrack import rng as rngmod
from influtrack.chain import GraphProcessModel, sample_path
from influtrack.diffusion import ExponentialDelays
from influtrack.errors import RuntimeInconsistencyError
from influtrack.estimator import EstimatorConfig, estimate_support_influences


@dataclass(frozen=True)
class SpsaConfig:
    """Optimizer settings.

    step_size is the constant ascent gain; perturbation the finite-difference
    offset; path_length the number of chain steps averaged per objective
    evaluation.  theta0 and the box bounds may be scalars (1-dim parameter) or
    equal-length vectors.
    """

    step_size: float = 0.05
    perturbation: float = 0.1
    path_length: int = 30
    n_iterations: int = 100
    theta0: float | np.ndarray = 1.2
    box_low: float | np.ndarray = 0.01
    box_high: float | np.ndarray = np.pi / 2 - 0.01

    def __post_init__(self):
        theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=np.float64)).copy()
        low = np.broadcast_to(np.asarray(self.box_low, dtype=np.float64), theta0.shape).copy()
        high = np.broadcast_to(np.asarray(self.box_high, dtype=np.float64), theta0.shape).copy()
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.perturbation <= 0:
            raise ValueError("perturbation must be > 0")
        if self.path_length < 1:
            raise ValueError("path_length must be >= 1")
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be >= 0")
        if np.any(low >= high):
            raise ValueError("box_low must be < box_high")
        if np.any(theta0 < low) or np.any(theta0 > high):
            raise ValueError("theta0 must lie inside the box")
        for name, arr in (("theta0", theta0), ("box_low", low), ("box_high", high)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_params(self) -> int:
        return len(self.theta0)


def draw_perturbation(n_params: int, rng: np.random.Generator) -> np.ndarray:
    """Rademacher direction: each coordinate independently +-1."""
    return rng.integers(0, 2, n_params) * 2 - 1


def spsa_gradient(c_plus: float, c_minus: float, delta: float,
                  direction: np.ndarray) -> np.ndarray:
    """Two-point gradient estimate (c+ - c-) / (2 delta d_i); for Rademacher
    directions dividing by d_i equals multiplying."""
    return (c_plus - c_minus) / (2.0 * delta) * direction


def project_box(theta: np.ndarray, low, high) -> np.ndarray:
    return np.clip(theta, low, high)


def spsa_step(theta: np.ndarray, gradient: np.ndarray, step_size: float,
              low, high) -> np.ndarray:
    """One projected ascent move."""
    return project_box(theta + step_size * gradient, low, high)


@dataclass(frozen=True)
class IterationRecord:
    """Everything produced by one optimizer iteration."""

    k: int
    theta: np.ndarray
    direction: np.ndarray
    c_plus: float
    c_minus: float
    gradient: np.ndarray
    theta_next: np.ndarray
    wall_time: float


class PathAverageEvaluator:
    """Objective evaluation under full observation of the graph chain.

    Each call simulates a fresh stationary-start sample path of length
    path_length and averages the seed-weighted sketch estimate over the
    visited graphs, with fresh delay/label randomness at every position.
    Streams derive from (master_seed, stream name, call index, position), so
    repeated runs with one seed are reproducible call by call.
    """

    def __init__(self, model: GraphProcessModel, delays: ExponentialDelays,
                 est_config: EstimatorConfig, path_length: int, master_seed: int,
                 salt: int = 0):
        self.model = model
        self.delays = delays
        self.est_config = est_config
        self.path_length = int(path_length)
        self.master_seed = int(master_seed)
        self.salt = int(salt)
        self.n_calls = 0

    @property
    def n_nodes(self) -> int:
        return self.model.n_nodes

    def evaluate(self, theta) -> float:
        call = self.n_calls
        self.n_calls += 1
        P, sampling = self.model.transition_and_sampling(theta)
        path = sample_path(P, rng=rngmod.stream(self.master_seed, "path", self.salt, call),
                           length=self.path_length)
        support = np.asarray(sampling.support, dtype=np.int64)
        total = 0.0
        for pos, state in enumerate(path):
            g = self.model.state_space[state]
            X = estimate_support_influences(
                g, self.delays, self.est_config, support,
                delay_rng=rngmod.stream(self.master_seed, "delays", self.salt, call, pos),
                label_rng=rngmod.stream(self.master_seed, "labels", self.salt, call, pos))
            total += float(np.dot(sampling.probs, X))
        return total / len(path)


def path_average_influence(model: GraphProcessModel, theta, path,
                           delays: ExponentialDelays, est_config: EstimatorConfig,
                           rng: np.random.Generator) -> float:
    """Average seed-weighted influence estimate over a given state path."""
    sampling = model.sampling(theta)
    support = np.asarray(sampling.support, dtype=np.int64)
    path = np.atleast_1d(path)
    total = 0.0
    for state in path:
        g = model.state_space[int(state)]
        X = estimate_support_influences(g, delays, est_config, support, rng)
        total += float(np.dot(sampling.probs, X))
    return total / len(path)


def run(config: SpsaConfig, evaluator, rng: np.random.Generator,
        schedule: dict | None = None) -> list[IterationRecord]:
    """Run the constant-step SPSA recursion.

    `schedule` may map an iteration index to a replacement evaluator (a regime
    change); the swap happens before that iteration's evaluations.  Exactly
    two objective evaluations happen per iteration.
    """
    theta = config.theta0.copy()
    records: list[IterationRecord] = []
    for k in range(config.n_iterations):
        if schedule and k in schedule:
            evaluator = schedule[k]
        t0 = time.perf_counter()
        d = draw_perturbation(config.n_params, rng)
        offset = config.perturbation * d
        c_plus = float(evaluator.evaluate(theta + offset))
        c_minus = float(evaluator.evaluate(theta - offset))
        bound = float(getattr(evaluator, "n_nodes", np.inf))
        for val in (c_plus, c_minus):
            if not np.isfinite(val) or val < 0.0:
                raise RuntimeInconsistencyError(
                    f"objective estimate {val} is negative or non-finite")
        # The sketch estimator is unbiased but has an unbounded upper tail;
        # clip to the objective's true range so the gradient stays bounded.
        c_plus = min(c_plus, bound)
        c_minus = min(c_minus, bound)
        grad = spsa_gradient(c_plus, c_minus, config.perturbation, d)
        theta_next = spsa_step(theta, grad, config.step_size,
                               config.box_low, config.box_high)
        records.append(IterationRecord(k, theta.copy(), d, c_plus, c_minus,
                                       grad, theta_next.copy(),
                                       time.perf_counter() - t0))
        theta = theta_next
    return records
