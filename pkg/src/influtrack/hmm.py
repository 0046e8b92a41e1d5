"""Hidden-Markov filtering of the graph process from partial observations.

Only a subset of nodes is visible; each graph state emits the induced
subgraph on that subset.  Emissions are deterministic, so likelihoods are
binary: an observation is compatible with exactly the states that induce it.
The forward filter tracks the posterior over states, and the influence
objective is estimated as a running average of the per-state sketch estimates
weighted by the posterior.
"""

from __future__ import annotations

import numpy as np

from influtrack import rng as rngmod
from influtrack.chain import GraphProcessModel, sample_path
from influtrack.diffusion import ExponentialDelays
from influtrack.errors import RuntimeInconsistencyError
from influtrack.estimator import EstimatorConfig, estimate_support_influences


def build_likelihoods(model: GraphProcessModel) -> np.ndarray:
    """Binary likelihood matrix B[k, o] = 1 iff state k emits observation o.

    Exactly one entry per row is 1; aliased states share a column.
    """
    idx = model.observation_index
    B = np.zeros((model.n_states, int(idx.max()) + 1))
    B[np.arange(model.n_states), idx] = 1.0
    return B


def predict(pi: np.ndarray, P: np.ndarray) -> np.ndarray:
    """One-step state prediction P' pi (no observation)."""
    return np.asarray(P, dtype=np.float64).T @ np.asarray(pi, dtype=np.float64)


def filter_update(pi: np.ndarray, P: np.ndarray,
                  likelihood_col: np.ndarray) -> np.ndarray:
    """Forward-filter step: weight the prediction by the observation's
    likelihood column and renormalize."""
    raw = np.asarray(likelihood_col, dtype=np.float64) * predict(pi, P)
    norm = raw.sum()
    if norm <= 0.0:
        raise RuntimeInconsistencyError(
            "observation has zero posterior probability under the model")
    return raw / norm


def run_filter(model: GraphProcessModel, P: np.ndarray, observations,
               prior: np.ndarray) -> np.ndarray:
    """Posterior sequence pi_0..pi_{N-1} given observations for steps 1..N-1.

    Row 0 is the prior; row n incorporates the n-th observation.
    """
    B = build_likelihoods(model)
    prior = np.asarray(prior, dtype=np.float64)
    if prior.shape != (model.n_states,) or abs(prior.sum() - 1.0) > 1e-9:
        raise ValueError("prior must be a distribution over the state space")
    observations = np.atleast_1d(np.asarray(observations, dtype=np.int64))
    out = np.empty((len(observations) + 1, model.n_states))
    out[0] = prior
    pi = prior
    for n, obs in enumerate(observations, start=1):
        pi = filter_update(pi, P, B[:, obs])
        out[n] = pi
    return out


def cesaro_influence(c_by_state: np.ndarray, posteriors: np.ndarray) -> float:
    """Running average (1/N) sum_n c' pi_n over the posterior sequence."""
    posteriors = np.atleast_2d(posteriors)
    return float((posteriors @ np.asarray(c_by_state, dtype=np.float64)).mean())


def filtered_influence_estimate(model: GraphProcessModel, theta,
                                observations, c_by_state: np.ndarray,
                                prior: np.ndarray | None = None) -> float:
    """Average the per-state estimates over the filtered posterior path.

    Filters the observation sequence under the transition matrix at `theta`
    (uniform prior unless given) and returns the running average of
    c_by_state weighted by every posterior, the prior term included.
    """
    P, _ = model.transition_and_sampling(theta)
    if prior is None:
        prior = np.full(model.n_states, 1.0 / model.n_states)
    posteriors = run_filter(model, P, observations, prior)
    return cesaro_influence(c_by_state, posteriors)


class FilteredEvaluator:
    """Objective evaluation when only part of the network is observable.

    Each call simulates a hidden stationary-start state path, filters its
    induced-subgraph observations into posteriors, runs the sketch estimator
    once per candidate graph, and averages the posterior-weighted estimates
    over the path (prior term included).
    """

    def __init__(self, model: GraphProcessModel, delays: ExponentialDelays,
                 est_config: EstimatorConfig, path_length: int,
                 master_seed: int, prior: np.ndarray | None = None,
                 salt: int = 0):
        self.model = model
        self.delays = delays
        self.est_config = est_config
        self.path_length = int(path_length)
        self.master_seed = int(master_seed)
        self.salt = int(salt)
        if prior is None:
            prior = np.full(model.n_states, 1.0 / model.n_states)
        self.prior = np.asarray(prior, dtype=np.float64)
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
        observations = [self.model.observe(int(s)) for s in path[1:]]
        posteriors = run_filter(self.model, P, observations, self.prior)
        support = np.asarray(sampling.support, dtype=np.int64)
        c_by_state = np.empty(self.model.n_states)
        for k, g in enumerate(self.model.state_space):
            X = estimate_support_influences(
                g, self.delays, self.est_config, support,
                delay_rng=rngmod.stream(self.master_seed, "delays", self.salt, call, k),
                label_rng=rngmod.stream(self.master_seed, "labels", self.salt, call, k))
            c_by_state[k] = float(np.dot(sampling.probs, X))
        return cesaro_influence(c_by_state, posteriors)
