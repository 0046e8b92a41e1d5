"""Finite-state Markov graph process with a parameter-coupled seed sampler.

The network topology is a Markov chain over a finite set of candidate graphs
on a shared node set.  One parameter vector theta drives both the chain's
transition matrix and the distribution from which cascade seed nodes are
drawn; a coupling maps theta to the pair (transition matrix, seed sampler).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from influtrack.graphs import DirectedGraph, induced_subgraph

_ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SamplingDistribution:
    """Probability distribution over a small set of candidate seed nodes."""

    support: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        support = tuple(int(v) for v in self.support)
        probs = np.asarray(self.probs, dtype=np.float64)
        if len(support) == 0:
            raise ValueError("support must be non-empty")
        if len(set(support)) != len(support):
            raise ValueError("support nodes must be distinct")
        if probs.shape != (len(support),):
            raise ValueError("need one probability per support node")
        if np.any(probs < -_ROW_TOL) or abs(probs.sum() - 1.0) > _ROW_TOL:
            raise ValueError("probabilities must be non-negative and sum to 1")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.support[rng.choice(len(self.support), p=self.probs)])


def sample_seed(dist: SamplingDistribution, rng: np.random.Generator) -> int:
    """Draw one seed node from the sampling distribution."""
    return dist.sample(rng)


def trig_two_point_weights(theta) -> np.ndarray:
    """Two-point weights [cos^2 t, sin^2 t] from a scalar parameter."""
    t = float(np.atleast_1d(theta)[0])
    c = np.cos(t) ** 2
    return np.array([c, 1.0 - c])


Coupling = Callable[[np.ndarray], tuple[np.ndarray, SamplingDistribution]]


def iid_rows_coupling(support, weights_fn=trig_two_point_weights) -> Coupling:
    """Coupling where every transition row equals the seed weights.

    State k is identified with support slot k, so the chain's stationary
    distribution coincides with the seed-sampling distribution and the state
    count must equal the support size.
    """
    support = tuple(int(v) for v in support)

    def coupling(theta):
        w = np.asarray(weights_fn(theta), dtype=np.float64)
        if w.shape != (len(support),):
            raise ValueError("weights length must match support size")
        return np.tile(w, (len(w), 1)), SamplingDistribution(support, w)

    return coupling


COUPLINGS = {"iid-rows": iid_rows_coupling}


@dataclass(frozen=True, eq=False)
class GraphProcessModel:
    """Candidate graphs, the theta coupling, and the observable node set."""

    state_space: tuple[DirectedGraph, ...]
    coupling: Coupling
    observed_nodes: tuple[int, ...] | None = None

    def __post_init__(self):
        states = tuple(self.state_space)
        if not states:
            raise ValueError("state space must be non-empty")
        n = states[0].n_nodes
        if any(g.n_nodes != n for g in states):
            raise ValueError("all candidate graphs must share the node set")
        obs = self.observed_nodes
        if obs is not None:
            obs = tuple(sorted(int(v) for v in obs))
            if not obs:
                raise ValueError("observed node set must be non-empty")
            if obs[0] < 0 or obs[-1] >= n:
                raise ValueError("observed node out of range")
        object.__setattr__(self, "state_space", states)
        object.__setattr__(self, "observed_nodes", obs)

    @property
    def n_states(self) -> int:
        return len(self.state_space)

    @property
    def n_nodes(self) -> int:
        return self.state_space[0].n_nodes

    def transition_and_sampling(self, theta) -> tuple[np.ndarray, SamplingDistribution]:
        P, dist = self.coupling(np.asarray(theta, dtype=np.float64))
        P = np.asarray(P, dtype=np.float64)
        if P.shape != (self.n_states, self.n_states):
            raise ValueError("coupling must return a square matrix over the state space")
        _check_stochastic(P)
        for v in dist.support:
            if not 0 <= v < self.n_nodes:
                raise ValueError(f"support node {v} out of range")
        return P, dist

    def transition(self, theta) -> np.ndarray:
        return self.transition_and_sampling(theta)[0]

    def sampling(self, theta) -> SamplingDistribution:
        return self.transition_and_sampling(theta)[1]

    @cached_property
    def observation_index(self) -> np.ndarray:
        """Observation id of each state's induced subgraph on observed_nodes.

        Distinct induced subgraphs (by sorted edge list) get distinct ids,
        numbered in first-seen state order; aliased states share an id.
        """
        obs_nodes = self.observed_nodes
        if obs_nodes is None:
            obs_nodes = tuple(range(self.n_nodes))
        seen: dict = {}
        ids = np.empty(self.n_states, dtype=np.int64)
        for k, g in enumerate(self.state_space):
            sub, _ = induced_subgraph(g, obs_nodes)
            key = sub.canonical_key()
            ids[k] = seen.setdefault(key, len(seen))
        ids.setflags(write=False)
        return ids

    @property
    def n_observations(self) -> int:
        return int(self.observation_index.max()) + 1

    def observe(self, state: int) -> int:
        """Observation id emitted by the given state."""
        if not 0 <= state < self.n_states:
            raise ValueError("state index out of range")
        return int(self.observation_index[state])


def _check_stochastic(P: np.ndarray) -> None:
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("transition matrix must be square")
    if np.any(P < -_ROW_TOL):
        raise ValueError("transition matrix has negative entries")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > _ROW_TOL):
        raise ValueError("transition matrix rows must sum to 1")


def stationary_distribution(P: np.ndarray, tol: float = 1e-10,
                            max_iter: int = 200_000) -> np.ndarray:
    """Stationary distribution of a regular chain by power iteration.

    Iterates pi <- pi P from the uniform vector until the L1 residual
    ||pi P - pi||_1 drops below tol.
    """
    P = np.asarray(P, dtype=np.float64)
    _check_stochastic(P)
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        if np.abs(nxt - pi).sum() < tol:
            nxt /= nxt.sum()
            return nxt
        pi = nxt
    raise RuntimeError("power iteration did not converge; is the chain regular?")


def is_regular(P: np.ndarray) -> bool:
    """True if some power of P is entrywise positive (checked numerically)."""
    P = np.asarray(P, dtype=np.float64)
    _check_stochastic(P)
    n = P.shape[0]
    reach = P > 0.0
    if reach.all():
        return True
    # Wielandt bound: a primitive matrix has a positive power by n^2 - 2n + 2.
    bound = n * n - 2 * n + 2
    power = 1
    current = reach.copy()
    while power < bound:
        current = (current.astype(np.int64) @ reach.astype(np.int64)) > 0
        power += 1
        if current.all():
            return True
    return False


def sample_path(model_or_P, theta=None, start="stationary", length: int = 1,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Simulate a state-index path of the graph chain.

    First argument may be a GraphProcessModel (theta required) or a transition
    matrix.  `start` is a state index or "stationary", which draws the initial
    state from the stationary distribution.
    """
    if isinstance(model_or_P, GraphProcessModel):
        P = model_or_P.transition(theta)
    else:
        P = np.asarray(model_or_P, dtype=np.float64)
        _check_stochastic(P)
    if rng is None:
        raise ValueError("an explicit rng is required")
    if length < 1:
        raise ValueError("length must be >= 1")
    n = P.shape[0]
    cum = np.cumsum(P, axis=1)
    path = np.empty(length, dtype=np.int64)
    if start == "stationary":
        pi = stationary_distribution(P)
        x = int(np.searchsorted(np.cumsum(pi), rng.random(), side="right"))
        x = min(x, n - 1)
    else:
        x = int(start)
        if not 0 <= x < n:
            raise ValueError("start state out of range")
    u = rng.random(length - 1)
    path[0] = x
    for k in range(1, length):
        x = int(np.searchsorted(cum[x], u[k - 1], side="right"))
        x = min(x, n - 1)
        path[k] = x
    return path
