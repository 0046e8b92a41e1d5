"""Reduced-variance cascade-size estimator.

Expected cascade size equals the expected number of nodes within horizon T of
the seed (delay-weighted shortest paths), so it can be sketched without
counting: give every node a fresh unit-exponential label, record for each
node v the smallest label within T-distance of v, and average; the sum of m
such minima is Gamma-distributed with rate equal to the neighborhood size,
making (m - 1) / sum an unbiased size estimate.  Delay randomness is tamed by
antithetic pairing of the per-edge uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from influtrack import _kernels
from influtrack.chain import SamplingDistribution
from influtrack.diffusion import ExponentialDelays
from influtrack.graphs import DirectedGraph


@dataclass(frozen=True)
class EstimatorConfig:
    """Sketch sizes and horizon for the cascade-size estimator.

    n_delay_sets is the number s of delay realizations (antithetic mode pairs
    them, so it must be even); n_label_sets is the number m of exponential
    label assignments per delay set.
    """

    n_delay_sets: int = 10
    n_label_sets: int = 10
    horizon: float = 1.5
    antithetic: bool = True

    def __post_init__(self):
        if self.n_delay_sets < 2:
            raise ValueError("need at least 2 delay sets")
        if self.antithetic and self.n_delay_sets % 2:
            raise ValueError("antithetic pairing needs an even number of delay sets")
        if self.n_label_sets < 3:
            raise ValueError("need at least 3 label sets for finite variance")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")


def delay_pairs_from_uniforms(uniforms: np.ndarray, edge_means: np.ndarray,
                              dist: ExponentialDelays) -> np.ndarray:
    """Mirror (s/2, E) uniforms into s delay sets: F^-1(U) then F^-1(1-U)."""
    uniforms = np.asarray(uniforms, dtype=np.float64)
    lower = dist.inverse_cdf(uniforms, edge_means)
    upper = dist.inverse_cdf(1.0 - uniforms, edge_means)
    return np.concatenate([lower, upper], axis=0)


def antithetic_delay_pairs(g: DirectedGraph, dist: ExponentialDelays, s: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Draw s delay sets as antithetic pairs sharing per-edge uniforms."""
    if s % 2:
        raise ValueError("s must be even for antithetic pairing")
    u = rng.random((s // 2, g.n_edges))
    return delay_pairs_from_uniforms(u, dist.edge_means(g), dist)


def independent_delay_sets(g: DirectedGraph, dist: ExponentialDelays, s: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Draw s mutually independent delay sets (variance reduction off)."""
    u = rng.random((s, g.n_edges))
    return dist.inverse_cdf(u, dist.edge_means(g))


def min_label_within_horizon(g: DirectedGraph, delays: np.ndarray,
                             labels: np.ndarray, horizon: float) -> np.ndarray:
    """Smallest label within `horizon` of each node, for all nodes at once.

    Processes nodes in ascending label order with pruned reverse-graph
    searches; equivalent to a forward search per node but near-linear overall.
    """
    delays = np.ascontiguousarray(delays, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    if delays.shape != (g.n_edges,):
        raise ValueError("need one delay per edge")
    if labels.shape != (g.n_nodes,):
        raise ValueError("need one label per node")
    indptr, indices, edge_ids = g.csr_reverse
    return _kernels.min_labels(indptr, indices, edge_ids, delays, labels,
                               float(horizon))


def min_label_brute_force(g: DirectedGraph, delays: np.ndarray,
                          labels: np.ndarray, horizon: float) -> np.ndarray:
    """Reference implementation: one forward search per node."""
    delays = np.ascontiguousarray(delays, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    indptr, indices, edge_ids = g.csr
    out = np.empty(g.n_nodes)
    for v in range(g.n_nodes):
        dist = _kernels.dijkstra_times(indptr, indices, edge_ids, delays,
                                       np.array([v], dtype=np.int64), float(horizon))
        out[v] = labels[dist <= horizon].min()
    return out


def estimate_node_influences(g: DirectedGraph, dist: ExponentialDelays,
                             config: EstimatorConfig,
                             rng: np.random.Generator | None = None,
                             *,
                             delay_rng: np.random.Generator | None = None,
                             label_rng: np.random.Generator | None = None) -> np.ndarray:
    """One pass of the sketch estimator: X[v] estimates node v's influence.

    Randomness comes from two streams (delay uniforms, exponential labels);
    pass a single rng to have them split internally, or pass both streams
    explicitly to freeze one while varying the other.
    """
    if (delay_rng is None) != (label_rng is None):
        raise ValueError("pass both delay_rng and label_rng, or neither")
    if delay_rng is None:
        if rng is None:
            raise ValueError("an rng is required")
        delay_rng, label_rng = rng.spawn(2)
    s, m = config.n_delay_sets, config.n_label_sets
    if config.antithetic:
        delay_sets = antithetic_delay_pairs(g, dist, s, delay_rng)
    else:
        delay_sets = independent_delay_sets(g, dist, s, delay_rng)
    label_sets = label_rng.exponential(1.0, (s, m, g.n_nodes))
    indptr, indices, edge_ids = g.csr_reverse
    X = _kernels.node_influence_sums(indptr, indices, edge_ids, delay_sets,
                                     label_sets, float(config.horizon))
    # Analytically positive; clip only guards against rounding.
    return np.maximum(X, 0.0)


def estimate_support_influences(g: DirectedGraph, dist: ExponentialDelays,
                                config: EstimatorConfig, support,
                                rng: np.random.Generator | None = None,
                                *,
                                delay_rng: np.random.Generator | None = None,
                                label_rng: np.random.Generator | None = None) -> np.ndarray:
    """X restricted to the given support nodes, via forward searches.

    Consumes the delay and label streams exactly like estimate_node_influences
    and returns the same values for the support entries, but skips the work
    for all other nodes; this is the hot path inside the optimizer loop.
    """
    if (delay_rng is None) != (label_rng is None):
        raise ValueError("pass both delay_rng and label_rng, or neither")
    if delay_rng is None:
        if rng is None:
            raise ValueError("an rng is required")
        delay_rng, label_rng = rng.spawn(2)
    support = np.atleast_1d(np.asarray(support, dtype=np.int64))
    if len(support) == 0 or support.min() < 0 or support.max() >= g.n_nodes:
        raise ValueError("support nodes out of range")
    s = config.n_delay_sets
    if config.antithetic:
        delay_sets = antithetic_delay_pairs(g, dist, s, delay_rng)
    else:
        delay_sets = independent_delay_sets(g, dist, s, delay_rng)
    label_sets = label_rng.exponential(1.0, (s, config.n_label_sets, g.n_nodes))
    indptr, indices, edge_ids = g.csr
    X = _kernels.support_influence_sums(indptr, indices, edge_ids, delay_sets,
                                        label_sets, support, float(config.horizon))
    return np.maximum(X, 0.0)


@dataclass(frozen=True)
class InfluenceEstimate:
    """Per-node sketch estimates plus their seed-weighted combination."""

    node_influences: np.ndarray
    c_hat: float


def estimate_conditional_influence(g: DirectedGraph,
                                   sampling: SamplingDistribution,
                                   dist: ExponentialDelays,
                                   config: EstimatorConfig,
                                   rng: np.random.Generator | None = None,
                                   *,
                                   delay_rng: np.random.Generator | None = None,
                                   label_rng: np.random.Generator | None = None
                                   ) -> InfluenceEstimate:
    """Seed-averaged influence estimate sum_v p(v) X(v) for one graph."""
    for v in sampling.support:
        if not 0 <= v < g.n_nodes:
            raise ValueError(f"support node {v} not in graph")
    X = estimate_node_influences(g, dist, config, rng,
                                 delay_rng=delay_rng, label_rng=label_rng)
    c_hat = float(np.dot(sampling.probs, X[np.array(sampling.support)]))
    return InfluenceEstimate(X, c_hat)
