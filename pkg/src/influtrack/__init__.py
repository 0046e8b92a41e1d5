"""Influence-seeding optimization and tracking over Markov-switching networks.

The package simulates continuous-time cascades on directed graphs whose
topology switches according to a finite-state Markov chain, estimates expected
cascade sizes with a reduced-variance sketch estimator, and tracks the optimal
seed-sampling parameter with simultaneous-perturbation stochastic
approximation, optionally through a hidden-Markov filter when only part of the
network is observable.
"""

from influtrack.graphs import DirectedGraph, SbmParams, sbm_sample, induced_subgraph
from influtrack.diffusion import ExponentialDelays, infection_times, influence_oracle
from influtrack.estimator import EstimatorConfig, estimate_node_influences
from influtrack.chain import GraphProcessModel, SamplingDistribution, stationary_distribution

__all__ = [
    "DirectedGraph",
    "SbmParams",
    "sbm_sample",
    "induced_subgraph",
    "ExponentialDelays",
    "infection_times",
    "influence_oracle",
    "EstimatorConfig",
    "estimate_node_influences",
    "GraphProcessModel",
    "SamplingDistribution",
    "stationary_distribution",
]

__version__ = "0.1.0"
