"""Command-line interface.

Subcommands: run (execute a scenario file), oracle (Monte-Carlo influence of a
seed set on a graph file), ab-variance (antithetic vs independent variance
comparison for a scenario), estimate (one-shot sketch estimate on a graph
file).  Exit codes: 0 success, 2 configuration error, 3 runtime inconsistency.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from influtrack.chain import SamplingDistribution, trig_two_point_weights
from influtrack.diffusion import ExponentialDelays, influence_oracle
from influtrack.errors import ConfigError, RuntimeInconsistencyError
from influtrack.estimator import EstimatorConfig, estimate_node_influences
from influtrack.graphs import load_edge_list
from influtrack import harness
from influtrack import rng as rngmod


def _add_delay_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mean-within", type=float, default=1.0,
                   help="mean delay on within-community edges")
    p.add_argument("--mean-between", type=float, default=10.0,
                   help="mean delay on between-community edges")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="influtrack",
        description="Influence-seeding optimization over switching networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("--config", required=True, help="scenario file path")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario master seed")
    p_run.add_argument("--out-dir", default=None,
                       help="override the scenario output directory")

    p_or = sub.add_parser("oracle", help="Monte-Carlo influence estimate")
    p_or.add_argument("--graph", required=True, help="edge-list file")
    p_or.add_argument("--node", type=int, action="append", required=True,
                      help="seed node (repeatable)")
    p_or.add_argument("--horizon", type=float, default=1.5)
    p_or.add_argument("--replications", type=int, default=100_000,
                      help="number of delay samples")
    p_or.add_argument("--seed", type=int, default=0)
    _add_delay_flags(p_or)

    p_ab = sub.add_parser("ab-variance",
                          help="antithetic vs independent variance comparison")
    p_ab.add_argument("--config", required=True, help="scenario file path")
    p_ab.add_argument("--replications", type=int, default=200)
    p_ab.add_argument("--seed", type=int, default=None)
    p_ab.add_argument("--out-dir", default=None,
                      help="also write the report to DIR/ab_variance.txt")

    p_est = sub.add_parser("estimate", help="one-shot sketch estimate")
    p_est.add_argument("--graph", required=True, help="edge-list file")
    p_est.add_argument("--horizon", type=float, default=1.5)
    p_est.add_argument("--delay-sets", type=int, default=10)
    p_est.add_argument("--label-sets", type=int, default=10)
    p_est.add_argument("--seed", type=int, default=0)
    p_est.add_argument("--support", type=int, action="append", default=None,
                       help="seed-candidate node (repeatable)")
    p_est.add_argument("--theta", type=float, default=None,
                       help="cos^2/sin^2 weights over a 2-node support")
    _add_delay_flags(p_est)
    return parser


def _cmd_run(args) -> int:
    result, out = harness.run_scenario_file(args.config, seed=args.seed,
                                            out_dir=args.out_dir)
    print(f"wrote {out / 'trace.csv'} and {out / 'summary.txt'}")
    print((out / "summary.txt").read_text(), end="")
    return 0


def _cmd_oracle(args) -> int:
    try:
        g = load_edge_list(args.graph)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    dist = ExponentialDelays(args.mean_within, args.mean_between)
    try:
        res = influence_oracle(g, dist, args.node, args.horizon,
                               args.replications,
                               rngmod.stream(args.seed, "oracle"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"nodes: {' '.join(str(v) for v in args.node)}")
    print(f"samples: {res.n_samples}")
    print(f"mean: {res.mean:.6f}")
    print(f"std_error: {res.std_error:.6f}")
    print(f"ci95: [{res.ci_low:.6f}, {res.ci_high:.6f}]")
    return 0


def _cmd_ab_variance(args) -> int:
    cfg = harness.load_scenario_config(args.config)
    scenario = harness.build_scenario(cfg, master_seed=args.seed,
                                      base_dir=Path(args.config).parent)
    try:
        report = harness.ab_variance_report(scenario, args.replications)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    text = report.format()
    print(text)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ab_variance.txt").write_text(text + "\n")
        print(f"wrote {out / 'ab_variance.txt'}")
    return 0


def _cmd_estimate(args) -> int:
    try:
        g = load_edge_list(args.graph)
        config = EstimatorConfig(args.delay_sets, args.label_sets, args.horizon)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    X = estimate_node_influences(
        g, ExponentialDelays(args.mean_within, args.mean_between), config,
        delay_rng=rngmod.stream(args.seed, "delays"),
        label_rng=rngmod.stream(args.seed, "labels"))
    for v, x in enumerate(X):
        print(f"{v} {x:.6f}")
    if args.support:
        support = args.support
        if args.theta is not None:
            if len(support) != 2:
                raise ConfigError("--theta needs exactly two --support nodes")
            probs = trig_two_point_weights(args.theta)
        else:
            probs = np.full(len(support), 1.0 / len(support))
        try:
            dist = SamplingDistribution(tuple(support), probs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for v in dist.support:
            if not 0 <= v < g.n_nodes:
                raise ConfigError(f"support node {v} not in graph")
        c_hat = float(np.dot(dist.probs, X[np.array(dist.support)]))
        print(f"c_hat {c_hat:.6f}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "oracle": _cmd_oracle,
    "ab-variance": _cmd_ab_variance,
    "estimate": _cmd_estimate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeInconsistencyError as exc:
        print(f"inconsistency: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
