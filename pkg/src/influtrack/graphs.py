"""Directed graphs on a fixed node set, stochastic block model sampling, and
edge-list file IO.

Nodes are integers 0..n_nodes-1.  An edge (j, i) means j can pass influence to
i.  Every edge carries a class tag (0 = within-community, 1 = between) that
downstream code uses to pick the delay distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

WITHIN = 0
BETWEEN = 1

_CLASS_CHARS = {WITHIN: "w", BETWEEN: "b"}
_CHAR_CLASSES = {"w": WITHIN, "b": BETWEEN}


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable directed graph with class-tagged edges.

    Edges are canonicalized to lexicographic (src, dst) order on construction;
    two graphs are equal iff node count, edge arrays, and class arrays match.
    """

    n_nodes: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int32))
    edge_class: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n_nodes)
        if n <= 0:
            raise ValueError("graph must have at least one node")
        edges = np.asarray(self.edges, dtype=np.int32).reshape(-1, 2)
        cls = self.edge_class
        if cls is None:
            cls = np.zeros(len(edges), dtype=np.uint8)
        cls = np.asarray(cls, dtype=np.uint8)
        if cls.shape != (len(edges),):
            raise ValueError("edge_class must have one entry per edge")
        if len(edges):
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self loops are not allowed")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            cls = cls[order]
            dup = (np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)
            if np.any(dup):
                k = int(np.argmax(dup))
                raise ValueError(f"duplicate edge ({edges[k, 0]}, {edges[k, 1]})")
        edges.setflags(write=False)
        cls.setflags(write=False)
        object.__setattr__(self, "n_nodes", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "edge_class", cls)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.edge_class, other.edge_class)
        )

    def __hash__(self):
        return hash(self.canonical_key())

    def canonical_key(self) -> tuple:
        """Structural identity: node count plus the sorted edge list."""
        return (self.n_nodes, self.edges.tobytes())

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Forward adjacency as (indptr, dst indices, edge ids)."""
        return _build_csr(self.n_nodes, self.edges[:, 0], self.edges[:, 1])

    @cached_property
    def csr_reverse(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Reverse adjacency as (indptr, src indices, edge ids)."""
        return _build_csr(self.n_nodes, self.edges[:, 1], self.edges[:, 0])


def _build_csr(n, tail, head):
    order = np.argsort(tail, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, np.asarray(tail, dtype=np.int64) + 1, 1)
    np.cumsum(indptr, out=indptr)
    indices = np.asarray(head, dtype=np.int32)[order]
    edge_ids = order.astype(np.int32)
    indices.setflags(write=False)
    edge_ids.setflags(write=False)
    indptr.setflags(write=False)
    return indptr, indices, edge_ids


@dataclass(frozen=True)
class SbmParams:
    """Two-or-more-block stochastic block model over ordered node pairs."""

    block_sizes: tuple[int, ...]
    p_within: float
    p_between: float
    seed: int | None = None

    def __post_init__(self):
        sizes = tuple(int(b) for b in self.block_sizes)
        if not sizes or any(b <= 0 for b in sizes):
            raise ValueError("block_sizes must be positive")
        for name in ("p_within", "p_between"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def n_nodes(self) -> int:
        return sum(self.block_sizes)

    def block_of(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.block_sizes)), self.block_sizes)


def sbm_sample(params: SbmParams, rng: np.random.Generator | None = None) -> DirectedGraph:
    """Draw one SBM graph; each ordered pair (j, i), j != i, gets an edge
    independently with p_within (same block) or p_between (different blocks).

    Edges within a block are tagged WITHIN, across blocks BETWEEN.
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    n = params.n_nodes
    block = params.block_of()
    same = block[:, None] == block[None, :]
    p = np.where(same, params.p_within, params.p_between)
    np.fill_diagonal(p, 0.0)
    hit = rng.random((n, n)) < p
    src, dst = np.nonzero(hit)
    cls = np.where(same[src, dst], WITHIN, BETWEEN).astype(np.uint8)
    return DirectedGraph(n, np.column_stack([src, dst]), cls)


def induced_subgraph(g: DirectedGraph, nodes) -> tuple[DirectedGraph, np.ndarray]:
    """Induced subgraph on the given nodes, relabeled 0..k-1 in sorted order.

    Returns (subgraph, original_ids) where original_ids[new_id] = old id.
    """
    ids = np.unique(np.asarray(nodes, dtype=np.int64))
    if len(ids) == 0:
        raise ValueError("need at least one node")
    if ids.min() < 0 or ids.max() >= g.n_nodes:
        raise ValueError("node id out of range")
    new_id = np.full(g.n_nodes, -1, dtype=np.int64)
    new_id[ids] = np.arange(len(ids))
    keep = (new_id[g.edges[:, 0]] >= 0) & (new_id[g.edges[:, 1]] >= 0)
    sub_edges = new_id[g.edges[keep]]
    return DirectedGraph(len(ids), sub_edges, g.edge_class[keep]), ids


def save_edge_list(g: DirectedGraph, path) -> None:
    """Write the graph as text: node count line, then 'src dst class' lines."""
    with open(path, "w") as fh:
        fh.write(f"{g.n_nodes}\n")
        for (j, i), c in zip(g.edges, g.edge_class):
            fh.write(f"{j} {i} {_CLASS_CHARS[int(c)]}\n")


def load_edge_list(path) -> DirectedGraph:
    """Read a graph written by save_edge_list.  '#' starts a comment line."""
    n_nodes = None
    edges = []
    classes = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n_nodes is None:
                if len(parts) != 1:
                    raise ValueError(f"{path}:{lineno}: expected node count, got {line!r}")
                try:
                    n_nodes = int(parts[0])
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: node count is not an integer") from None
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'src dst class', got {line!r}")
            try:
                j, i = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: endpoints must be integers") from None
            if parts[2] not in _CHAR_CLASSES:
                raise ValueError(f"{path}:{lineno}: edge class must be 'w' or 'b'")
            if j == i:
                raise ValueError(f"{path}:{lineno}: self loop on node {j}")
            edges.append((j, i))
            classes.append(_CHAR_CLASSES[parts[2]])
    if n_nodes is None:
        raise ValueError(f"{path}: empty graph file")
    try:
        return DirectedGraph(n_nodes, np.array(edges, dtype=np.int32).reshape(-1, 2),
                             np.array(classes, dtype=np.uint8))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
