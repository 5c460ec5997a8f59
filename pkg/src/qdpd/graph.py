"""Undirected communication graphs, their Laplacians and spectra."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_CONNECTIVITY_TOL = 1e-9


class TopologyError(ValueError):
    """Raised for malformed or unsupported graph descriptions."""


class DisconnectedGraphError(TopologyError):
    """Raised when the algebraic connectivity is (numerically) zero."""


@dataclass(frozen=True)
class Spectrum:
    """Ascending Laplacian eigenvalues; the smallest is ~0 for any graph."""

    eigenvalues: np.ndarray

    @property
    def sigma2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def sigma_max(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass(frozen=True)
class NetworkGraph:
    node_count: int
    edges: frozenset
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray
    spectrum: Spectrum
    neighbors: tuple = field(repr=False, default=())

    @property
    def sigma2(self) -> float:
        return self.spectrum.sigma2

    @property
    def sigma_max(self) -> float:
        return self.spectrum.sigma_max


def from_edges(node_count: int, edges) -> NetworkGraph:
    """Build a graph from an iterable of unordered node pairs.

    The graph must be connected; edge weights are 0/1 only.
    """
    if node_count < 1:
        raise TopologyError(f"node_count must be positive, got {node_count}")
    adjacency = np.zeros((node_count, node_count))
    normalized = set()
    for i, j in edges:
        if i == j:
            raise TopologyError(f"self-loop on node {i}")
        if not (0 <= i < node_count and 0 <= j < node_count):
            raise TopologyError(f"edge ({i},{j}) out of range for {node_count} nodes")
        normalized.add((min(i, j), max(i, j)))
        adjacency[i, j] = adjacency[j, i] = 1.0
    degree = adjacency.sum(axis=1)
    laplacian = np.diag(degree) - adjacency
    eigenvalues = np.linalg.eigvalsh(laplacian)
    spec = Spectrum(eigenvalues=eigenvalues)
    if node_count > 1 and spec.sigma2 <= _CONNECTIVITY_TOL:
        raise DisconnectedGraphError(
            f"graph is disconnected (second eigenvalue {spec.sigma2:.3e})"
        )
    nbrs = tuple(tuple(np.flatnonzero(adjacency[i]).tolist()) for i in range(node_count))
    return NetworkGraph(
        node_count=node_count,
        edges=frozenset(normalized),
        adjacency=adjacency,
        degree=degree.astype(int),
        laplacian=laplacian,
        spectrum=spec,
        neighbors=nbrs,
    )


def build_ring(n: int) -> NetworkGraph:
    """Cycle graph on n >= 3 nodes; every degree is 2."""
    if n < 3:
        raise TopologyError(f"a ring needs at least 3 nodes, got {n}")
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def build_complete(n: int) -> NetworkGraph:
    if n < 2:
        raise TopologyError(f"a complete graph needs at least 2 nodes, got {n}")
    return from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def spectrum(g: NetworkGraph) -> Spectrum:
    """Cached ascending eigenvalue list of the Laplacian."""
    return g.spectrum


def apply_laplacian(g: NetworkGraph, v: np.ndarray, block_dim: int = 1) -> np.ndarray:
    """Apply (L (x) I_n) to a stacked vector of N blocks of dimension n.

    Evaluated through neighbor differences sum_j (v_i - v_j) rather than an
    explicit Kronecker product.
    """
    v = np.asarray(v, dtype=float)
    expected = g.node_count * block_dim
    if v.size != expected:
        raise ValueError(f"expected {expected} entries, got {v.size}")
    blocks = v.reshape(g.node_count, block_dim)
    out = g.degree[:, None] * blocks - g.adjacency @ blocks
    return out.reshape(v.shape)
