import math

import numpy as np
import pytest

from qdpd import graph


def test_ring12_spectrum(ring12):
    # Cycle eigenvalues are 2 - 2cos(2 pi k / 12).
    assert ring12.sigma2 == pytest.approx(0.26794919243112270647, abs=1e-14)
    assert ring12.sigma_max == pytest.approx(4.0, abs=1e-12)
    expected = sorted(2.0 - 2.0 * math.cos(2.0 * math.pi * k / 12) for k in range(12))
    np.testing.assert_allclose(ring12.spectrum.eigenvalues, expected, atol=1e-12)


def test_ring_structure(ring12):
    assert ring12.node_count == 12
    assert len(ring12.edges) == 12
    assert all(d == 2 for d in ring12.degree)
    assert set(ring12.neighbors[0]) == {1, 11}
    row_sums = ring12.laplacian.sum(axis=1)
    np.testing.assert_allclose(row_sums, 0.0, atol=1e-12)


def test_complete_graph_spectrum():
    g = graph.build_complete(5)
    # K_n has eigenvalues {0, n, ..., n}.
    assert g.sigma2 == pytest.approx(5.0, abs=1e-12)
    assert g.sigma_max == pytest.approx(5.0, abs=1e-12)


def test_from_edges_path():
    g = graph.from_edges(3, [(0, 1), (1, 2)])
    assert g.sigma2 == pytest.approx(1.0, abs=1e-12)
    assert g.sigma_max == pytest.approx(3.0, abs=1e-12)


def test_disconnected_rejected():
    with pytest.raises(graph.DisconnectedGraphError):
        graph.from_edges(4, [(0, 1), (2, 3)])


def test_self_loop_rejected():
    with pytest.raises(graph.TopologyError):
        graph.from_edges(3, [(0, 0), (1, 2)])


def test_edge_out_of_range():
    with pytest.raises(graph.TopologyError):
        graph.from_edges(3, [(0, 5)])


def test_small_ring_rejected():
    with pytest.raises(graph.TopologyError):
        graph.build_ring(2)


def test_apply_laplacian_matches_kron(ring12):
    rng = np.random.default_rng(7)
    for n in (1, 3):
        v = rng.normal(size=12 * n)
        dense = np.kron(ring12.laplacian, np.eye(n))
        np.testing.assert_allclose(
            graph.apply_laplacian(ring12, v, n), dense @ v, atol=1e-12
        )


def test_apply_laplacian_kills_consensus(ring12):
    v = np.full(12, 3.7)
    np.testing.assert_allclose(graph.apply_laplacian(ring12, v), 0.0, atol=1e-12)


def test_apply_laplacian_size_check(ring12):
    with pytest.raises(ValueError):
        graph.apply_laplacian(ring12, np.zeros(5))
