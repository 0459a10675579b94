import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import union_find_partition
from percscan import bench
from percscan.errors import InvalidArgument
from percscan.grid import (
    BinaryImage,
    LatticeKind,
    find_black_clusters,
    label_black_clusters,
    largest_cluster_size,
    neighbors,
)

TRI, SQ = LatticeKind.TRIANGULAR6, LatticeKind.SQUARE4


def partition(clusters):
    return {frozenset(c.pixel_set()) for c in clusters}


def test_interior_triangular_neighbors():
    assert neighbors((2, 2), 5, TRI) == [(1, 1), (1, 2), (2, 1), (2, 3), (3, 2), (3, 3)]


def test_corner_triangular_neighbors():
    assert set(neighbors((0, 0), 4, TRI)) == {(0, 1), (1, 0), (1, 1)}


def test_square_neighbors():
    assert neighbors((1, 1), 3, SQ) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_neighbors_out_of_bounds():
    with pytest.raises(InvalidArgument):
        neighbors((3, 0), 3, SQ)
    with pytest.raises(InvalidArgument):
        neighbors((0, -1), 3, TRI)


@given(st.integers(1, 9), st.data())
def test_neighbor_counts_and_symmetry(n, data):
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, n - 1))
    for lattice, cap in ((SQ, 4), (TRI, 6)):
        nb = neighbors((i, j), n, lattice)
        assert len(nb) <= cap
        assert nb == sorted(nb)
        for u in nb:
            assert (i, j) in neighbors(u, n, lattice)


def test_all_white_has_no_clusters():
    assert find_black_clusters(BinaryImage(np.zeros((8, 8), bool))) == []
    assert largest_cluster_size(BinaryImage(np.zeros((8, 8), bool))) == 0


@pytest.mark.parametrize("lattice", [SQ, TRI])
def test_all_black_is_one_cluster(lattice):
    clusters = find_black_clusters(BinaryImage(np.ones((3, 3), bool), lattice))
    assert [c.size for c in clusters] == [9]
    assert largest_cluster_size(BinaryImage(np.ones((4, 4), bool), lattice)) == 16


def test_diagonal_convention():
    bits = np.zeros((4, 4), bool)
    bits[0, 0] = bits[1, 1] = True
    assert [c.size for c in find_black_clusters(BinaryImage(bits, TRI))] == [2]
    assert [c.size for c in find_black_clusters(BinaryImage(bits, SQ))] == [1, 1]
    assert largest_cluster_size(BinaryImage(bits, TRI)) == 2
    # the other diagonal is not an edge
    bits = np.zeros((4, 4), bool)
    bits[0, 1] = bits[1, 0] = True
    assert [c.size for c in find_black_clusters(BinaryImage(bits, TRI))] == [1, 1]


def test_cluster_ordering():
    bits = np.zeros((6, 6), bool)
    bits[0, 4] = True                 # size 1, first in row-major order
    bits[2, 0:2] = True               # size 2
    bits[4, 3:5] = True               # size 2, later first pixel
    bits[5, 0] = True                 # size 1
    clusters = find_black_clusters(BinaryImage(bits, SQ))
    assert [c.size for c in clusters] == [2, 2, 1, 1]
    assert [tuple(c.pixels[0]) for c in clusters] == [(2, 0), (4, 3), (0, 4), (5, 0)]
    assert clusters[0].bbox == (2, 0, 2, 1)


def test_random_16x16_matches_union_find():
    rng = np.random.default_rng(16)
    bits = rng.random((16, 16)) < 0.5
    for lattice in (SQ, TRI):
        got = partition(find_black_clusters(BinaryImage(bits, lattice)))
        assert got == union_find_partition(bits, lattice is TRI)


@settings(max_examples=60, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 20), st.integers(1, 20))))
def test_partition_properties(bits):
    tri = find_black_clusters(BinaryImage(bits, TRI))
    sq = find_black_clusters(BinaryImage(bits, SQ))
    for clusters in (tri, sq):
        assert sum(c.size for c in clusters) == bits.sum()
        seen = set()
        for c in clusters:
            px = c.pixel_set()
            assert len(px) == c.size
            assert not px & seen
            seen |= px
            assert all(bits[i, j] for i, j in px)
        sizes = [c.size for c in clusters]
        assert sizes == sorted(sizes, reverse=True)
    # square clusters nest inside triangular ones
    tri_sets = [c.pixel_set() for c in tri]
    for c in sq:
        assert any(c.pixel_set() <= t for t in tri_sets)
    assert partition(tri) == union_find_partition(bits, True)


def test_clusters_are_connected():
    rng = np.random.default_rng(3)
    img = BinaryImage(rng.random((24, 24)) < 0.55, TRI)
    for c in find_black_clusters(img):
        px = c.pixel_set()
        start = next(iter(px))
        reached, todo = {start}, [start]
        while todo:
            v = todo.pop()
            for u in neighbors(v, 24, TRI):
                if u in px and u not in reached:
                    reached.add(u)
                    todo.append(u)
        assert reached == px


def test_large_image_does_not_recurse():
    # a serpentine path would overflow a recursive DFS
    n = 1024
    bits = np.zeros((n, n), bool)
    bits[::2, :] = True
    bits[1::4, -1] = True
    bits[3::4, 0] = True
    img = BinaryImage(bits, SQ)
    assert largest_cluster_size(img) == bits.sum()


def test_labels_mark_white_pixels():
    bits = np.array([[1, 0], [0, 1]], bool)
    labels, sizes, probes = label_black_clusters(BinaryImage(bits, TRI))
    assert labels[0, 1] == -1 and labels[1, 0] == -1
    assert labels[0, 0] == labels[1, 1] == 0
    assert list(sizes) == [2]
    assert probes == 12


def test_rectangular_images():
    bits = np.ones((3, 7), bool)
    assert largest_cluster_size(BinaryImage(bits, SQ)) == 21
    with pytest.raises(InvalidArgument):
        BinaryImage(bits).n


@pytest.mark.slow
def test_percolation_phases_on_triangular_lattice():
    thresholds = bench.load_thresholds()["percolation"]
    n = 512
    high = low = 0
    for seed in range(100):
        big = bench.bernoulli_image(n, 0.6, [99, seed, 1])
        small = bench.bernoulli_image(n, 0.4, [99, seed, 0])
        high += largest_cluster_size(BinaryImage(big, TRI)) >= 0.1 * n * n
        low += largest_cluster_size(BinaryImage(small, TRI)) <= thresholds["largest_bound_p_low"]
    assert high >= 95
    assert low >= 95
