"""Lattice adjacency and black-cluster extraction on thresholded images.

The triangular lattice is embedded in the pixel grid by adding one diagonal
per cell, joining (i, j) with (i+1, j+1). Every interior site then has six
neighbours and the site-percolation structure is that of the triangular
lattice.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InvalidArgument

# Site percolation threshold of the triangular lattice (known exactly).
P_C_SITE_TRIANGULAR = 0.5


class LatticeKind(enum.Enum):
    SQUARE4 = "square"
    TRIANGULAR6 = "tri"

    @property
    def offsets(self) -> np.ndarray:
        return _OFFSETS[self]


# Row-major order of the neighbour coordinate relative to the centre.
_OFFSETS = {
    LatticeKind.SQUARE4: np.array([(-1, 0), (0, -1), (0, 1), (1, 0)], dtype=np.int64),
    LatticeKind.TRIANGULAR6: np.array(
        [(-1, -1), (-1, 0), (0, -1), (0, 1), (1, 0), (1, 1)], dtype=np.int64
    ),
}


@dataclass
class BinaryImage:
    """Thresholded picture: ``bits[i, j]`` is True for a black pixel."""

    bits: np.ndarray
    lattice: LatticeKind = LatticeKind.TRIANGULAR6

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=bool)
        if self.bits.ndim != 2 or 0 in self.bits.shape:
            raise InvalidArgument(f"expected a non-empty 2-D array, got shape {self.bits.shape}")
        self.lattice = LatticeKind(self.lattice)

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def n(self) -> int:
        h, w = self.bits.shape
        if h != w:
            raise InvalidArgument(f"image is not square: {h}x{w}")
        return h

    def black_count(self) -> int:
        return int(self.bits.sum())


@dataclass(eq=False)
class Cluster:
    """A maximal connected set of black pixels, rows of ``pixels`` in row-major order."""

    pixels: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.pixels)

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        """(row_min, col_min, row_max, col_max), inclusive."""
        lo = self.pixels.min(axis=0)
        hi = self.pixels.max(axis=0)
        return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])

    def pixel_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.pixels}

    def __repr__(self):
        return f"Cluster(size={self.size}, bbox={self.bbox})"


def _shape_of(n) -> tuple[int, int]:
    if isinstance(n, (tuple, list)):
        h, w = n
    else:
        h = w = n
    return int(h), int(w)


def neighbors(v: tuple[int, int], n, lattice: LatticeKind) -> list[tuple[int, int]]:
    """In-bounds lattice neighbours of ``v`` in row-major order.

    ``n`` is the side length, or an ``(height, width)`` pair.
    """
    h, w = _shape_of(n)
    i, j = v
    if not (0 <= i < h and 0 <= j < w):
        raise InvalidArgument(f"vertex {v} outside a {h}x{w} grid")
    out = []
    for di, dj in LatticeKind(lattice).offsets:
        a, b = i + int(di), j + int(dj)
        if 0 <= a < h and 0 <= b < w:
            out.append((a, b))
    return out


@njit(cache=True)
def _dfs_label(bits, offsets):
    h, w = bits.shape
    labels = np.full((h, w), -1, np.int64)
    stack = np.empty(h * w, np.int64)
    sizes = np.empty(h * w, np.int64)
    probes = 0
    count = 0
    for i in range(h):
        for j in range(w):
            if not bits[i, j] or labels[i, j] >= 0:
                continue
            labels[i, j] = count
            stack[0] = i * w + j
            top = 1
            size = 0
            while top > 0:
                top -= 1
                v = stack[top]
                vi = v // w
                vj = v - vi * w
                size += 1
                for k in range(offsets.shape[0]):
                    a = vi + offsets[k, 0]
                    b = vj + offsets[k, 1]
                    probes += 1
                    if a < 0 or a >= h or b < 0 or b >= w:
                        continue
                    if bits[a, b] and labels[a, b] < 0:
                        labels[a, b] = count
                        stack[top] = a * w + b
                        top += 1
            sizes[count] = size
            count += 1
    return labels, sizes[:count].copy(), probes


def label_black_clusters(img: BinaryImage) -> tuple[np.ndarray, np.ndarray, int]:
    """Label black clusters by iterative depth-first search.

    Returns ``(labels, sizes, probes)``. ``labels`` holds -1 on white pixels
    and the cluster index elsewhere; clusters are numbered in row-major order
    of their first pixel. ``probes`` counts neighbour inspections and is used
    for operation accounting.
    """
    return _dfs_label(img.bits, img.lattice.offsets)


def clusters_from_labels(labels: np.ndarray, sizes: np.ndarray, keep=None) -> list[Cluster]:
    """Materialise clusters, largest first (ties by row-major first pixel).

    ``keep`` optionally restricts to a boolean mask over cluster indices.
    """
    order = np.argsort(-sizes, kind="stable")
    if keep is not None:
        order = order[keep[order]]
    if len(order) == 0:
        return []
    flat = labels.ravel()
    wanted = np.zeros(len(sizes), dtype=bool)
    wanted[order] = True
    idx = np.flatnonzero(flat >= 0)
    idx = idx[wanted[flat[idx]]]
    # stable sort keeps row-major order inside each cluster
    idx = idx[np.argsort(flat[idx], kind="stable")]
    width = labels.shape[1]
    coords = np.stack([idx // width, idx % width], axis=1)
    sel_sizes = sizes[wanted]
    starts = np.concatenate([[0], np.cumsum(sel_sizes)[:-1]])
    by_label = {
        lab: coords[s : s + k]
        for lab, s, k in zip(np.flatnonzero(wanted), starts, sel_sizes)
    }
    return [Cluster(by_label[lab]) for lab in order]


def find_black_clusters(img: BinaryImage) -> list[Cluster]:
    labels, sizes, _ = label_black_clusters(img)
    return clusters_from_labels(labels, sizes)


def largest_cluster_size(img: BinaryImage) -> int:
    _, sizes, _ = label_black_clusters(img)
    return int(sizes.max()) if len(sizes) else 0
