"""Multiple-object detection: scan estimates, midpoint threshold, percolation clusters."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .errors import DegenerateContrast, InvalidArgument
from .grid import BinaryImage, Cluster, LatticeKind
from .scan import OpCounter, ScanEstimate, estimate_a, estimate_b

REPORT_SCHEMA = "percscan.report/1"


@dataclass(frozen=True)
class DetectionConfig:
    phi0: int
    phi1: int
    significance_size: int | None = None  # defaults to phi1
    lattice: LatticeKind = LatticeKind.TRIANGULAR6
    threshold_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "lattice", LatticeKind(self.lattice))
        if self.phi0 < 1 or self.phi1 < 1:
            raise InvalidArgument("window sides must be >= 1")
        if self.significance_size is not None and self.significance_size < 1:
            raise InvalidArgument("significance_size must be >= 1")

    @property
    def min_cluster(self) -> int:
        return self.phi1 if self.significance_size is None else self.significance_size


@dataclass
class DetectionReport:
    theta: float
    a_hat: ScanEstimate | None
    b_hat: ScanEstimate | None
    significance_size: int
    shape: tuple[int, int]
    n_black: int
    n_clusters: int
    largest_cluster: int
    clusters: list[Cluster] = field(default_factory=list)

    @property
    def overridden(self) -> bool:
        return self.a_hat is None

    @property
    def count(self) -> int:
        return len(self.clusters)

    @property
    def decision(self) -> str:
        return "ParticlesFound" if self.clusters else "NoParticles"

    def to_dict(self, pixels: bool = True) -> dict:
        def est(e):
            if e is None:
                return "overridden"
            return {"value": e.value, "origin": list(e.window_origin), "side": e.window_side}

        clusters = []
        for c in self.clusters:
            d = {"size": c.size, "bbox": list(c.bbox)}
            if pixels:
                d["pixels"] = c.pixels.tolist()
            clusters.append(d)
        decision = {"kind": self.decision}
        if self.clusters:
            decision["count"] = self.count
        return {
            "schema": REPORT_SCHEMA,
            "shape": list(self.shape),
            "theta": self.theta,
            "a_hat": est(self.a_hat),
            "b_hat": est(self.b_hat),
            "significance_size": self.significance_size,
            "clusters_all": {
                "black_pixels": self.n_black,
                "clusters": self.n_clusters,
                "largest": self.largest_cluster,
            },
            "clusters": clusters,
            "decision": decision,
        }

    def to_json(self, pixels: bool = True) -> str:
        return json.dumps(self.to_dict(pixels), indent=1) + "\n"


def compute_threshold(a_hat: float, b_hat: float) -> float:
    return (a_hat + b_hat) / 2.0


def threshold_image(img, theta: float, lattice=LatticeKind.TRIANGULAR6) -> BinaryImage:
    """Black where the pixel value is >= theta (ties are black)."""
    return BinaryImage(np.asarray(img, dtype=float) >= theta, lattice)


def detect_particles(img, cfg: DetectionConfig, *, ops: OpCounter | None = None) -> DetectionReport:
    y = np.asarray(img, dtype=float)
    if y.ndim != 2:
        raise InvalidArgument(f"expected a 2-D image, got shape {y.shape}")
    side = min(y.shape)

    if cfg.threshold_override is not None:
        a_hat = b_hat = None
        theta = float(cfg.threshold_override)
    else:
        if cfg.phi0 > side or cfg.phi1 > side:
            raise InvalidArgument(f"window sides ({cfg.phi0}, {cfg.phi1}) exceed image side {side}")
        a_hat = estimate_a(y, cfg.phi0, ops=ops)
        b_hat = estimate_b(y, cfg.phi1, ops=ops)
        if a_hat.value >= b_hat.value:
            raise DegenerateContrast(
                f"background estimate {a_hat.value:.6g} is not below object estimate {b_hat.value:.6g}"
            )
        theta = compute_threshold(a_hat.value, b_hat.value)

    binary = threshold_image(y, theta, cfg.lattice)
    labels, sizes, probes = grid.label_black_clusters(binary)
    if ops is not None:
        ops.comparisons += y.size + probes
    keep = sizes >= cfg.min_cluster
    clusters = grid.clusters_from_labels(labels, sizes, keep) if keep.any() else []
    return DetectionReport(
        theta=theta,
        a_hat=a_hat,
        b_hat=b_hat,
        significance_size=cfg.min_cluster,
        shape=y.shape,
        n_black=int(sizes.sum()),
        n_clusters=len(sizes),
        largest_cluster=int(sizes.max()) if len(sizes) else 0,
        clusters=clusters,
    )


def particles_detected(report: DetectionReport, scene) -> list[bool]:
    """Per particle: does some significant cluster cover enough of it?

    A particle counts as detected when a significant cluster shares at least
    ``min(significance_size, particle size)`` pixels with it. A merged
    cluster therefore detects every particle it sufficiently overlaps.
    """
    if tuple(report.shape) != (scene.n, scene.n):
        raise InvalidArgument(f"report shape {report.shape} does not match scene side {scene.n}")
    owner = scene.label_map()
    found = [False] * len(scene.particles)
    need = [min(report.significance_size, len(m)) for m in scene.particles]
    for c in report.clusters:
        hits = owner[c.pixels[:, 0], c.pixels[:, 1]]
        counts = np.bincount(hits[hits >= 0], minlength=len(found))
        for k, cnt in enumerate(counts):
            if cnt >= need[k] and need[k] > 0:
                found[k] = True
    return found
