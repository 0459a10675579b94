"""Percolation-based detection of multiple objects in noisy images,
with linear-time spatial scan estimators for the intensity levels."""
from .detect import DetectionConfig, DetectionReport, compute_threshold, detect_particles, \
    particles_detected, threshold_image
from .grid import BinaryImage, Cluster, LatticeKind, find_black_clusters, largest_cluster_size, \
    neighbors
from .scan import ScanEstimate, Window, empirical_F, estimate_a, estimate_b, estimate_sigma2, \
    naive_mean, sliding_window_sums
from .synth import NoiseModel, SceneSpec, add_noise, has_noise_only_square, render_clean

__version__ = "0.1.0"
