"""Monte Carlo experiments behind the estimator and detector guarantees.

Every trial draws its randomness from a PCG64 stream keyed by
``(experiment code, n, seed, stream)``, so a row's value does not depend on
which other trials ran or in what order. Rows are emitted in canonical
``(n, seed)`` order regardless of ``jobs``.
"""
from __future__ import annotations

import ast
import csv
import datetime
import enum
import io
import json
import math
import operator
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import NamedTuple

import numpy as np

from . import grid
from .detect import DetectionConfig, detect_particles, particles_detected
from .errors import ConfigError, DegenerateContrast
from .grid import BinaryImage, LatticeKind
from .scan import OpCounter, empirical_F, estimate_a, estimate_b, estimate_sigma2, naive_mean, \
    sliding_window_sums
from .synth import NoiseModel, SceneSpec, add_noise, render_clean, require_noise_only_square, \
    square_mask
from .bounds import SelectionBoundParams, missed_detection_rate, selection_error_bound


class Experiment(enum.Enum):
    CONSISTENCY = "consistency"
    NAIVE_VS_SCAN = "naive-vs-scan"
    ERROR_RATES = "error-rates"
    COMPLEXITY = "complexity"
    PERCOLATION = "percolation"


_CODES = {e: k + 1 for k, e in enumerate(Experiment)}


class ExperimentRow(NamedTuple):
    experiment: str
    n: int
    seed: int  # -1 marks rows aggregated over seeds
    metric: str
    value: float


def trial_seed(experiment: Experiment, n: int, seed: int, stream: int = 0) -> list[int]:
    """Entropy for a trial's private random stream."""
    return [_CODES[Experiment(experiment)], n, seed, stream]


# -- window rules --------------------------------------------------------------

_FUNCS = {"ceil": math.ceil, "floor": math.floor, "ln": math.log, "log": math.log,
          "sqrt": math.sqrt, "log2": math.log2, "max": max, "min": min}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.FloorDiv: operator.floordiv, ast.Pow: operator.pow}


def eval_rule(rule: str | int, n: int) -> int:
    """Evaluate a window rule such as ``"ceil(2*ln(n))"`` or ``"n // 8"`` at ``n``."""
    if isinstance(rule, int):
        return rule

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "n":
            return n
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and not node.keywords:
            return _FUNCS[node.func.id](*map(ev, node.args))
        raise ConfigError(f"unsupported element in window rule {rule!r}")

    try:
        tree = ast.parse(str(rule), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse window rule {rule!r}") from exc
    value = ev(tree)
    if value != int(value) or value < 1:
        raise ConfigError(f"window rule {rule!r} gives {value} at n={n}; need a positive integer")
    return int(value)


DEFAULT_RULE = "ceil(2*ln(n))"


# -- scene layouts ---------------------------------------------------------------

def layout_particles(layout: str, n: int, count: int = 3, side: int | None = None) -> list[np.ndarray]:
    """Deterministic particle placements.

    ``quarter``: four n/4 squares covering exactly a quarter of the image
    (n divisible by 8). ``squares``: ``count`` squares of side ``side`` on a
    fixed diagonal-ish pattern. ``none``: empty scene.
    """
    if layout == "none":
        return []
    if layout == "quarter":
        if n % 8:
            raise ConfigError(f"quarter layout needs n divisible by 8, got {n}")
        s, offs = n // 4, (n // 8, 5 * n // 8)
        return [square_mask(r, c, s) for r in offs for c in offs]
    if layout == "squares":
        side = side or max(1, n // 12)
        anchors = [(0.2, 0.2), (0.55, 0.65), (0.75, 0.25), (0.3, 0.75), (0.8, 0.8)]
        if count > len(anchors):
            raise ConfigError(f"squares layout supports at most {len(anchors)} particles")
        out = []
        for fr, fc in anchors[:count]:
            r = min(int(fr * n), n - side)
            c = min(int(fc * n), n - side)
            out.append(square_mask(r, c, side))
        return out
    raise ConfigError(f"unknown layout {layout!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    n_values: tuple[int, ...] = (128, 256, 512)
    seeds: int = 50
    seed_offset: int = 0
    a: float = 0.0
    b: float = 1.0
    noise: NoiseModel = field(default_factory=lambda: NoiseModel.uniform(1.0))
    layout: str = "quarter"
    particle_count: int = 3
    particle_side: int | None = None
    phi0_rule: str | int = DEFAULT_RULE
    phi1_rule: str | int = DEFAULT_RULE
    significance_rule: str | int | None = None  # None: phi1
    lattice: LatticeKind = LatticeKind.TRIANGULAR6
    theta_override: float | None = None
    # error-rates: empty scenes may use their own noise and significance size
    empty_noise: NoiseModel | None = None
    empty_significance_rule: str | int | None = None
    c1_values: tuple[float, ...] = (0.05, 0.1)
    # complexity
    widths: tuple[int, ...] = (8, 64)
    timing: bool = True
    include_detect: bool = True
    repeats: int = 3
    # percolation
    p_values: tuple[float, ...] = (0.4, 0.6)
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "experiment", Experiment(self.experiment))
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        if not self.n_values or list(self.n_values) != sorted(set(self.n_values)):
            raise ConfigError("n_values must be non-empty and strictly ascending")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")

    def scene(self, n: int, empty: bool = False) -> SceneSpec:
        particles = [] if empty else layout_particles(
            self.layout, n, self.particle_count, self.particle_side)
        noise = (self.empty_noise or self.noise) if empty else self.noise
        return SceneSpec(n, self.a, self.b, particles, noise)

    def detection(self, n: int, empty: bool = False) -> DetectionConfig:
        phi1 = eval_rule(self.phi1_rule, n)
        rule = self.significance_rule
        if empty and self.empty_significance_rule is not None:
            rule = self.empty_significance_rule
        return DetectionConfig(
            phi0=eval_rule(self.phi0_rule, n),
            phi1=phi1,
            significance_size=None if rule is None else eval_rule(rule, n),
            lattice=self.lattice,
            threshold_override=self.theta_override,
        )


def default_config(experiment, **overrides) -> ExperimentConfig:
    """Defaults for each experiment; keyword overrides replace fields."""
    experiment = Experiment(experiment)
    base = {
        Experiment.CONSISTENCY: {},
        Experiment.NAIVE_VS_SCAN: {"phi0_rule": "n // 8"},
        Experiment.ERROR_RATES: {
            "n_values": (512,), "seeds": 100, "layout": "squares", "particle_side": 40,
            "noise": NoiseModel.gaussian(0.5), "phi0_rule": 13, "phi1_rule": 9,
            "significance_rule": 40, "empty_noise": NoiseModel.uniform(1.0),
            # the nominal 4*ceil(2*ln(n)) alarms on nearly every empty scene at the midpoint
            # threshold; use the size frozen from the pilot run instead
            "empty_significance_rule": load_thresholds()["false_alarm"]["significance_size"],
        },
        Experiment.COMPLEXITY: {"n_values": (1024, 2048), "seeds": 1},
        Experiment.PERCOLATION: {"n_values": (512,), "seeds": 100},
    }[experiment]
    base.update(overrides)
    return ExperimentConfig(experiment, **base)


# -- trials ------------------------------------------------------------------------

F_GRID = np.linspace(-2.0, 2.0, 401)


def _row(cfg, n, seed, metric, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite metric {metric}={value}")
    return ExperimentRow(cfg.experiment.value, n, seed, metric, value)


def _consistency_trial(cfg: ExperimentConfig, n: int, seed: int) -> list[ExperimentRow]:
    scene = cfg.scene(n)
    phi0, phi1 = eval_rule(cfg.phi0_rule, n), eval_rule(cfg.phi1_rule, n)
    require_noise_only_square(scene, phi0)
    y = add_noise(render_clean(scene), scene.noise, trial_seed(cfg.experiment, n, seed))
    a_hat = estimate_a(y, phi0)
    b_hat = estimate_b(y, phi1)
    grid_t = scene.a + F_GRID
    f_err = np.max(np.abs(empirical_F(y, a_hat, grid_t) - scene.noise.cdf(grid_t - scene.a)))
    return [
        _row(cfg, n, seed, "a_abs_err", abs(a_hat.value - scene.a)),
        _row(cfg, n, seed, "b_abs_err", abs(b_hat.value - scene.b)),
        _row(cfg, n, seed, "sigma2_abs_err", abs(estimate_sigma2(y, a_hat) - scene.noise.variance)),
        _row(cfg, n, seed, "F_sup_err", f_err),
    ]


def _naive_trial(cfg, n, seed):
    scene = cfg.scene(n)
    phi0 = eval_rule(cfg.phi0_rule, n)
    require_noise_only_square(scene, phi0)
    y = add_noise(render_clean(scene), scene.noise, trial_seed(cfg.experiment, n, seed))
    return [
        _row(cfg, n, seed, "naive_abs_err", abs(naive_mean(y) - scene.a)),
        _row(cfg, n, seed, "scan_abs_err", abs(estimate_a(y, phi0).value - scene.a)),
    ]


def _error_rates_trial(cfg, n, seed):
    rows = []
    scene = cfg.scene(n)
    det = cfg.detection(n)
    if det.threshold_override is None:
        require_noise_only_square(scene, det.phi0)
    if scene.particles:
        y = add_noise(render_clean(scene), scene.noise, trial_seed(cfg.experiment, n, seed, 0))
        try:
            hit = particles_detected(detect_particles(y, det), scene)
        except DegenerateContrast:
            hit = [False] * len(scene.particles)
        rows.append(_row(cfg, n, seed, "missed", 0 if all(hit) else 1))
    empty = cfg.scene(n, empty=True)
    y = add_noise(render_clean(empty), empty.noise, trial_seed(cfg.experiment, n, seed, 1))
    try:
        alarm = detect_particles(y, cfg.detection(n, empty=True)).decision == "ParticlesFound"
    except DegenerateContrast:
        alarm = False
        rows.append(_row(cfg, n, seed, "degenerate", 1))
    rows.append(_row(cfg, n, seed, "false_alarm", int(alarm)))
    return rows


def _best_time(fn, repeats):
    best = math.inf
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _complexity_trial(cfg, n, seed):
    rows = []
    y = add_noise(np.zeros((n, n)), NoiseModel.uniform(1.0), trial_seed(cfg.experiment, n, seed))
    for w in cfg.widths:
        if w > n:
            continue
        ops = OpCounter()
        sliding_window_sums(y, w, ops=ops)
        rows.append(_row(cfg, n, seed, f"sws_ops_w{w}", ops.adds))
        if cfg.timing:
            rows.append(_row(cfg, n, seed, f"sws_seconds_w{w}",
                             _best_time(lambda: sliding_window_sums(y, w), cfg.repeats)))
        if cfg.include_detect:
            det = DetectionConfig(w, w, lattice=cfg.lattice)
            ops = OpCounter()
            detect_particles(y, det, ops=ops)
            rows.append(_row(cfg, n, seed, f"detect_ops_w{w}", ops.total))
            if cfg.timing:
                rows.append(_row(cfg, n, seed, f"detect_seconds_w{w}",
                                 _best_time(lambda: detect_particles(y, det), cfg.repeats)))
    return rows


def _complexity_ratios(cfg, rows):
    """Width ratios at each n, and growth ratios between consecutive n."""
    val = {(r.n, r.metric): r.value for r in rows if r.seed == cfg.seed_offset}
    out = []
    widths = sorted(cfg.widths)
    for kind in ("sws_ops", "detect_ops"):
        for n in cfg.n_values:
            ws = [w for w in widths if (n, f"{kind}_w{w}") in val]
            if len(ws) >= 2:
                lo, hi = ws[0], ws[-1]
                out.append(_row(cfg, n, -1, f"{kind}_ratio_w{hi}_over_w{lo}",
                                val[n, f"{kind}_w{hi}"] / val[n, f"{kind}_w{lo}"]))
        for prev, n in zip(cfg.n_values, cfg.n_values[1:]):
            for w in widths:
                if (n, f"{kind}_w{w}") in val and (prev, f"{kind}_w{w}") in val:
                    out.append(_row(cfg, n, -1, f"{kind}_ratio_over_n{prev}_w{w}",
                                    val[n, f"{kind}_w{w}"] / val[prev, f"{kind}_w{w}"]))
    return out


def bernoulli_image(n: int, p: float, seed) -> np.ndarray:
    return np.random.default_rng(seed).random((n, n)) < p


def _percolation_trial(cfg, n, seed):
    rows = []
    for k, p in enumerate(cfg.p_values):
        bits = bernoulli_image(n, p, trial_seed(cfg.experiment, n, seed, k))
        rows.append(_row(cfg, n, seed, f"largest_p{p:g}",
                         grid.largest_cluster_size(BinaryImage(bits, cfg.lattice))))
    return rows


_TRIALS = {
    Experiment.CONSISTENCY: _consistency_trial,
    Experiment.NAIVE_VS_SCAN: _naive_trial,
    Experiment.ERROR_RATES: _error_rates_trial,
    Experiment.COMPLEXITY: _complexity_trial,
    Experiment.PERCOLATION: _percolation_trial,
}


def _run_one(args):
    cfg, n, seed = args
    return _TRIALS[cfg.experiment](cfg, n, seed)


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    seeds = range(cfg.seed_offset, cfg.seed_offset + cfg.seeds)
    units = [(cfg, n, s) for n in cfg.n_values for s in seeds]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            chunks = list(pool.map(_run_one, units))
    else:
        chunks = [_run_one(u) for u in units]
    rows = [r for chunk in chunks for r in chunk]
    if cfg.experiment is Experiment.ERROR_RATES:
        rows += _error_rate_summary(cfg, rows)
    elif cfg.experiment is Experiment.COMPLEXITY:
        rows += _complexity_ratios(cfg, rows)
    return rows


def _error_rate_summary(cfg, rows):
    out = []
    for n in cfg.n_values:
        for metric, name in (("missed", "miss_freq"), ("false_alarm", "false_alarm_freq")):
            vals = [r.value for r in rows if r.n == n and r.metric == metric]
            if vals:
                out.append(_row(cfg, n, -1, name, sum(vals) / len(vals)))
        phi1 = eval_rule(cfg.phi1_rule, n)
        pi = len(cfg.scene(n).particles)
        for c1 in cfg.c1_values:
            out.append(_row(cfg, n, -1, f"rate_bound_C1_{c1:g}", missed_detection_rate(pi, phi1, c1)))
    return out


def run_consistency(cfg): return run_experiment(replace(cfg, experiment=Experiment.CONSISTENCY))
def run_naive_vs_scan(cfg): return run_experiment(replace(cfg, experiment=Experiment.NAIVE_VS_SCAN))
def run_error_rates(cfg): return run_experiment(replace(cfg, experiment=Experiment.ERROR_RATES))
def run_complexity(cfg): return run_experiment(replace(cfg, experiment=Experiment.COMPLEXITY))
def run_percolation_phase(cfg): return run_experiment(replace(cfg, experiment=Experiment.PERCOLATION))


def metric_values(rows, metric: str, n: int | None = None) -> np.ndarray:
    return np.array([r.value for r in rows if r.metric == metric and (n is None or r.n == n)])


# -- CSV ---------------------------------------------------------------------------

CSV_HEADER = ("experiment", "n", "seed", "metric", "value")


def rows_to_csv(rows, deterministic_header: bool = False) -> str:
    buf = io.StringIO()
    if not deterministic_header:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        buf.write(f"# generated {stamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r.experiment, r.n, r.seed, r.metric, "%.12g" % r.value])
    return buf.getvalue()


def write_csv(rows, path, deterministic_header: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(rows_to_csv(rows, deterministic_header))


# -- selection-error dominance -------------------------------------------------------

@dataclass(frozen=True)
class SelectionSetup:
    """Small scene with a noise-only reference square and competing windows."""

    n: int
    side: int
    b_minus_a: float
    noise: NoiseModel
    particles: tuple  # of (top, left, height, width) rectangles
    reference: tuple[int, int]
    competitors: tuple  # of (row, col) origins

    def scene(self) -> SceneSpec:
        masks = [square_mask(t, l, w, h) for t, l, h, w in self.particles]
        return SceneSpec(self.n, 0.0, self.b_minus_a, masks, self.noise)

    def bound_params(self) -> SelectionBoundParams:
        occ = self.scene().occupancy()
        s = self.side
        r0, c0 = self.reference
        if occ[r0:r0 + s, c0:c0 + s].any():
            raise ConfigError("reference square touches a particle")
        ref = np.zeros_like(occ)
        ref[r0:r0 + s, c0:c0 + s] = True
        windows = []
        for r, c in self.competitors:
            sl = (slice(r, r + s), slice(c, c + s))
            windows.append((int(occ[sl].sum()), int((~ref[sl]).sum())))
        return SelectionBoundParams(self.b_minus_a, self.noise.variance, self.noise.bound, windows)


def selection_error_frequency(setup: SelectionSetup, seeds: int, base_seed: int = 0) -> float:
    """Share of seeds in which some competitor's window sum undercuts the reference's."""
    clean = render_clean(setup.scene())
    s = setup.side
    r0, c0 = setup.reference
    errors = 0
    for k in range(seeds):
        y = add_noise(clean, setup.noise, [base_seed, k])
        sums = sliding_window_sums(y, s).sums
        ref = sums[r0, c0]
        if any(sums[r, c] < ref for r, c in setup.competitors):
            errors += 1
    return errors / seeds


def selection_bound(setup: SelectionSetup) -> float:
    return selection_error_bound(setup.bound_params())


# -- frozen pilot thresholds ------------------------------------------------------------

def load_thresholds() -> dict:
    with resources.files("percscan").joinpath("data/thresholds.json").open(encoding="utf-8") as f:
        return json.load(f)
