"""Synthetic scenes: piecewise-constant images plus i.i.d. additive noise.

Randomness comes from numpy's PCG64 generator. A single call to
:func:`add_noise` draws one value per pixel in row-major order, so an image
is reproducible from its seed on any platform numpy supports.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError, InvalidArgument

SCENE_SCHEMA = "percscan.scene/1"


class NoiseKind(enum.Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    TWO_POINT = "two_point"
    STUDENT_T = "student_t"


@dataclass(frozen=True)
class NoiseModel:
    """Centred noise distribution.

    ``scale`` is the half-width M for uniform and two-point noise, the
    standard deviation for Gaussian noise and the scale factor for Student t
    (which additionally needs ``dof`` > 2 so that the variance is finite).
    """

    kind: NoiseKind
    scale: float
    dof: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not (self.scale >= 0 and math.isfinite(self.scale)):
            raise InvalidArgument(f"noise scale must be finite and >= 0, got {self.scale}")
        if self.kind is NoiseKind.STUDENT_T and (self.dof is None or self.dof <= 2):
            raise InvalidArgument("Student t noise needs dof > 2 for a finite variance")

    @classmethod
    def uniform(cls, M):
        return cls(NoiseKind.UNIFORM, float(M))

    @classmethod
    def gaussian(cls, sigma):
        return cls(NoiseKind.GAUSSIAN, float(sigma))

    @classmethod
    def two_point(cls, M):
        return cls(NoiseKind.TWO_POINT, float(M))

    @classmethod
    def student_t(cls, nu, scale=1.0):
        return cls(NoiseKind.STUDENT_T, float(scale), float(nu))

    @property
    def variance(self) -> float:
        s = self.scale
        if self.kind is NoiseKind.UNIFORM:
            return s * s / 3.0
        if self.kind is NoiseKind.STUDENT_T:
            return s * s * self.dof / (self.dof - 2.0)
        return s * s

    @property
    def bound(self) -> float:
        """Almost-sure bound on |noise| (inf when unbounded)."""
        if self.kind in (NoiseKind.UNIFORM, NoiseKind.TWO_POINT):
            return self.scale
        return 0.0 if self.scale == 0 else math.inf

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        s = self.scale
        if s == 0:
            return (t >= 0).astype(float)
        if self.kind is NoiseKind.UNIFORM:
            return np.clip((t + s) / (2 * s), 0.0, 1.0)
        if self.kind is NoiseKind.GAUSSIAN:
            return stats.norm.cdf(t, scale=s)
        if self.kind is NoiseKind.TWO_POINT:
            return np.where(t >= s, 1.0, np.where(t >= -s, 0.5, 0.0))
        return stats.t.cdf(t, self.dof, scale=s)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        s = self.scale
        if self.kind is NoiseKind.UNIFORM:
            return rng.uniform(-s, s, size=shape)
        if self.kind is NoiseKind.GAUSSIAN:
            return rng.normal(0.0, s, size=shape)
        if self.kind is NoiseKind.TWO_POINT:
            return np.where(rng.random(size=shape) < 0.5, -s, s)
        return s * rng.standard_t(self.dof, size=shape)

    def to_dict(self) -> dict:
        if self.kind is NoiseKind.GAUSSIAN:
            return {"kind": self.kind.value, "sigma": self.scale}
        if self.kind is NoiseKind.STUDENT_T:
            return {"kind": self.kind.value, "nu": self.dof, "scale": self.scale}
        return {"kind": self.kind.value, "M": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        kind = NoiseKind(d["kind"])
        if kind is NoiseKind.GAUSSIAN:
            return cls.gaussian(d["sigma"])
        if kind is NoiseKind.STUDENT_T:
            return cls.student_t(d["nu"], d.get("scale", 1.0))
        return cls(kind, float(d["M"]))


def square_mask(top: int, left: int, side: int, height: int | None = None) -> np.ndarray:
    """Pixel coordinates of an axis-aligned rectangle, row-major."""
    height = side if height is None else height
    ii, jj = np.mgrid[top : top + height, left : left + side]
    return np.stack([ii.ravel(), jj.ravel()], axis=1)


def disc_mask(ci: float, cj: float, radius: float, n: int) -> np.ndarray:
    ii, jj = np.mgrid[0:n, 0:n]
    inside = (ii - ci) ** 2 + (jj - cj) ** 2 <= radius**2
    return np.argwhere(inside)


@dataclass
class SceneSpec:
    n: int
    a: float
    b: float
    particles: list = field(default_factory=list)
    noise: NoiseModel = field(default_factory=lambda: NoiseModel.uniform(0.0))

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument(f"n must be positive, got {self.n}")
        if not self.b > self.a:
            raise InvalidArgument(f"object intensity b={self.b} must exceed background a={self.a}")
        masks = []
        for m in self.particles:
            m = np.asarray(m, dtype=np.int64).reshape(-1, 2)
            if len(m) and (m.min() < 0 or m.max() >= self.n):
                raise InvalidArgument("particle mask extends outside the image")
            masks.append(m)
        self.particles = masks

    def label_map(self) -> np.ndarray:
        """Particle index per pixel, -1 on background."""
        out = np.full((self.n, self.n), -1, dtype=np.int64)
        for k, m in enumerate(self.particles):
            hit = out[m[:, 0], m[:, 1]]
            if (hit >= 0).any() or len(np.unique(m, axis=0)) != len(m):
                raise InvalidArgument(f"particle {k} overlaps another particle or itself")
            out[m[:, 0], m[:, 1]] = k
        return out

    def occupancy(self) -> np.ndarray:
        return self.label_map() >= 0

    def particle_fraction(self) -> float:
        return float(self.occupancy().mean())


def render_clean(scene: SceneSpec) -> np.ndarray:
    """Noise-free image: ``b`` on particle pixels, ``a`` elsewhere."""
    occ = scene.occupancy()
    return np.where(occ, float(scene.b), float(scene.a))


def add_noise(clean: np.ndarray, noise: NoiseModel, seed) -> np.ndarray:
    """Add i.i.d. noise drawn from a PCG64 stream seeded with ``seed``."""
    clean = np.asarray(clean, dtype=float)
    rng = np.random.default_rng(seed)
    return clean + noise.sample(rng, clean.shape)


def has_noise_only_square(scene: SceneSpec, phi0: int):
    """Row-major-first origin of a ``phi0`` square free of particles, else None."""
    from .scan import sliding_window_sums

    if not 1 <= phi0 <= scene.n:
        raise InvalidArgument(f"phi0={phi0} outside [1, {scene.n}]")
    counts = sliding_window_sums(scene.occupancy().astype(float), phi0).sums
    free = np.flatnonzero(counts.ravel() == 0)
    if len(free) == 0:
        return None
    r, c = divmod(int(free[0]), counts.shape[1])
    return (r, c)


def require_noise_only_square(scene: SceneSpec, phi0: int) -> tuple[int, int]:
    witness = has_noise_only_square(scene, phi0)
    if witness is None:
        raise ConfigError(f"no {phi0}x{phi0} background-only square in the scene")
    return witness


# -- scene files -------------------------------------------------------------

def _mask_to_runs(mask: np.ndarray) -> list[list[int]]:
    runs = []
    for i, j in sorted(map(tuple, mask.tolist())):
        if runs and runs[-1][0] == i and runs[-1][1] + runs[-1][2] == j:
            runs[-1][2] += 1
        else:
            runs.append([i, j, 1])
    return runs


def _runs_to_mask(runs) -> np.ndarray:
    coords = [(i, j + k) for i, j, length in runs for k in range(length)]
    return np.array(coords, dtype=np.int64).reshape(-1, 2)


def scene_to_dict(scene: SceneSpec) -> dict:
    return {
        "schema": SCENE_SCHEMA,
        "n": scene.n,
        "a": scene.a,
        "b": scene.b,
        "noise": scene.noise.to_dict(),
        "particles": [_mask_to_runs(m) for m in scene.particles],
    }


def scene_from_dict(d: dict) -> SceneSpec:
    if d.get("schema") != SCENE_SCHEMA:
        raise ConfigError(f"unsupported scene schema {d.get('schema')!r}")
    return SceneSpec(
        n=int(d["n"]),
        a=float(d["a"]),
        b=float(d["b"]),
        particles=[_runs_to_mask(r) for r in d["particles"]],
        noise=NoiseModel.from_dict(d["noise"]),
    )


def save_scene(scene: SceneSpec, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(scene_to_dict(scene), f, indent=1)
        f.write("\n")


def load_scene(path) -> SceneSpec:
    with open(path, encoding="utf-8") as f:
        return scene_from_dict(json.load(f))
