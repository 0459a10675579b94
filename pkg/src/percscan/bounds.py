"""Closed-form probability bounds for window selection and particle detection.

The rate constants in the detection bounds exist but have no known numeric
value; every evaluator therefore takes them as explicit arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidArgument


def _nonneg(**kw):
    for name, v in kw.items():
        if v < 0:
            raise InvalidArgument(f"{name} must be >= 0, got {v}")


@dataclass(frozen=True)
class SelectionBoundParams:
    """Contrast, noise variance and bound M, plus one ``(s1, excess)`` pair per
    competing window: ``s1`` particle pixels inside the window and ``excess``
    pixels of the window lying outside the noise-only reference square."""

    b_minus_a: float
    sigma2: float
    M: float
    windows: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.b_minus_a > 0:
            raise InvalidArgument("b_minus_a must be > 0")
        _nonneg(sigma2=self.sigma2, M=self.M)
        for s1, excess in self.windows:
            _nonneg(s1=s1, excess=excess)

    @property
    def C1(self) -> float:
        return 3.0 * self.b_minus_a**2

    @property
    def C2(self) -> float:
        return 12.0 * self.sigma2

    @property
    def C3(self) -> float:
        return 4.0 * self.M * self.b_minus_a


def selection_error_bound(p: SelectionBoundParams) -> float:
    """Upper bound on P(some competing window beats the noise-only square).

    A window without particle pixels contributes 1. The sum is not clipped.
    """
    total = 0.0
    for s1, excess in p.windows:
        if s1 == 0:
            total += 1.0
            continue
        denom = p.C2 * excess + p.C3 * s1
        total += 0.0 if denom == 0 else math.exp(-p.C1 * s1 * s1 / denom)
    return total


def missed_detection_rate(pi: float, phi1: float, C1: float) -> float:
    """exp(pi ln 2 - C1 phi1): rate at which P(missing a particle) vanishes."""
    _nonneg(pi=pi, phi1=phi1)
    if not C1 > 0:
        raise InvalidArgument("C1 must be > 0")
    if float(pi).is_integer():
        return math.ldexp(math.exp(-C1 * phi1), int(pi))
    return math.exp(pi * math.log(2.0) - C1 * phi1)


def joint_detection_lower_bound(pi: int, phi1: float, C1: float) -> float:
    """Lower bound on P(all ``pi`` particles detected), geometric factor included.

    Not clipped to [0, 1].
    """
    if pi < 1:
        raise InvalidArgument("pi must be >= 1")
    _nonneg(phi1=phi1)
    x = C1 * phi1
    if x == 0:
        raise InvalidArgument("C1 * phi1 must be nonzero")
    geometric = -math.expm1(-x * pi) / -math.expm1(-x)
    return 1.0 - math.ldexp(math.exp(-x), pi) * geometric


def single_particle_bound(phi1: float, C1: float, C1_prime: float | None = None) -> tuple[float, float]:
    """Both single-particle detection bounds.

    Returns ``(1 - exp(-C1 phi1), 1 - (phi1 + 1) exp(-C1' phi1))``; ``C1_prime``
    defaults to ``C1``.
    """
    C1_prime = C1 if C1_prime is None else C1_prime
    simple = -math.expm1(-C1 * phi1)
    refined = 1.0 - (phi1 + 1.0) * math.exp(-C1_prime * phi1)
    return simple, refined
