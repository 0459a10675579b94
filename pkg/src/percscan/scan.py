"""Spatial scan estimators of background level, object level and noise law.

All window sums come from :func:`sliding_window_sums`, which runs a 1-D
sliding window down every pixel column and then a second one across the
resulting column sums. Each step of either sweep costs one addition and one
subtraction, so the work is linear in the number of pixels whatever the
window side. The sweeps are vectorised across the orthogonal axis; the
arithmetic (and its order) is the scalar scheme's.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument


class OpCounter:
    """Tally of scalar arithmetic operations performed by an instrumented call."""

    def __init__(self):
        self.adds = 0
        self.comparisons = 0

    @property
    def total(self) -> int:
        return self.adds + self.comparisons

    def __repr__(self):
        return f"OpCounter(adds={self.adds}, comparisons={self.comparisons})"


class Window(NamedTuple):
    row: int
    col: int
    side: int

    def slices(self):
        return (slice(self.row, self.row + self.side), slice(self.col, self.col + self.side))


@dataclass(frozen=True)
class WindowSums:
    w: int
    sums: np.ndarray

    @property
    def m(self) -> int:
        """Window positions per axis (square images)."""
        return self.sums.shape[0]


@dataclass(frozen=True)
class ScanEstimate:
    value: float
    window_side: int
    window_origin: tuple[int, int]

    @property
    def window(self) -> Window:
        return Window(*self.window_origin, self.window_side)


def default_window_side(n: int) -> int:
    """ceil(2 ln n), at least 1: grows faster than sqrt(log n)."""
    return max(1, math.ceil(2.0 * math.log(n))) if n > 1 else 1


def _sweep(x: np.ndarray, w: int, axis: int, compensated: bool,
           ops: OpCounter | None) -> np.ndarray:
    """Length-``w`` running sums along ``axis``, vectorised over the other axis."""
    if w == 1:
        # a unit window is the pixel itself; the running update would only add rounding
        return x.copy()
    shape = list(x.shape)
    shape[axis] -= w - 1
    out = np.empty(shape)
    # views with the sweep axis first; no data is moved
    xv, ov = np.moveaxis(x, axis, 0), np.moveaxis(out, axis, 0)
    steps = ov.shape[0]
    s = xv[0].copy()
    c = np.zeros_like(s)
    for k in range(1, w):
        if compensated:
            s, c = _kahan(s, c, xv[k])
        else:
            s += xv[k]
    ov[0] = s
    for r in range(1, steps):
        if compensated:
            s, c = _kahan(s, c, xv[r + w - 1])
            s, c = _kahan(s, c, -xv[r - 1])
            ov[r] = s
        else:
            row = ov[r]
            np.add(ov[r - 1], xv[r + w - 1], out=row)
            np.subtract(row, xv[r - 1], out=row)
    if ops is not None:
        ops.adds += xv.shape[1] * ((w - 1) + 2 * (steps - 1))
    return out


def _kahan(s, c, x):
    y = x - c
    t = s + y
    return t, (t - s) - y


def sliding_window_sums(img, w: int, *, compensated: bool = False,
                        ops: OpCounter | None = None) -> WindowSums:
    """Sums over every ``w`` x ``w`` window, indexed by top-left corner."""
    y = np.asarray(img, dtype=float)
    if y.ndim != 2:
        raise InvalidArgument(f"expected a 2-D image, got shape {y.shape}")
    if not 1 <= w <= min(y.shape):
        raise InvalidArgument(f"window side {w} outside [1, {min(y.shape)}]")
    cols = _sweep(y, w, 0, compensated, ops)
    return WindowSums(w, _sweep(cols, w, 1, compensated, ops))


def _pick(img, side, *, largest: bool, ops: OpCounter | None) -> ScanEstimate:
    ws = sliding_window_sums(img, side, ops=ops)
    flat = ws.sums.ravel()
    k = int(np.argmax(flat) if largest else np.argmin(flat))
    if ops is not None:
        ops.comparisons += flat.size - 1
    r, c = divmod(k, ws.sums.shape[1])
    return ScanEstimate(float(flat[k]) / (side * side), side, (r, c))


def estimate_a(img, phi0: int, *, ops: OpCounter | None = None) -> ScanEstimate:
    """Background level: mean of the ``phi0`` window with the smallest sum.

    Ties go to the row-major first window.
    """
    return _pick(img, phi0, largest=False, ops=ops)


def estimate_b(img, phi1: int, *, ops: OpCounter | None = None) -> ScanEstimate:
    """Object level: mean of the ``phi1`` window with the largest sum."""
    return _pick(img, phi1, largest=True, ops=ops)


def _window_values(img, window: Window | ScanEstimate) -> np.ndarray:
    if isinstance(window, ScanEstimate):
        window = window.window
    window = Window(*window)
    y = np.asarray(img, dtype=float)
    h, w = y.shape
    if window.side < 1 or window.row < 0 or window.col < 0 or \
            window.row + window.side > h or window.col + window.side > w:
        raise InvalidArgument(f"{window} does not fit a {h}x{w} image")
    return y[window.slices()].ravel()


def estimate_sigma2(img, window=None, *, phi0: int | None = None) -> float:
    """Sample variance (divisor |K| - 1) over the background window.

    Without an explicit ``window`` the window chosen by :func:`estimate_a`
    with side ``phi0`` is used.
    """
    if window is None:
        if phi0 is None:
            raise InvalidArgument("give either a window or phi0")
        window = estimate_a(img, phi0).window
    v = _window_values(img, window)
    if len(v) < 2:
        raise InvalidArgument("variance needs a window side of at least 2")
    return float(np.sum((v - v.mean()) ** 2) / (len(v) - 1))


def empirical_F(img, window, t):
    """Fraction of window values <= t (scalar or array ``t``)."""
    v = np.sort(_window_values(img, window))
    res = np.searchsorted(v, np.asarray(t, dtype=float), side="right") / len(v)
    return float(res) if np.ndim(res) == 0 else res


def naive_mean(img) -> float:
    """Whole-image average. Biased for ``a`` whenever particles cover a
    non-vanishing share of the image."""
    return float(np.mean(img))
