"""Truncated dyadic systems: intervals, grids, windows, Haar functions.

Intervals are identified by (grid_id, scale j, translation k); endpoints are
rebuilt on demand from exact rational arithmetic, so no floating accumulation
ever enters the geometry.  Two grid families are supported: the standard grid
and its one-third shift, where the scale-j translation is (-1)^j * 2^-j / 3.
All types are immutable and every operation is pure, so concurrent reads are
safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import CoverNotFoundError, InvalidConfigurationError

STANDARD = "standard"
THIRD_SHIFT = "third_shift"


def grid_shift(rule: str, j: int) -> Fraction:
    """Translation applied to the scale-j lattice, in units of 2^-j."""
    if rule == STANDARD:
        return Fraction(0)
    if rule == THIRD_SHIFT:
        return Fraction(-1 if j % 2 else 1, 3)
    raise InvalidConfigurationError(f"unknown grid rule {rule!r}")


@dataclass(frozen=True)
class DyadicGrid:
    """A dyadic system, determined by its shift rule. base_length is 1."""

    shift_rule: str = STANDARD
    base_length: int = 1

    def __post_init__(self):
        grid_shift(self.shift_rule, 0)  # validates the rule
        if self.base_length != 1:
            raise InvalidConfigurationError("base_length is fixed to 1")

    @property
    def grid_id(self) -> str:
        return self.shift_rule

    def interval(self, j: int, k: int) -> "DyadicInterval":
        return DyadicInterval(self.shift_rule, j, k)


def standard_grid() -> DyadicGrid:
    return DyadicGrid(STANDARD)


def third_shift_grid() -> DyadicGrid:
    return DyadicGrid(THIRD_SHIFT)


@dataclass(frozen=True, eq=True)
class DyadicInterval:
    """Half-open interval [left, right) of length 2^-j in grid `grid_id`."""

    grid_id: str
    j: int
    k: int

    @property
    def length(self) -> Fraction:
        return Fraction(1, 1) * Fraction(2) ** (-self.j)

    @property
    def left(self) -> Fraction:
        return (Fraction(self.k) + grid_shift(self.grid_id, self.j)) * Fraction(2) ** (-self.j)

    @property
    def right(self) -> Fraction:
        return self.left + self.length

    @property
    def mid(self) -> Fraction:
        return self.left + self.length / 2

    def endpoints(self) -> tuple[float, float]:
        return float(self.left), float(self.right)

    @property
    def left_child(self) -> "DyadicInterval":
        # Child translation follows from matching exact endpoints across scales.
        offset = 0
        if self.grid_id == THIRD_SHIFT:
            offset = -1 if self.j % 2 else 1
        return DyadicInterval(self.grid_id, self.j + 1, 2 * self.k + offset)

    @property
    def right_child(self) -> "DyadicInterval":
        base = self.left_child
        return DyadicInterval(self.grid_id, self.j + 1, base.k + 1)

    @property
    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return self.left_child, self.right_child

    @property
    def parent(self) -> "DyadicInterval":
        offset = 0
        if self.grid_id == THIRD_SHIFT:
            offset = -1 if (self.j - 1) % 2 else 1
        k = (self.k - offset) // 2
        return DyadicInterval(self.grid_id, self.j - 1, k)

    @property
    def sibling(self) -> "DyadicInterval":
        parent = self.parent
        lc, rc = parent.children
        return rc if self == lc else lc

    def contains_point(self, x) -> bool:
        xf = Fraction(x) if not isinstance(x, Fraction) else x
        return self.left <= xf < self.right

    def contains(self, other: "DyadicInterval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def label(self) -> str:
        return f"{self.grid_id}:j={self.j}:k={self.k}"


@dataclass(frozen=True)
class TruncationWindow:
    """Spatial window [lo, hi) with scale range j_min..j_max.

    Finest cells live at scale j_max; their count N = (hi - lo) * 2^j_max.
    Window endpoints must be multiples of the coarsest length 2^-j_min so the
    standard grid tiles the window exactly at every enumerated scale.
    """

    lo: Fraction
    hi: Fraction
    j_min: int
    j_max: int

    def __post_init__(self):
        if self.hi <= self.lo:
            raise InvalidConfigurationError("empty window")
        if self.j_min > self.j_max:
            raise InvalidConfigurationError("j_min must not exceed j_max")
        coarse = Fraction(2) ** (-self.j_min)
        for edge in (self.lo, self.hi):
            if (edge / coarse).denominator != 1:
                raise InvalidConfigurationError(
                    "window endpoints must be multiples of the coarsest scale"
                )
        if self.n_cells > 8192:
            raise InvalidConfigurationError(
                f"cell count {self.n_cells} exceeds the hard cap 8192"
            )

    @property
    def span(self) -> Fraction:
        return self.hi - self.lo

    @property
    def cell_width(self) -> Fraction:
        return Fraction(2) ** (-self.j_max)

    @property
    def n_cells(self) -> int:
        n = self.span / self.cell_width
        return int(n)

    def cell_edges(self) -> np.ndarray:
        w = self.cell_width
        return np.array([float(self.lo + i * w) for i in range(self.n_cells + 1)])

    def cell_midpoints(self) -> np.ndarray:
        w = self.cell_width
        return np.array(
            [float(self.lo + i * w + w / 2) for i in range(self.n_cells)]
        )

    def contains_interval(self, left: Fraction, right: Fraction) -> bool:
        return self.lo <= left and right <= self.hi

    def cell_slice(self, interval: DyadicInterval) -> tuple[int, int]:
        """Indices [i0, i1) of the finest cells tiling a cell-aligned interval."""
        w = self.cell_width
        i0 = (interval.left - self.lo) / w
        i1 = (interval.right - self.lo) / w
        if i0.denominator != 1 or i1.denominator != 1:
            raise InvalidConfigurationError(
                f"interval {interval.label()} is not aligned to the cell lattice"
            )
        return int(i0), int(i1)

    def slice_of(self, left: Fraction, right: Fraction) -> tuple[int, int]:
        w = self.cell_width
        i0 = (Fraction(left) - self.lo) / w
        i1 = (Fraction(right) - self.lo) / w
        if i0.denominator != 1 or i1.denominator != 1:
            raise InvalidConfigurationError("endpoints not aligned to the cell lattice")
        return int(i0), int(i1)


def make_window(lo, hi, j_min: int, j_max: int) -> TruncationWindow:
    return TruncationWindow(Fraction(lo), Fraction(hi), int(j_min), int(j_max))


def default_window(j_max: int = 7) -> TruncationWindow:
    """The stock window [-4, 4) with coarse scale -2; j_max=7 gives N=1024."""
    return make_window(-4, 4, -2, j_max)


def enumerate_intervals(grid: DyadicGrid, window: TruncationWindow) -> list[DyadicInterval]:
    """All grid intervals fully inside the window, scale-major then left-to-right.

    Intervals protruding outside the window are dropped.
    """
    out: list[DyadicInterval] = []
    for j in range(window.j_min, window.j_max + 1):
        length = Fraction(2) ** (-j)
        shift = grid_shift(grid.shift_rule, j) * length
        # smallest k with k*length + shift >= lo
        k = -(-(window.lo - shift) // length)  # ceil division on Fractions
        k = int(k)
        while True:
            left = Fraction(k) * length + shift
            right = left + length
            if right > window.hi:
                break
            out.append(DyadicInterval(grid.grid_id, j, k))
            k += 1
    return out


def haar_eval(interval: DyadicInterval, x) -> np.ndarray | float:
    """Haar function of the interval: +|I|^-1/2 on the left child, -|I|^-1/2
    on the right child, 0 outside.  Mean zero, unit L2 norm."""
    amp = 1.0 / np.sqrt(float(interval.length))
    left = float(interval.left)
    mid = float(interval.mid)
    right = float(interval.right)
    xv = np.asarray(x, dtype=float)
    vals = np.where(
        (xv >= left) & (xv < mid),
        amp,
        np.where((xv >= mid) & (xv < right), -amp, 0.0),
    )
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(vals)
    return vals


def haar_cell_values(interval: DyadicInterval, window: TruncationWindow) -> np.ndarray:
    """Exact cell values of the Haar function on the finest-cell lattice.

    Requires a cell-aligned interval at scale <= j_max - 1.
    """
    if interval.j > window.j_max - 1:
        raise InvalidConfigurationError(
            f"Haar function at scale {interval.j} is not resolvable at j_max {window.j_max}"
        )
    i0, i1 = window.cell_slice(interval)
    m0, _ = window.cell_slice(interval.right_child)
    vals = np.zeros(window.n_cells)
    amp = 1.0 / np.sqrt(float(interval.length))
    vals[i0:m0] = amp
    vals[m0:i1] = -amp
    return vals


def find_cover(
    lo,
    hi,
    grids: Sequence[DyadicGrid],
    window: TruncationWindow,
    max_ratio: float = 4.0,
) -> DyadicInterval:
    """Smallest interval Q in any of the grids with [lo, hi) inside Q and
    |Q| <= max_ratio * (hi - lo).

    Scales are scanned from fine to coarse; raises CoverNotFoundError when no
    grid interval of admissible size contains the target.
    """
    lo_f = Fraction(lo)
    hi_f = Fraction(hi)
    if hi_f <= lo_f:
        raise InvalidConfigurationError("empty target interval")
    length = hi_f - lo_f
    budget = length * Fraction(max_ratio).limit_denominator(10**9)
    j_fine = -_floor_log2_at_least(length)
    # scan |Q| = 2^-j ascending from the first scale >= length
    j = j_fine
    while Fraction(2) ** (-j) <= budget:
        for grid in grids:
            scale_len = Fraction(2) ** (-j)
            shift = grid_shift(grid.shift_rule, j) * scale_len
            k = int((lo_f - shift) // scale_len)
            cand = DyadicInterval(grid.grid_id, j, k)
            if cand.left <= lo_f and hi_f <= cand.right:
                if window.contains_interval(cand.left, cand.right):
                    return cand
        j -= 1
    raise CoverNotFoundError(
        f"no cover of [{float(lo_f)}, {float(hi_f)}) within ratio {max_ratio}",
        float(lo_f),
        float(hi_f),
    )


def _floor_log2_at_least(length: Fraction) -> int:
    """Smallest integer m with 2^m >= length."""
    m = 0
    two = Fraction(2)
    if two**m < length:
        while two**m < length:
            m += 1
    else:
        while two ** (m - 1) >= length:
            m -= 1
    return m
