"""A2 weights: evaluation, exact interval integrals, and diagnostics.

Weight kinds carry closed-form integrals wherever the kind admits one
(constant, power, spiked-lattice, and powers thereof); a composite fallback
uses Gauss-Legendre quadrature.  A BloomWeight bundles a source weight mu and
a target weight lam together with the derived intermediary nu = sqrt(mu/lam).
Weights are immutable; every method is pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateWeightError,
    DivergedIntegralError,
    InvalidConfigurationError,
    InvalidParameterError,
)
from .grids import DyadicGrid, TruncationWindow, enumerate_intervals

_GL_NODES = 32


def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


class Weight:
    """Base class: positive function with pointwise evaluation and interval
    integrals for both w and 1/w."""

    label: str = "weight"

    def eval(self, x):
        raise NotImplementedError

    def integral(self, a, b) -> float:
        raise NotImplementedError

    def inv(self) -> "Weight":
        raise NotImplementedError

    def power(self, s: float) -> "Weight":
        """The weight w^s, with closed forms preserved where possible."""
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)

    def average(self, a, b) -> float:
        return self.integral(a, b) / (float(b) - float(a))

    def cell_averages(self, window: TruncationWindow) -> np.ndarray:
        edges = window.cell_edges()
        width = float(window.cell_width)
        vals = np.array(
            [self.integral(edges[i], edges[i + 1]) for i in range(window.n_cells)]
        )
        return vals / width


@dataclass(frozen=True)
class ConstantWeight(Weight):
    value: float = 1.0

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise InvalidParameterError("constant weight must be positive and finite")

    @property
    def label(self) -> str:
        return f"const({self.value:g})"

    def eval(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value) if np.ndim(x) else self.value

    def integral(self, a, b) -> float:
        return self.value * (float(b) - float(a))

    def inv(self) -> "ConstantWeight":
        return ConstantWeight(1.0 / self.value)

    def power(self, s: float) -> "ConstantWeight":
        return ConstantWeight(self.value**s)


@dataclass(frozen=True)
class PowerWeight(Weight):
    """w(x) = coeff * |x - center|^exponent.  A2 membership needs |exponent| < 1."""

    exponent: float
    center: float = 1.0 / 3.0
    coeff: float = 1.0

    def __post_init__(self):
        if not -1.0 < self.exponent < 1.0:
            raise InvalidParameterError(
                "power weight exponent must lie in (-1, 1) for local integrability of w and 1/w"
            )
        if not self.coeff > 0:
            raise InvalidParameterError("power weight coefficient must be positive")

    @property
    def label(self) -> str:
        return f"|x-{self.center:g}|^{self.exponent:g}" + (
            "" if self.coeff == 1.0 else f"*{self.coeff:g}"
        )

    def eval(self, x):
        return self.coeff * np.abs(np.asarray(x, dtype=float) - self.center) ** self.exponent

    def integral(self, a, b) -> float:
        # antiderivative of |t|^alpha is sign(t) |t|^(1+alpha) / (1+alpha)
        alpha = self.exponent
        ta, tb = float(a) - self.center, float(b) - self.center

        def prim(t):
            return math.copysign(abs(t) ** (1.0 + alpha), t) / (1.0 + alpha)

        return self.coeff * (prim(tb) - prim(ta))

    def inv(self) -> "PowerWeight":
        return PowerWeight(-self.exponent, self.center, 1.0 / self.coeff)

    def power(self, s: float) -> Weight:
        alpha = self.exponent * s
        if not -1.0 < alpha < 1.0:
            raise InvalidParameterError(f"power {s} leaves the integrable range")
        return PowerWeight(alpha, self.center, self.coeff**s)


def _periodic_measure(u: float, v: float, period: float, width: float) -> float:
    """Lebesgue measure of [u, v) intersected with union_k [k*period, k*period + width)."""
    if v <= u:
        return 0.0
    n0 = math.floor(u / period)
    n1 = math.floor(v / period)
    if n0 == n1:
        return max(0.0, min(v - n0 * period, width) - max(u - n0 * period, 0.0))
    head = max(0.0, width - max(u - n0 * period, 0.0))
    head = min(head, width)
    tail = max(0.0, min(v - n1 * period, width))
    return head + (n1 - n0 - 1) * width + tail


@dataclass(frozen=True)
class SpikedLatticeWeight(Weight):
    """Lattice-spike weight: level j in 1..levels places spikes of height
    2^(growth * alpha * n_j) and width 2^(-(growth+1) * n_j) on the lattice of
    period 2^(-n_j), n_j = 2^j, each lattice shifted left by 2^(-2*n_j - 1);
    alpha = (1 + 1/r) / 2.  The weight is the pointwise max over levels, and 1
    off every spike.

    Its r-th power integrates to something that blows up in `levels` while the
    A2 statistic over interval families at ordinary scales stays flat.  Closed
    form integrals of any power rely on the spike sets of distinct levels
    being disjoint, which holds exactly when 2^(levels-1) <= growth + 1; the
    constructor enforces that regime.
    """

    r: float
    levels: int
    growth: float

    def __post_init__(self):
        if not self.r > 1:
            raise InvalidParameterError("spiked weight needs r > 1")
        alpha = self.alpha
        if not self.growth * (1.0 - alpha) > 2.0:
            raise InvalidParameterError(
                f"need growth*(1-alpha) > 2; got {self.growth * (1.0 - alpha):g}"
            )
        if self.levels < 1:
            raise InvalidParameterError("need at least one spike level")
        if 2 ** (self.levels - 1) > self.growth + 1:
            raise InvalidConfigurationError(
                "spike levels overlap when 2^(levels-1) > growth+1; "
                "closed-form integrals would be wrong in that regime"
            )

    @property
    def alpha(self) -> float:
        return (1.0 + 1.0 / self.r) / 2.0

    @property
    def label(self) -> str:
        return f"spiked(r={self.r:g},J={self.levels},A={self.growth:g})"

    def level_params(self) -> list[tuple[float, float, float, float]]:
        """(period, width, offset, height) per level."""
        out = []
        for j in range(1, self.levels + 1):
            n_j = 2**j
            period = 2.0 ** (-n_j)
            width = 2.0 ** (-(self.growth + 1.0) * n_j)
            offset = 2.0 ** (-2 * n_j - 1)
            height = 2.0 ** (self.growth * self.alpha * n_j)
            out.append((period, width, offset, height))
        return out

    def eval(self, x):
        xv = np.asarray(x, dtype=float)
        out = np.ones_like(xv)
        for period, width, offset, height in self.level_params():
            on_spike = np.mod(xv + offset, period) < width
            out = np.where(on_spike, np.maximum(out, height), out)
        if np.ndim(x) == 0:
            return float(out)
        return out

    def integral_power(self, a, b, s: float) -> float:
        """Closed-form integral of w^s over [a, b), exact under level disjointness."""
        af, bf = float(a), float(b)
        total = bf - af
        for period, width, offset, height in self.level_params():
            m = _periodic_measure(af + offset, bf + offset, period, width)
            total += (height**s - 1.0) * m
        if not math.isfinite(total):
            raise DivergedIntegralError(
                f"spiked weight power {s} integral diverged on [{af}, {bf})",
                (af, bf),
            )
        return total

    def integral(self, a, b) -> float:
        return self.integral_power(a, b, 1.0)

    def inv(self) -> "Weight":
        return _PowerOfSpiked(self, -1.0, 1.0)

    def power(self, s: float) -> "Weight":
        if s == 1.0:
            return self
        return _PowerOfSpiked(self, s, 1.0)


@dataclass(frozen=True)
class _PowerOfSpiked(Weight):
    base: SpikedLatticeWeight
    s: float
    scale: float = 1.0

    @property
    def label(self) -> str:
        return f"{self.base.label}^{self.s:g}" + ("" if self.scale == 1.0 else f"*{self.scale:g}")

    def eval(self, x):
        return self.scale * self.base.eval(x) ** self.s

    def integral(self, a, b) -> float:
        return self.scale * self.base.integral_power(a, b, self.s)

    def inv(self) -> "Weight":
        return _PowerOfSpiked(self.base, -self.s, 1.0 / self.scale)

    def power(self, t: float) -> "Weight":
        return _PowerOfSpiked(self.base, self.s * t, self.scale**t)


@dataclass(frozen=True)
class QuadratureWeight(Weight):
    """Composite weight integrated with 32-node Gauss-Legendre per unit
    segment plus one refinement; pointwise evaluation via the callable."""

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "composite"
    seg_len: float = 0.125

    @property
    def label(self) -> str:
        return self.name

    def eval(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def _quad(self, a: float, b: float, seg: float) -> float:
        nodes, wts = _leggauss(_GL_NODES)
        n_seg = max(1, int(math.ceil((b - a) / seg)))
        edges = np.linspace(a, b, n_seg + 1)
        total = 0.0
        for i in range(n_seg):
            lo, hi = edges[i], edges[i + 1]
            half = 0.5 * (hi - lo)
            xs = 0.5 * (hi + lo) + half * nodes
            total += half * float(np.sum(wts * self.fn(xs)))
        return total

    def integral(self, a, b) -> float:
        af, bf = float(a), float(b)
        if bf <= af:
            return 0.0
        coarse = self._quad(af, bf, self.seg_len)
        fine = self._quad(af, bf, self.seg_len / 2.0)
        if not math.isfinite(fine):
            raise DivergedIntegralError(
                f"quadrature integral of {self.name} diverged on [{af}, {bf})", (af, bf)
            )
        return fine

    def inv(self) -> "Weight":
        fn = self.fn
        return QuadratureWeight(lambda x: 1.0 / fn(x), f"1/({self.name})", self.seg_len)

    def power(self, s: float) -> "Weight":
        fn = self.fn
        return QuadratureWeight(lambda x: fn(x) ** s, f"({self.name})^{s:g}", self.seg_len)


def product_weight(u: Weight, v: Weight) -> Weight:
    """Pointwise product, simplified to a closed-form kind when possible."""
    if isinstance(u, ConstantWeight) and isinstance(v, ConstantWeight):
        return ConstantWeight(u.value * v.value)
    if isinstance(u, ConstantWeight):
        return _scaled(v, u.value)
    if isinstance(v, ConstantWeight):
        return _scaled(u, v.value)
    if (
        isinstance(u, PowerWeight)
        and isinstance(v, PowerWeight)
        and u.center == v.center
    ):
        return PowerWeight(u.exponent + v.exponent, u.center, u.coeff * v.coeff)
    return QuadratureWeight(lambda x: u.eval(x) * v.eval(x), f"{u.label}*{v.label}")


def _scaled(w: Weight, c: float) -> Weight:
    if c == 1.0:
        return w
    if isinstance(w, ConstantWeight):
        return ConstantWeight(c * w.value)
    if isinstance(w, PowerWeight):
        return PowerWeight(w.exponent, w.center, c * w.coeff)
    if isinstance(w, _PowerOfSpiked):
        return _PowerOfSpiked(w.base, w.s, c * w.scale)
    if isinstance(w, SpikedLatticeWeight):
        return _PowerOfSpiked(w, 1.0, c)
    return QuadratureWeight(lambda x: c * w.eval(x), f"{c:g}*{w.label}")


def derive_intermediary(mu: Weight, lam: Weight) -> Weight:
    """nu = mu^(1/2) * lam^(-1/2), kept in closed form whenever the pair allows."""
    return product_weight(mu.power(0.5), lam.power(-0.5))


@dataclass(frozen=True)
class BloomWeight:
    """Source weight mu, target weight lam, and the derived nu = sqrt(mu/lam).

    nu satisfies nu(x)^2 * lam(x) = mu(x) pointwise.
    """

    mu: Weight
    lam: Weight
    nu: Weight = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "nu", derive_intermediary(self.mu, self.lam))

    @property
    def label(self) -> str:
        return f"mu={self.mu.label},lam={self.lam.label}"

    def nu_integral(self, a, b) -> float:
        return self.nu.integral(a, b)


def unweighted_pair() -> BloomWeight:
    return BloomWeight(ConstantWeight(1.0), ConstantWeight(1.0))


@dataclass(frozen=True)
class A2Report:
    constant: float
    argmax_interval: tuple[float, float]
    family_size: int
    family_label: str


def interval_family(
    window: TruncationWindow,
    grids: Sequence[DyadicGrid],
    n_random: int = 1000,
    seed: int = 90210,
) -> list[tuple[float, float]]:
    """Dyadic intervals of the given grids plus seeded random intervals.

    Random lengths run from one finest cell up to a quarter of the window, so
    the family never probes below the resolved scale.
    """
    fam: list[tuple[float, float]] = []
    for grid in grids:
        for interval in enumerate_intervals(grid, window):
            fam.append((float(interval.left), float(interval.right)))
    rng = np.random.default_rng(seed)
    lo_f, hi_f = float(window.lo), float(window.hi)
    min_len = float(window.cell_width)
    max_len = float(window.span) / 4.0
    for _ in range(n_random):
        ell = math.exp(rng.uniform(math.log(min_len), math.log(max_len)))
        a = rng.uniform(lo_f, hi_f - ell)
        fam.append((a, a + ell))
    return fam


def a2_constant(
    w: Weight,
    window: TruncationWindow,
    family: Sequence[tuple[float, float]] | None = None,
    grids: Sequence[DyadicGrid] | None = None,
    seed: int = 90210,
) -> A2Report:
    """sup over the family of avg(w) * avg(1/w); always >= 1 by AM-GM."""
    if family is None:
        if grids is None:
            from .grids import standard_grid, third_shift_grid

            grids = (standard_grid(), third_shift_grid())
        family = interval_family(window, grids, seed=seed)
        family_label = "dyadic(both grids)+random(1000)"
    else:
        family_label = "user"
    if not family:
        raise InvalidConfigurationError("empty interval family")
    w_inv = w.inv()
    best = -math.inf
    best_iv = family[0]
    for a, b in family:
        ell = b - a
        pa = w.integral(a, b) / ell
        pb = w_inv.integral(a, b) / ell
        if not (math.isfinite(pa) and math.isfinite(pb)):
            raise DivergedIntegralError(
                f"non-integrable weight {w.label} on [{a}, {b})", (a, b)
            )
        prod = pa * pb
        if prod > best:
            best = prod
            best_iv = (a, b)
    return A2Report(best, best_iv, len(family), family_label)


def doubling_ratio(w: Weight, interval: tuple[float, float], s: float) -> float:
    """w(sI) / (s * w(I)) for the concentric dilate sI, s > 1."""
    if s <= 1:
        raise InvalidParameterError("dilation factor must exceed 1")
    a, b = float(interval[0]), float(interval[1])
    c = 0.5 * (a + b)
    half = 0.5 * (b - a) * s
    big = w.integral(c - half, c + half)
    small = w.integral(a, b)
    if small <= 0:
        raise DegenerateWeightError(f"{w.label} has nonpositive mass on [{a}, {b})")
    return big / (s * small)


def pathological_weight(r: float, levels: int, growth: float) -> SpikedLatticeWeight:
    """Spiked-lattice weight with the stated blow-up pattern; see
    SpikedLatticeWeight for the parameter regime."""
    return SpikedLatticeWeight(r=r, levels=levels, growth=growth)


@dataclass(frozen=True)
class ReverseHolderReport:
    exponent: float | None
    constant: float
    ladder: tuple[float, ...]
    per_exponent: dict


def reverse_holder_exponent(
    w: Weight,
    window: TruncationWindow,
    ladder: Sequence[float] = (2.25, 2.5, 3.0, 4.0),
    cap: float = 10.0,
    grid: DyadicGrid | None = None,
) -> ReverseHolderReport:
    """Largest ladder exponent r with [avg_I w^(r/2)]^(2/r) <= cap * avg_I w
    uniformly over enumerated dyadic intervals; None when no rung qualifies."""
    if grid is None:
        from .grids import standard_grid

        grid = standard_grid()
    intervals = enumerate_intervals(grid, window)
    per: dict[float, float] = {}
    for r in ladder:
        worst = 0.0
        ok = True
        try:
            wr = w.power(r / 2.0)
        except InvalidParameterError:
            per[r] = math.inf
            continue
        for interval in intervals:
            a, b = float(interval.left), float(interval.right)
            ell = b - a
            try:
                num = (wr.integral(a, b) / ell) ** (2.0 / r)
            except DivergedIntegralError:
                ok = False
                break
            den = w.integral(a, b) / ell
            ratio = num / den
            worst = max(worst, ratio)
            if not math.isfinite(worst):
                ok = False
                break
        per[r] = worst if ok else math.inf
    qualifying = [r for r in ladder if per[r] <= cap]
    if not qualifying:
        return ReverseHolderReport(None, math.inf, tuple(ladder), per)
    r_best = max(qualifying)
    return ReverseHolderReport(r_best, per[r_best], tuple(ladder), per)
