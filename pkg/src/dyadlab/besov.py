"""Norm functionals: dyadic Besov (three equivalent forms), continuous Besov
at p=2 by tensor quadrature, weighted dyadic BMO, and finite-scale VMO tails.

Dyadic norms sum (|b_hat(I)| |I|^1/2 / nu(I))^p over enumerated intervals;
the second and third forms replace the nu factor by the equivalent weighted
expressions built from lam and mu integrals.  The continuous p=2 norm is the
double integral of |b(x)-b(y)|^2 / (x-y)^2 * lam(x) / mu(y) over the window
square, with near-diagonal cell pairs handled by one extra subdivision and the
Lipschitz difference-quotient bound.  All reductions run in enumeration order,
so results do not depend on thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidConfigurationError, InvalidParameterError
from .grids import (
    DyadicGrid,
    DyadicInterval,
    TruncationWindow,
    enumerate_intervals,
)
from .symbols import Symbol, haar_coefficient
from .weights import BloomWeight, ConstantWeight, Weight


@dataclass
class NormReport:
    """A norm value with its per-item contribution table.

    value >= 0, and value == 0 exactly when every contribution vanishes.
    """

    value: float
    contributions: list[tuple[str, float]]
    params: dict = field(default_factory=dict)
    id_label: str = "interval_id"
    error_estimate: float | None = None

    def to_csv(self, path) -> None:
        lines = [f"{self.id_label},contribution,cumulative"]
        running = 0.0
        for label, c in self.contributions:
            running += c
            lines.append(f"{label},{c:.11e},{running:.11e}")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _nu_of(weights: BloomWeight | Weight) -> Weight:
    if isinstance(weights, BloomWeight):
        return weights.nu
    return weights


def _pair_of(weights: BloomWeight | Weight, form: int) -> BloomWeight:
    if not isinstance(weights, BloomWeight):
        raise InvalidConfigurationError(
            f"form {form} needs both weights (mu, lam); got a bare weight"
        )
    return weights


def dyadic_besov_norm(
    b: Symbol,
    weights: BloomWeight | Weight,
    p: float,
    grid: DyadicGrid,
    window: TruncationWindow,
    form: int = 1,
) -> NormReport:
    """p-th root of the sum of per-interval terms; `form` selects which of the
    three equivalent per-interval weight expressions multiplies |b_hat(I)|."""
    if not 0 < p < math.inf:
        raise InvalidParameterError("p must lie in (0, inf)")
    if form not in (1, 2, 3):
        raise InvalidConfigurationError(f"unknown form {form}")
    if form == 1:
        nu = _nu_of(weights)
    else:
        pair = _pair_of(weights, form)
    contributions: list[tuple[str, float]] = []
    total = 0.0
    for interval in enumerate_intervals(grid, window):
        a, c = float(interval.left), float(interval.right)
        length = float(interval.length)
        bh = haar_coefficient(b, interval)
        if form == 1:
            nu_i = nu.integral(a, c)
            if nu_i <= 0:
                raise InvalidConfigurationError(
                    f"nu mass vanishes on {interval.label()}"
                )
            term = abs(bh) * math.sqrt(length) / nu_i
        elif form == 2:
            lam_i = pair.lam.integral(a, c)
            mu_inv_i = pair.mu.inv().integral(a, c)
            term = abs(bh) * math.sqrt(lam_i * mu_inv_i) / length**1.5
        else:
            lam_inv_i = pair.lam.inv().integral(a, c)
            mu_i = pair.mu.integral(a, c)
            term = abs(bh) * math.sqrt(length) / math.sqrt(lam_inv_i * mu_i)
        contributions.append((interval.label(), term**p))
        total += term**p
    return NormReport(
        value=total ** (1.0 / p),
        contributions=contributions,
        params={"p": p, "form": form, "grid": grid.grid_id},
    )


@dataclass(frozen=True)
class IntervalFormRow:
    interval: DyadicInterval
    q1: float
    q2: float
    q3: float
    cs_gap: float  # mu^-1(I)^1/2 lam(I)^1/2 - nu^-1(I), nonnegative by Cauchy-Schwarz


def interval_form_ratios(
    pair: BloomWeight, grid: DyadicGrid, window: TruncationWindow
) -> tuple[list[IntervalFormRow], float]:
    """Per-interval values of the three equivalent weight brackets and the
    worst pairwise ratio across all enumerated intervals."""
    rows: list[IntervalFormRow] = []
    worst = 1.0
    nu_inv = pair.nu.inv()
    mu_inv = pair.mu.inv()
    lam_inv = pair.lam.inv()
    for interval in enumerate_intervals(grid, window):
        a, c = float(interval.left), float(interval.right)
        length = float(interval.length)
        nu_i = pair.nu.integral(a, c)
        lam_i = pair.lam.integral(a, c)
        mu_inv_i = mu_inv.integral(a, c)
        lam_inv_i = lam_inv.integral(a, c)
        mu_i = pair.mu.integral(a, c)
        q1 = length / nu_i
        q2 = math.sqrt(lam_i * mu_inv_i) / length
        q3 = length / math.sqrt(lam_inv_i * mu_i)
        cs_gap = math.sqrt(mu_inv_i * lam_i) - nu_inv.integral(a, c)
        rows.append(IntervalFormRow(interval, q1, q2, q3, cs_gap))
        qs = sorted((q1, q2, q3))
        worst = max(worst, qs[2] / qs[0])
    return rows, worst


# ----------------------------------------------------------------------------
# continuous energy by tensor quadrature


def _gl(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def continuous_energy(
    b: Symbol,
    p: float,
    lam: Weight,
    mu: Weight,
    window: TruncationWindow,
    nodes: int = 4,
) -> tuple[float, float, np.ndarray]:
    """Double integral of |b(x)-b(y)|^p / |x-y|^2 * lam(x) * mu^-1(y) over the
    window square.

    Separated cell pairs use tensor Gauss-Legendre; cell pairs closer than one
    cell are split once and the touching half-pairs are replaced by the
    Lipschitz difference-quotient bound, whose total mass is returned as the
    error estimate.  Returns (value, error_estimate, per-x-cell totals).
    """
    if not b.is_lipschitz:
        raise InvalidConfigurationError(
            "continuous energy needs a Lipschitz symbol; jump symbols diverge"
        )
    if p < 2 and not (
        isinstance(lam, ConstantWeight) and isinstance(mu, ConstantWeight)
    ):
        raise InvalidConfigurationError(
            "p < 2 near-diagonal closed form is available only for constant weights"
        )
    lip = float(b.lipschitz)
    n = window.n_cells
    width = float(window.cell_width)
    edges = window.cell_edges()
    mu_inv = mu.inv()

    gx, gw = _gl(nodes)
    # flatten (cell, node) grids once for both axes
    half = 0.5 * width
    centers = window.cell_midpoints()
    xs = (centers[:, None] + half * gx[None, :]).ravel()
    ws = np.tile(0.5 * width * gw, n)
    fx = np.asarray(b.eval(xs), dtype=float)
    lam_x = np.asarray(lam.eval(xs), dtype=float) * ws
    mu_y = np.asarray(mu_inv.eval(xs), dtype=float) * ws

    per_cell = np.zeros(n)
    block = max(1, 262144 // (n * nodes) + 1)
    npts = n * nodes
    cell_of = np.repeat(np.arange(n), nodes)
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        r0, r1 = i0 * nodes, i1 * nodes
        dx = xs[r0:r1, None] - xs[None, :]
        df = np.abs(fx[r0:r1, None] - fx[None, :])
        cells_r = cell_of[r0:r1]
        sep = np.abs(cells_r[:, None] - cell_of[None, :]) >= 2
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(sep, df**p / (dx * dx), 0.0)
        contrib = integrand * lam_x[r0:r1, None] * mu_y[None, :]
        per_cell[i0:i1] += np.add.reduceat(contrib.sum(axis=1), np.arange(0, (i1 - i0) * nodes, nodes))

    # near-diagonal pairs: one subdivision, touching half-pairs -> Lipschitz bound
    gh, ghw = _gl(nodes)
    lip_mass = 0.0
    for i in range(n):
        for j in (i - 1, i, i + 1):
            if j < 0 or j >= n:
                continue
            for hx in range(2):
                ax = edges[i] + hx * half
                bx = ax + half
                for hy in range(2):
                    ay = edges[j] + hy * half
                    by = ay + half
                    touching = not (bx <= ay or by <= ax) or bx == ay or by == ax
                    if touching:
                        c = _lip_bound(lip, p, lam, mu_inv, ax, bx, ay, by)
                        lip_mass += c
                        per_cell[i] += c
                    else:
                        xm = 0.5 * (ax + bx) + 0.25 * width * gh
                        ym = 0.5 * (ay + by) + 0.25 * width * gh
                        wq = 0.25 * width * ghw
                        dxh = xm[:, None] - ym[None, :]
                        dfh = np.abs(
                            np.asarray(b.eval(xm))[:, None] - np.asarray(b.eval(ym))[None, :]
                        )
                        integ = dfh**p / (dxh * dxh)
                        c = float(
                            np.sum(
                                integ
                                * (np.asarray(lam.eval(xm)) * wq)[:, None]
                                * (np.asarray(mu_inv.eval(ym)) * wq)[None, :]
                            )
                        )
                        per_cell[i] += c
    return float(np.sum(per_cell)), lip_mass, per_cell


def _lip_bound(
    lip: float, p: float, lam: Weight, mu_inv: Weight, ax, bx, ay, by
) -> float:
    """Upper bound for the energy on a touching half-cell pair."""
    if p == 2.0:
        return lip**2 * lam.integral(ax, bx) * mu_inv.integral(ay, by)
    if p > 2.0:
        diam = max(bx, by) - min(ax, ay)
        return lip**p * diam ** (p - 2.0) * lam.integral(ax, bx) * mu_inv.integral(ay, by)
    # p < 2, constant weights only: the |x-y|^(p-2) factor integrates exactly
    lam_val = lam.eval(0.5 * (ax + bx))
    mu_val = mu_inv.eval(0.5 * (ay + by))

    def prim(t):
        return abs(t) ** p / (p * (p - 1.0))

    box = prim(bx - ay) - prim(ax - ay) - prim(bx - by) + prim(ax - by)
    return lip**p * float(lam_val) * float(mu_val) * box


def continuous_besov_norm_p2(
    b: Symbol,
    lam: Weight,
    mu: Weight,
    window: TruncationWindow,
    nodes: int = 4,
) -> NormReport:
    """Square root of the p=2 energy, with the near-diagonal bound mass as the
    quadrature error estimate."""
    energy, err, per_cell = continuous_energy(b, 2.0, lam, mu, window, nodes)
    contributions = [(f"xcell_{i}", float(v)) for i, v in enumerate(per_cell)]
    return NormReport(
        value=math.sqrt(energy),
        contributions=contributions,
        params={"p": 2.0, "lam": lam.label, "mu": mu.label},
        id_label="pair_id",
        error_estimate=err,
    )


def peller_energy(b: Symbol, p: float, window: TruncationWindow, nodes: int = 4) -> float:
    """Unweighted point-pair energy: double integral of |b(x)-b(y)|^p / |x-y|^2."""
    one = ConstantWeight(1.0)
    energy, _, _ = continuous_energy(b, p, one, one, window, nodes)
    return energy


def intersection_norm(
    b: Symbol,
    weights: BloomWeight | Weight,
    grid0: DyadicGrid,
    grid1: DyadicGrid,
    window: TruncationWindow,
    p: float = 2.0,
) -> NormReport:
    """Sum of the two dyadic norms, one per grid."""
    r0 = dyadic_besov_norm(b, weights, p, grid0, window, form=1)
    r1 = dyadic_besov_norm(b, weights, p, grid1, window, form=1)
    contributions = [(f"{grid0.grid_id}:{k}", v) for k, v in r0.contributions]
    contributions += [(f"{grid1.grid_id}:{k}", v) for k, v in r1.contributions]
    return NormReport(
        value=r0.value + r1.value,
        contributions=contributions,
        params={"p": p, "grids": (grid0.grid_id, grid1.grid_id)},
    )


# ----------------------------------------------------------------------------
# weighted BMO and VMO tails


@dataclass
class BmoReport:
    sup_average: float
    square_form: float
    argmax_average: str
    argmax_square: str


def _abs_deviation_integral(b: Symbol, a: float, c: float, window: TruncationWindow) -> float:
    """Integral over [a, c) of |b - avg_[a,c) b| for the step view of b, exact
    with fractional end cells."""
    vals = b.cell_values()
    lo = float(window.lo)
    width = float(window.cell_width)
    i0 = max(0, int(math.floor((a - lo) / width)))
    i1 = min(window.n_cells, int(math.ceil((c - lo) / width)))
    idx = []
    cover = []
    for i in range(i0, i1):
        seg_lo = max(a, lo + i * width)
        seg_hi = min(c, lo + (i + 1) * width)
        if seg_hi > seg_lo:
            idx.append(i)
            cover.append(seg_hi - seg_lo)
    idx_a = np.array(idx, dtype=int)
    cov = np.array(cover)
    avg = float(np.sum(vals[idx_a] * cov) / np.sum(cov))
    return float(np.sum(np.abs(vals[idx_a] - avg) * cov))


def weighted_bmo_dyadic(
    b: Symbol,
    pair: BloomWeight,
    grid: DyadicGrid,
    window: TruncationWindow,
) -> BmoReport:
    """Both equivalent dyadic BMO functionals.

    The sup-average form takes sup over enumerated I of the nu-normalized mean
    oscillation; the square form takes sup over K of the mu^-1(K)-normalized
    sum of squared coefficient terms over enumerated descendants of K.
    """
    intervals = enumerate_intervals(grid, window)
    mu_inv = pair.mu.inv()

    sup_avg = 0.0
    arg_avg = ""
    for interval in intervals:
        a, c = float(interval.left), float(interval.right)
        nu_i = pair.nu.integral(a, c)
        osc = _abs_deviation_integral(b, a, c, window) / nu_i
        if osc > sup_avg:
            sup_avg, arg_avg = osc, interval.label()

    # square form, accumulated bottom-up over the interval tree
    s_term: dict[DyadicInterval, float] = {}
    for interval in intervals:
        a, c = float(interval.left), float(interval.right)
        length = float(interval.length)
        bh = haar_coefficient(b, interval)
        lam_i = pair.lam.integral(a, c)
        mu_inv_i = mu_inv.integral(a, c)
        s_term[interval] = bh * bh * mu_inv_i * mu_inv_i * lam_i / length**3
    subtree: dict[DyadicInterval, float] = {}
    for interval in sorted(intervals, key=lambda iv: -iv.j):
        total = s_term[interval]
        for child in interval.children:
            total += subtree.get(child, 0.0)
        subtree[interval] = total
    sup_sq = 0.0
    arg_sq = ""
    for interval in intervals:
        a, c = float(interval.left), float(interval.right)
        val = subtree[interval] / mu_inv.integral(a, c)
        if val > sup_sq:
            sup_sq, arg_sq = val, interval.label()
    return BmoReport(sup_avg, sup_sq, arg_avg, arg_sq)


@dataclass
class VmoTailRow:
    radius: float
    small_scale: float
    large_scale: float
    far_field: float


@dataclass
class VmoTailReport:
    rows: list[VmoTailRow]
    total: float
    center: float


def vmo_tail_report(
    b: Symbol,
    weights: BloomWeight | Weight,
    grid: DyadicGrid,
    window: TruncationWindow,
    ladder: Sequence[float] | None = None,
    center: float | None = None,
) -> VmoTailReport:
    """Finite-scale surrogate for the three vanishing-oscillation limits:
    partial sums of squared form-1 contributions restricted to |I| < a,
    |I| > a, and I disjoint from the ball B(center, a), tabulated over a
    ladder of radii."""
    nu = _nu_of(weights)
    if center is None:
        center = float(window.lo + window.span / 2)
    if ladder is None:
        ladder = [2.0 ** (-j) for j in range(window.j_min, window.j_max + 1)]
    items = []
    total = 0.0
    for interval in enumerate_intervals(grid, window):
        a, c = float(interval.left), float(interval.right)
        bh = haar_coefficient(b, interval)
        t = (abs(bh) * math.sqrt(float(interval.length)) / nu.integral(a, c)) ** 2
        items.append((float(interval.length), a, c, t))
        total += t
    rows = []
    for radius in ladder:
        small = sum(t for ell, a, c, t in items if ell < radius)
        large = sum(t for ell, a, c, t in items if ell > radius)
        far = sum(
            t
            for ell, a, c, t in items
            if c <= center - radius or a >= center + radius
        )
        rows.append(VmoTailRow(radius, small, large, far))
    return VmoTailReport(rows, total, center)
