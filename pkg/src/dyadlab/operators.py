"""Dense matrix representations over the finest-cell orthonormal basis.

Basis vectors are e_i = |cell|^(-1/2) * indicator(cell_i); entries are
<T e_j, e_i> in unweighted L2.  Paraproduct, Haar multiplier, dyadic shift,
and multiplication matrices are finite sums of exact cellwise products; the
Hilbert transform matrix comes from the closed-form primitive
G(t) = t (ln|t| - 1), which renders every cell-pair principal value finite
(diagonal entries vanish by antisymmetry).  Haar-expansion operators act as
stated on the resolvable Haar span and as zero on its orthogonal complement;
the sign multiplier additionally keeps the unresolved coarse averages fixed so
that the all-plus pattern is the identity.  Assembly loops run in enumeration
order, which makes every matrix bit-reproducible.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    DegenerateWeightError,
    InvalidConfigurationError,
    InvalidMatrixError,
)
from .grids import (
    DyadicGrid,
    DyadicInterval,
    TruncationWindow,
    enumerate_intervals,
)
from .symbols import Symbol, haar_coefficient
from .weights import Weight

UNWEIGHTED = "unweighted"


@dataclass
class OperatorMatrix:
    """Dense N x N matrix with basis metadata and weight tags."""

    mat: np.ndarray
    window: TruncationWindow
    source_weight: str = UNWEIGHTED
    target_weight: str = UNWEIGHTED
    name: str = "operator"

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=float)
        n = self.window.n_cells
        if self.mat.shape != (n, n):
            raise InvalidConfigurationError(
                f"matrix shape {self.mat.shape} does not match {n} cells"
            )

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def to_binary(self, path) -> None:
        """Header (N, j_max, lo, hi) as little-endian 8-byte floats, then the
        row-major entries as 8-byte floats."""
        with open(path, "wb") as fh:
            fh.write(
                struct.pack(
                    "<4d",
                    float(self.n),
                    float(self.window.j_max),
                    float(self.window.lo),
                    float(self.window.hi),
                )
            )
            fh.write(np.ascontiguousarray(self.mat, dtype="<f8").tobytes())

    @staticmethod
    def read_binary(path) -> tuple[np.ndarray, dict]:
        with open(path, "rb") as fh:
            n, j_max, lo, hi = struct.unpack("<4d", fh.read(32))
            n = int(n)
            data = np.frombuffer(fh.read(), dtype="<f8").reshape(n, n)
        return data, {"n": n, "j_max": int(j_max), "lo": lo, "hi": hi}

    def to_csv(self, path) -> None:
        lines = []
        for row in self.mat:
            lines.append(",".join(f"{v:.11e}" for v in row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _require_standard(grid: DyadicGrid, what: str) -> None:
    if grid.grid_id != "standard":
        raise InvalidConfigurationError(
            f"{what} needs cell-aligned intervals; the shifted grid enters "
            "through norms only"
        )


def _haar_scales(window: TruncationWindow, grid: DyadicGrid, max_scale: int):
    """Enumerated intervals whose Haar functions are resolvable (and, for the
    shift, whose grandchildren are too)."""
    return [
        interval
        for interval in enumerate_intervals(grid, window)
        if interval.j <= max_scale
    ]


def _haar_unit_vector(interval: DyadicInterval, window: TruncationWindow) -> np.ndarray:
    """Haar function in orthonormal cell coordinates (unit l2 vector)."""
    i0, i1 = window.cell_slice(interval)
    m0, _ = window.cell_slice(interval.right_child)
    v = np.zeros(window.n_cells)
    cells = i1 - i0
    amp = 1.0 / math.sqrt(cells)
    v[i0:m0] = amp
    v[m0:i1] = -amp
    return v


def coarse_unit_vectors(window: TruncationWindow) -> list[np.ndarray]:
    """Orthonormal indicators of the coarsest-scale intervals."""
    out = []
    grid = DyadicGrid("standard")
    for interval in enumerate_intervals(grid, window):
        if interval.j != window.j_min:
            continue
        i0, i1 = window.cell_slice(interval)
        v = np.zeros(window.n_cells)
        v[i0:i1] = 1.0 / math.sqrt(i1 - i0)
        out.append(v)
    return out


def paraproduct_matrix(
    b: Symbol, grid: DyadicGrid, window: TruncationWindow
) -> OperatorMatrix:
    """Sum over enumerated resolvable I of b_hat(I) * (h_I outer avg_I)."""
    _require_standard(grid, "paraproduct assembly")
    n = window.n_cells
    width = float(window.cell_width)
    mat = np.zeros((n, n))
    for interval in _haar_scales(window, grid, window.j_max - 1):
        bh = haar_coefficient(b, interval)
        if bh == 0.0:
            continue
        i0, i1 = window.cell_slice(interval)
        m0, _ = window.cell_slice(interval.right_child)
        length = float(interval.length)
        amp = 1.0 / math.sqrt(length)
        # row pattern: h_I at cells times sqrt(width); column: width/|I| * sqrt(width)/width
        col = math.sqrt(width) / length
        row_top = amp * math.sqrt(width)
        mat[i0:m0, i0:i1] += bh * row_top * col
        mat[m0:i1, i0:i1] -= bh * row_top * col
    return OperatorMatrix(mat, window, name="paraproduct")


def paraproduct_adjoint_matrix(
    b: Symbol, grid: DyadicGrid, window: TruncationWindow
) -> OperatorMatrix:
    base = paraproduct_matrix(b, grid, window)
    return OperatorMatrix(base.mat.T.copy(), window, name="paraproduct_adjoint")


def haar_multiplier_matrix(
    signs: Mapping[DyadicInterval, int] | Callable[[DyadicInterval], int] | int,
    grid: DyadicGrid,
    window: TruncationWindow,
) -> OperatorMatrix:
    """Sign multiplier: diagonal +/-1 on the resolvable Haar span, identity on
    the unresolved coarse averages."""
    _require_standard(grid, "sign multiplier assembly")
    if isinstance(signs, int):
        fixed = signs
        sign_of = lambda interval: fixed
    elif callable(signs):
        sign_of = signs
    else:
        mapping = dict(signs)
        sign_of = lambda interval: mapping[interval]
    n = window.n_cells
    mat = np.zeros((n, n))
    for interval in _haar_scales(window, grid, window.j_max - 1):
        s = sign_of(interval)
        if s not in (-1, 1):
            raise InvalidConfigurationError(
                f"sign pattern must map to +/-1; got {s} on {interval.label()}"
            )
        h = _haar_unit_vector(interval, window)
        i0, i1 = window.cell_slice(interval)
        mat[i0:i1, i0:i1] += s * np.outer(h[i0:i1], h[i0:i1])
    for v in coarse_unit_vectors(window):
        nz = np.nonzero(v)[0]
        mat[np.ix_(nz, nz)] += np.outer(v[nz], v[nz])
    return OperatorMatrix(mat, window, name="haar_multiplier")


def haar_shift_matrix(grid: DyadicGrid, window: TruncationWindow) -> OperatorMatrix:
    """Dyadic shift h_I -> (h_(left child) - h_(right child)) / sqrt(2) on
    every interval whose children's Haar functions are resolvable; zero on the
    orthogonal complement."""
    _require_standard(grid, "dyadic shift assembly")
    n = window.n_cells
    mat = np.zeros((n, n))
    for interval in _haar_scales(window, grid, window.j_max - 2):
        h = _haar_unit_vector(interval, window)
        lc, rc = interval.children
        out = (_haar_unit_vector(lc, window) - _haar_unit_vector(rc, window)) / math.sqrt(2.0)
        i0, i1 = window.cell_slice(interval)
        mat[i0:i1, i0:i1] += np.outer(out[i0:i1], h[i0:i1])
    return OperatorMatrix(mat, window, name="haar_shift")


def hilbert_primitive(t: np.ndarray) -> np.ndarray:
    """G(t) = t (ln|t| - 1) with G(0) = 0; G'' integrates 1/(x-y) over boxes."""
    tv = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(tv == 0.0, 0.0, tv * (np.log(np.abs(tv)) - 1.0))
    return out


def hilbert_matrix(window: TruncationWindow) -> OperatorMatrix:
    """Entries <H e_j, e_i> = |cell|^-1 * box integral of 1/(x-y), all pairs
    finite in the principal-value sense; antisymmetric with zero diagonal."""
    edges = window.cell_edges()
    width = float(window.cell_width)
    g = hilbert_primitive(edges[:, None] - edges[None, :])
    # box integral over cell_i x cell_j: G(b-c) - G(a-c) - G(b-d) + G(a-d)
    # with [a,b) the x-cell (rows) and [c,d) the y-cell (columns)
    box = g[1:, :-1] - g[:-1, :-1] - g[1:, 1:] + g[:-1, 1:]
    mat = box / width
    np.fill_diagonal(mat, 0.0)
    return OperatorMatrix(mat, window, name="hilbert")


def multiplication_matrix(b: Symbol, window: TruncationWindow) -> OperatorMatrix:
    """Diagonal matrix of the cell values (cell averages for analytic kinds)."""
    return OperatorMatrix(np.diag(b.cell_values()), window, name="multiplication")


def cell_average_vector(w: Weight, window: TruncationWindow) -> np.ndarray:
    return w.cell_averages(window)


def weight_conjugate(t: OperatorMatrix, lam: Weight, mu: Weight) -> OperatorMatrix:
    """diag(sqrt(avg lam)) @ T @ diag(1/sqrt(avg mu)).

    Weighted Schatten functionals of T between the mu- and lam-weighted spaces
    are defined as unweighted Schatten functionals of this conjugation.
    """
    lam_avg = lam.cell_averages(t.window)
    mu_avg = mu.cell_averages(t.window)
    if np.any(lam_avg <= 0) or np.any(mu_avg <= 0):
        raise DegenerateWeightError("weight with vanishing cell average")
    left = np.sqrt(lam_avg)
    right = 1.0 / np.sqrt(mu_avg)
    mat = t.mat * left[:, None] * right[None, :]
    return OperatorMatrix(
        mat,
        t.window,
        source_weight=mu.label,
        target_weight=lam.label,
        name=f"conj({t.name})",
    )


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    if a.window != b.window:
        raise InvalidConfigurationError("commutator needs matrices on one basis")
    return OperatorMatrix(
        a.mat @ b.mat - b.mat @ a.mat, a.window, name=f"[{a.name},{b.name}]"
    )


def multiplication_commutator(b: Symbol, t: OperatorMatrix) -> OperatorMatrix:
    """[M_b, T] assembled without forming products: entries (b_i - b_j) T_ij."""
    vals = b.cell_values()
    mat = (vals[:, None] - vals[None, :]) * t.mat
    return OperatorMatrix(mat, t.window, name=f"[mult,{t.name}]")


def remainder_matrix(b: Symbol, grid: DyadicGrid, window: TruncationWindow) -> OperatorMatrix:
    """Sum over resolvable I of (b_hat(I) / |I|^1/2) * (k_I outer h_I) with
    k_I = h_(right child) - h_(left child); the part of the shift commutator
    that is not a paraproduct composition."""
    _require_standard(grid, "remainder assembly")
    n = window.n_cells
    mat = np.zeros((n, n))
    for interval in _haar_scales(window, grid, window.j_max - 2):
        bh = haar_coefficient(b, interval)
        if bh == 0.0:
            continue
        lc, rc = interval.children
        k_vec = _haar_unit_vector(rc, window) - _haar_unit_vector(lc, window)
        h = _haar_unit_vector(interval, window)
        i0, i1 = window.cell_slice(interval)
        coeff = bh / math.sqrt(float(interval.length))
        mat[i0:i1, i0:i1] += coeff * np.outer(k_vec[i0:i1], h[i0:i1])
    return OperatorMatrix(mat, window, name="shift_remainder")


def remainder_matrix_derived(
    b: Symbol, grid: DyadicGrid, window: TruncationWindow
) -> OperatorMatrix:
    """The remainder that direct dyadic algebra produces for the truncated
    system: sum of (b_hat(I) / sqrt(2 |I|)) * ((h_left + h_right) outer h_I).
    With it the six-term expansion closes exactly for step symbols."""
    _require_standard(grid, "remainder assembly")
    n = window.n_cells
    mat = np.zeros((n, n))
    for interval in _haar_scales(window, grid, window.j_max - 2):
        bh = haar_coefficient(b, interval)
        if bh == 0.0:
            continue
        lc, rc = interval.children
        out = _haar_unit_vector(lc, window) + _haar_unit_vector(rc, window)
        h = _haar_unit_vector(interval, window)
        i0, i1 = window.cell_slice(interval)
        coeff = bh / math.sqrt(2.0 * float(interval.length))
        mat[i0:i1, i0:i1] += coeff * np.outer(out[i0:i1], h[i0:i1])
    return OperatorMatrix(mat, window, name="shift_remainder_derived")


def k_vector(interval: DyadicInterval, window: TruncationWindow) -> np.ndarray:
    """k_I = h_(right child) - h_(left child) in orthonormal cell coordinates."""
    lc, rc = interval.children
    return _haar_unit_vector(rc, window) - _haar_unit_vector(lc, window)


@dataclass
class ExpansionResidual:
    operator_norm: float
    frobenius_norm: float
    lhs_norm: float
    region: tuple[float, float]
    kind: str


def expansion_residual(
    b: Symbol,
    grid: DyadicGrid,
    window: TruncationWindow,
    kind: str = "shift",
    signs: Mapping[DyadicInterval, int] | Callable[[DyadicInterval], int] | int = 1,
    region: tuple[float, float] = (0.0, 1.0),
    remainder: str = "displayed",
    sign_order: str = "definition",
) -> ExpansionResidual:
    """Residual of the commutator expansion, restricted to inputs supported in
    the interior region.

    kind="shift": [M_b, S] against the four paraproduct compositions plus a
    remainder; remainder="displayed" uses the k_I form, remainder="derived"
    uses the child-sum form that closes the identity exactly for step data.
    kind="multiplier": [M_b, T_eps] against the four compositions alone.
    sign_order="definition" orders each composition by [b, T] f = b T f - T(bf);
    sign_order="displayed" flips the four composition terms.  The identity is
    never asserted; the restricted residual is measured and reported.
    """
    pi = paraproduct_matrix(b, grid, window).mat
    pi_star = pi.T
    mult = multiplication_matrix(b, window).mat
    if kind == "shift":
        t = haar_shift_matrix(grid, window).mat
        if remainder == "displayed":
            rem = remainder_matrix(b, grid, window).mat
        elif remainder == "derived":
            rem = remainder_matrix_derived(b, grid, window).mat
        else:
            raise InvalidConfigurationError(f"unknown remainder {remainder!r}")
        four = pi @ t - t @ pi + pi_star @ t - t @ pi_star
        if sign_order == "displayed":
            four = -four
        elif sign_order != "definition":
            raise InvalidConfigurationError(f"unknown sign order {sign_order!r}")
        rhs = four + rem
    elif kind == "multiplier":
        t = haar_multiplier_matrix(signs, grid, window).mat
        rhs = pi @ t - t @ pi + pi_star @ t - t @ pi_star
        if sign_order == "displayed":
            rhs = -rhs
    else:
        raise InvalidConfigurationError(f"unknown expansion kind {kind!r}")
    lhs = mult @ t - t @ mult
    resid = lhs - rhs
    # restricting the domain to the region keeps only those columns
    i0, i1 = window.slice_of(*region)
    restricted = resid[:, i0:i1]
    sig = np.linalg.svd(restricted, compute_uv=False)
    return ExpansionResidual(
        operator_norm=float(sig[0]) if sig.size else 0.0,
        frobenius_norm=float(np.linalg.norm(restricted)),
        lhs_norm=float(np.linalg.norm(lhs[:, i0:i1])),
        region=region,
        kind=kind,
    )


def validate_matrix(t: OperatorMatrix) -> None:
    if not np.all(np.isfinite(t.mat)):
        raise InvalidMatrixError(f"{t.name} contains non-finite entries")
