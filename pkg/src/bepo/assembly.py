"""Assembly of the sparse resolvent system M v = g on the scaled grid.

Equation rows (2 <= j <= J-1) discretize

    v - [ lam*sigma^2/2 * d2_yt + beta_t * up_yt + (yt/lam) * up_xt
          + (yt/lam) * up_zt ] v = g

with second-order upwind advection that falls back to first order one node
away from each face, and one-sided second-order stencils pointing inward on
the xt and zt faces themselves (no outward flux: the advected information
propagates inward only). Rows with j in {1, J} are two-point Neumann rows
enforcing zero yt-derivative, with zero right-hand side.

`assemble_matrix` emits the closed-form entries case by case; the
independent oracle `oracle_assemble` rebuilds the same matrix by applying
generic difference-operator definitions to unit basis vectors and never
consults the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidSpec
from .grid import Grid
from .model import ModelParams, drift_beta
from .observables import Observable

__all__ = [
    "SparseSystem",
    "assemble_matrix",
    "assemble_rhs",
    "assemble_system",
    "oracle_assemble",
    "export_matrix_coo",
]


@dataclass
class SparseSystem:
    """Merged triplet form of the system, 1 row per grid node.

    rows/cols are 0-based internally; entries are sorted by (row, col),
    duplicates summed, exact zeros dropped. rhs is dense, 0 at Neumann rows.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.n, self.n)
        )

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.n)
        on_diag = self.rows == self.cols
        diag[self.rows[on_diag]] = self.vals[on_diag]
        return diag


def _merge_triplets(n, rows, cols, vals) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sum duplicate (row, col) contributions, drop exact zeros, sort."""
    coo = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    csr = coo.tocsr()  # sums duplicates
    csr.sum_duplicates()
    csr.eliminate_zeros()
    coo = csr.tocoo()
    return (
        coo.row.astype(np.int64),
        coo.col.astype(np.int64),
        coo.data.astype(np.float64),
    )


def _lin(i0, j0, k0, J, K):
    """0-based linear index of 0-based (i0, j0, k0) arrays."""
    return (i0 * J + j0) * K + k0


def assemble_matrix(grid: Grid, p: ModelParams, lam: float) -> SparseSystem:
    """Closed-form row assembly of M.

    The indicator factors (1 + 1{2 < i < I-1}) are evaluated per node as
    printed, not by splitting loops into bands. Returns a SparseSystem with
    a zero rhs; use assemble_rhs/assemble_system to fill it.
    """
    s = grid.spec
    if lam != s.lam:
        raise InvalidSpec(f"lam={lam} does not match grid lam={s.lam}")
    I, J, K = s.I, s.J, s.K
    dx, dy, dz = s.dx, s.dy, s.dz
    n = I * J * K

    # 0-based index grids over all nodes
    iv, jv, kv = np.meshgrid(
        np.arange(I), np.arange(J), np.arange(K), indexing="ij"
    )
    eq = (jv >= 1) & (jv <= J - 2)  # equation rows: 2 <= j <= J-1 (1-based)

    # advection speeds at each node (unscaled): yt/lam for xt,zt; beta for yt
    x_un = grid.x[iv]
    y_un = grid.y[jv]
    z_un = grid.z[kv]
    cxz = y_un  # yt_j / lam
    by = drift_beta(x_un, y_un, z_un, p)

    diff = lam * p.sigma**2 / 2.0

    rows_l: list[np.ndarray] = []
    cols_l: list[np.ndarray] = []
    vals_l: list[np.ndarray] = []
    row_id = _lin(iv, jv, kv, J, K)

    def emit(mask, di, dj, dk, values):
        m = mask & eq
        if not m.any():
            return
        rows_l.append(row_id[m])
        cols_l.append(_lin(iv[m] + di, jv[m] + dj, kv[m] + dk, J, K))
        vals_l.append(np.broadcast_to(values, iv.shape)[m])

    diag = np.ones(iv.shape)

    def axis_terms(pos, count, spacing, speed, diag_acc):
        """Upwind advection entries for one non-diffusive axis.

        pos is the 0-based index array along the axis; emits (offset, value)
        pairs and accumulates the diagonal contribution in-place.
        """
        pos1 = pos + 1  # 1-based
        up = np.maximum(0.0, speed)
        dn = np.minimum(0.0, speed)
        at_lo = pos1 == 1
        at_hi = pos1 == count
        inner = ~at_lo & ~at_hi
        full = (pos1 > 2) & (pos1 < count - 1)
        fb = np.where(full, 1.0, 0.0)

        terms = []
        # strict interior: second-order upwind with first-order fallback
        terms.append((inner & full, -2, -dn / (2.0 * spacing)))
        terms.append((inner & full, +2, up / (2.0 * spacing)))
        terms.append((inner, -1, (1.0 + fb) * dn / spacing))
        terms.append((inner, +1, -(1.0 + fb) * up / spacing))
        diag_acc += np.where(inner, (2.0 + fb) * np.abs(speed) / (2.0 * spacing), 0.0)
        # faces: one-sided second-order stencil, inward only
        terms.append((at_lo, +1, -2.0 * up / spacing))
        terms.append((at_lo, +2, up / (2.0 * spacing)))
        diag_acc += np.where(at_lo, 3.0 * up / (2.0 * spacing), 0.0)
        terms.append((at_hi, -1, 2.0 * dn / spacing))
        terms.append((at_hi, -2, -dn / (2.0 * spacing)))
        diag_acc += np.where(at_hi, -3.0 * dn / (2.0 * spacing), 0.0)
        return terms

    # xt-advection at speed yt/lam
    for mask, off, val in axis_terms(iv, I, dx, cxz, diag):
        emit(mask, off, 0, 0, val)
    # zt-advection at the same speed
    for mask, off, val in axis_terms(kv, K, dz, cxz, diag):
        emit(mask, 0, 0, off, val)

    # yt-direction: diffusion plus upwind advection at speed beta. Equation
    # rows never touch j in {1, J}, so there is no face branch here.
    upb = np.maximum(0.0, by)
    dnb = np.minimum(0.0, by)
    full_j = (jv + 1 > 2) & (jv + 1 < J - 1)
    fbj = np.where(full_j, 1.0, 0.0)
    emit(full_j, 0, -2, 0, -dnb / (2.0 * dy))
    emit(full_j, 0, +2, 0, upb / (2.0 * dy))
    emit(np.ones_like(full_j), 0, -1, 0, -diff / dy**2 + (1.0 + fbj) * dnb / dy)
    emit(np.ones_like(full_j), 0, +1, 0, -diff / dy**2 - (1.0 + fbj) * upb / dy)
    diag += 2.0 * diff / dy**2 + (2.0 + fbj) * np.abs(by) / (2.0 * dy)

    # diagonal of every equation row (the emit helper applies the eq mask)
    emit(np.ones_like(full_j), 0, 0, 0, diag)

    # Neumann rows at j = 1 and j = J
    for j0, sign, nb in ((0, -1.0, +1), (J - 1, +1.0, -1)):
        ii, kk = np.meshgrid(np.arange(I), np.arange(K), indexing="ij")
        r = _lin(ii, np.full_like(ii, j0), kk, J, K).ravel()
        rows_l.extend([r, r])
        cols_l.append(r)
        cols_l.append(_lin(ii, np.full_like(ii, j0 + nb), kk, J, K).ravel())
        vals_l.append(np.full(r.shape, sign / dy))
        vals_l.append(np.full(r.shape, -sign / dy))

    rows, cols, vals = _merge_triplets(
        n, np.concatenate(rows_l), np.concatenate(cols_l), np.concatenate(vals_l)
    )
    return SparseSystem(n=n, rows=rows, cols=cols, vals=vals, rhs=np.zeros(n))


def assemble_rhs(grid: Grid, g, lam: float) -> np.ndarray:
    """Dense right-hand side: g at unscaled node coordinates, 0 at Neumann rows.

    g is an Observable (or any vectorized callable of unscaled (x, y, z)),
    or a pre-tabulated array of node values in grid order (research use;
    no sup-norm diagnostics apply to tabulated fields).
    """
    s = grid.spec
    if lam != s.lam:
        raise InvalidSpec(f"lam={lam} does not match grid lam={s.lam}")
    iv, jv, kv = np.meshgrid(
        np.arange(s.I), np.arange(s.J), np.arange(s.K), indexing="ij"
    )
    if callable(g):
        vals = np.asarray(g(grid.x[iv], grid.y[jv], grid.z[kv]), dtype=np.float64)
    else:
        vals = np.asarray(g, dtype=np.float64)
        if vals.size != s.n_nodes:
            raise InvalidSpec(
                f"tabulated field has {vals.size} values, grid has {s.n_nodes} nodes"
            )
        vals = vals.reshape(s.I, s.J, s.K).copy()
    vals[(jv == 0) | (jv == s.J - 1)] = 0.0
    return vals.ravel()


def assemble_system(grid: Grid, p: ModelParams, g: Observable, lam: float) -> SparseSystem:
    """Matrix and right-hand side together."""
    sys = assemble_matrix(grid, p, lam)
    sys.rhs = assemble_rhs(grid, g, lam)
    return sys


# --- independent oracle -----------------------------------------------------
#
# Rebuilds M one column at a time by applying the generic difference-operator
# definitions to unit basis vectors. Structurally disjoint from the
# closed-form route: no entry formula appears below, only the operator
# definitions and the boundary truncation rules.


def _d_forward(u, m, h):
    return (u[m + 1] - u[m]) / h


def _d_backward(u, m, h):
    return (u[m] - u[m - 1]) / h


def _d_second(u, m, h):
    return (u[m + 1] - 2.0 * u[m] + u[m - 1]) / h**2


def _d_fforward(u, m, h):
    return (-3.0 * u[m] + 4.0 * u[m + 1] - u[m + 2]) / (2.0 * h)


def _d_bbackward(u, m, h):
    return (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * h)


def _upwind(u, m, c, h, count):
    """Second-order upwind advection c * d/dxi at position m (0-based).

    On the faces only the inward one-sided stencil applies; one node away
    from a face the scheme reverts to first-order upwind.
    """
    if m == 0:
        return max(0.0, c) * _d_fforward(u, m, h)
    if m == count - 1:
        return min(0.0, c) * _d_bbackward(u, m, h)
    if m == 1 or m == count - 2:
        return max(0.0, c) * _d_forward(u, m, h) + min(0.0, c) * _d_backward(u, m, h)
    return max(0.0, c) * _d_fforward(u, m, h) + min(0.0, c) * _d_bbackward(u, m, h)


def oracle_assemble(grid: Grid, p: ModelParams, lam: float) -> SparseSystem:
    """Operator-application route; intended for small grids (<= 9^3 or so).

    Columns of M are (M e) for unit vectors e, with the operator evaluated
    only on the rows inside the stencil envelope of the perturbed node.
    """
    s = grid.spec
    if lam != s.lam:
        raise InvalidSpec(f"lam={lam} does not match grid lam={s.lam}")
    I, J, K = s.I, s.J, s.K
    dx, dy, dz = s.dx, s.dy, s.dz
    diff = lam * p.sigma**2 / 2.0
    n = I * J * K

    def row_value(v, i0, j0, k0):
        """(M v) at one node, from the operator definitions."""
        if j0 == 0:
            return _d_forward(v[i0, :, k0], 0, dy)
        if j0 == J - 1:
            return _d_backward(v[i0, :, k0], J - 1, dy)
        beta = drift_beta(grid.x[i0], grid.y[j0], grid.z[k0], p)
        c = grid.y[j0]  # yt/lam
        lv = (
            diff * _d_second(v[i0, :, k0], j0, dy)
            + _upwind(v[i0, :, k0], j0, beta, dy, J)
            + _upwind(v[:, j0, k0], i0, c, dx, I)
            + _upwind(v[i0, j0, :], k0, c, dz, K)
        )
        return v[i0, j0, k0] - lv

    rows_l, cols_l, vals_l = [], [], []
    e = np.zeros((I, J, K))
    for ic in range(I):
        for jc in range(J):
            for kc in range(K):
                e[ic, jc, kc] = 1.0
                col = (ic * J + jc) * K + kc
                for ir in range(max(0, ic - 2), min(I, ic + 3)):
                    for jr in range(max(0, jc - 2), min(J, jc + 3)):
                        for kr in range(max(0, kc - 2), min(K, kc + 3)):
                            val = row_value(e, ir, jr, kr)
                            if val != 0.0:
                                rows_l.append((ir * J + jr) * K + kr)
                                cols_l.append(col)
                                vals_l.append(val)
                e[ic, jc, kc] = 0.0

    rows, cols, vals = _merge_triplets(
        n,
        np.asarray(rows_l, dtype=np.int64),
        np.asarray(cols_l, dtype=np.int64),
        np.asarray(vals_l, dtype=np.float64),
    )
    return SparseSystem(n=n, rows=rows, cols=cols, vals=vals, rhs=np.zeros(n))


def export_matrix_coo(sys: SparseSystem, path) -> None:
    """Debug export: `row col value` per line, 1-based, sorted by (row, col)."""
    with open(path, "w") as fh:
        for r, c, v in zip(sys.rows, sys.cols, sys.vals):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")
