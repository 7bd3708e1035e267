"""Reference path: explicit sparse assembly and lexicographic Gauss-Seidel.

The matrix is built straight from the five-point coefficient formulas (or,
for larger filters, by collecting the coefficient of every neighbour), never
through the convolution kernels, so it can cross-check them.
"""

from dataclasses import dataclass

import numba
import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive, check_positive_int
from .exceptions import NonConvergence, NonPositiveDiagonal
from .fields import GridField, interior_view


@dataclass
class SparseSystem:
    """CSR matrix over the interior cells of one group.

    Row of cell ``(i, j)`` is ``j * nx + i``.
    """

    matrix: sparse.csr_matrix
    rhs: np.ndarray
    nx: int
    ny: int

    @property
    def n(self):
        return self.nx * self.ny

    def index(self, i, j):
        return j * self.nx + i

    def cell(self, row):
        return row % self.nx, row // self.nx


def _fv_coefficients(D, sigma_as, dx, dy, h):
    """Five-point coefficients on the interior, written out term by term."""
    ny, nx = D.shape[0] - 2 * h, D.shape[1] - 2 * h
    c = D[h:h + ny, h:h + nx]
    west = D[h:h + ny, h - 1:h - 1 + nx]
    east = D[h:h + ny, h + 1:h + 1 + nx]
    south = D[h - 1:h - 1 + ny, h:h + nx]
    north = D[h + 1:h + 1 + ny, h:h + nx]
    coef = {
        (-1, 0): -(c + west) / (2.0 * dx ** 2),
        (1, 0): -(c + east) / (2.0 * dx ** 2),
        (0, -1): -(c + south) / (2.0 * dy ** 2),
        (0, 1): -(c + north) / (2.0 * dy ** 2),
    }
    centre = ((west + 2.0 * c + east) / (2.0 * dx ** 2)
              + (south + 2.0 * c + north) / (2.0 * dy ** 2)
              + sigma_as[h:h + ny, h:h + nx])
    return centre, coef


def _general_coefficients(D, sigma_as, weights, h):
    """Coefficients of the three-convolution operator collected per neighbour:
    ``w_n (D_c + D_n) / 2`` off the centre and ``(w_0 D_c - sum_n w_n D_n) / 2``
    plus removal on it."""
    l = (weights.shape[0] - 1) // 2
    ny, nx = D.shape[0] - 2 * h, D.shape[1] - 2 * h
    c = D[h:h + ny, h:h + nx]
    coef = {}
    acc = np.zeros_like(c)
    for v in range(-l, l + 1):
        for u in range(-l, l + 1):
            w = weights[u + l, v + l]
            if (u, v) == (0, 0) or w == 0.0:
                continue
            n = D[h + v:h + v + ny, h + u:h + u + nx]
            coef[(u, v)] = w * (c + n) / 2.0
            acc += w * n
    centre = 0.5 * (weights[l, l] * c - acc) + sigma_as[h:h + ny, h:h + nx]
    return centre, coef


def assemble_sparse_system(problem, group=0, source=None):
    """Assemble the interior system of ``group`` with halo values folded in.

    Halo fluxes are zero under every boundary treatment, so couplings to halo
    cells are dropped; halo D values still enter the centre coefficient.
    """
    h = problem.halo
    D = problem.D[group].values
    sigma_as = problem.sigma_as[group].values
    ny, nx = problem.shape
    if problem.scheme == "fv":
        centre, coef = _fv_coefficients(D, sigma_as, problem.dx, problem.dy, h)
    else:
        centre, coef = _general_coefficients(D, sigma_as, problem.filter.weights, h)
    if not (centre > 0).all():
        j, i = np.argwhere(~(centre > 0))[0]
        raise NonPositiveDiagonal(f"diagonal {centre[j, i]!r} <= 0 at interior cell ({i}, {j})")
    jj, ii = np.mgrid[0:ny, 0:nx]
    rows = [(jj * nx + ii).ravel()]
    cols = [rows[0]]
    vals = [centre.ravel()]
    for (u, v), a in coef.items():
        ti, tj = ii + u, jj + v
        inside = (ti >= 0) & (ti < nx) & (tj >= 0) & (tj < ny)
        rows.append((jj * nx + ii)[inside])
        cols.append((tj * nx + ti)[inside])
        vals.append(a[inside])
    matrix = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nx * ny, nx * ny)).tocsr()
    matrix.sort_indices()
    if source is None:
        rhs = np.zeros(nx * ny)
    else:
        src = source.values if isinstance(source, GridField) else np.asarray(source, float)
        if src.shape == D.shape:
            src = interior_view(src, h)
        rhs = np.ascontiguousarray(src, dtype=float).ravel().copy()
    return SparseSystem(matrix, rhs, nx, ny)


@numba.njit(cache=True)
def _gs_kernel(indptr, indices, data, b, x, target, max_iters):
    n = b.shape[0]
    history = np.empty(max_iters + 1)
    sweeps = 0
    while True:
        res = 0.0
        for row in range(n):
            acc = b[row]
            for k in range(indptr[row], indptr[row + 1]):
                acc -= data[k] * x[indices[k]]
            if abs(acc) > res:
                res = abs(acc)
        history[sweeps] = res
        if res < target or sweeps == max_iters:
            break
        for row in range(n):
            acc = b[row]
            diag = 0.0
            for k in range(indptr[row], indptr[row + 1]):
                col = indices[k]
                if col == row:
                    diag = data[k]
                else:
                    acc -= data[k] * x[col]
            x[row] = acc / diag
        sweeps += 1
    return sweeps, history[:sweeps + 1]


def gauss_seidel_solve(system, x0=None, tol=1e-12, max_iters=100_000, strict=True):
    """Lexicographic Gauss-Seidel until ``linf(b - Ax) < tol * linf(b)``.

    Returns ``(x, n_sweeps, residual_history)``. With ``strict`` the budget
    running out raises :class:`NonConvergence` carrying the history.
    """
    check_positive(tol, "tol")
    max_iters = check_positive_int(max_iters, "max_iters", minimum=0)
    A = system.matrix
    b = np.ascontiguousarray(system.rhs, dtype=float)
    x = np.zeros(system.n) if x0 is None else np.array(x0, dtype=float).ravel()
    target = tol * float(np.max(np.abs(b))) if b.size else 0.0
    sweeps, history = _gs_kernel(A.indptr.astype(np.int64), A.indices.astype(np.int64),
                                 A.data, b, x, target, max_iters)
    if strict and history[-1] >= target and not history[-1] == 0.0:
        raise NonConvergence(
            f"Gauss-Seidel residual {history[-1]:.3e} after {sweeps} sweeps "
            f"(target {target:.3e})", state=history)
    return x, int(sweeps), history


class GaussSeidelSolver(BaseEstimator):
    """Gauss-Seidel spatial solver for one group, interchangeable with
    :class:`~convdiffusion.multigrid.MultigridSolver` in the eigen driver."""

    def __init__(self, tol=1e-12, max_iters=100_000):
        self.tol = tol
        self.max_iters = max_iters

    def fit(self, problem, group=0):
        self.system_ = assemble_sparse_system(problem, group)
        self.halo_ = problem.halo
        self.group_ = group
        return self

    def solve(self, source, phi0):
        h = self.halo_
        sys = self.system_
        sys.rhs = interior_view(source, h).ravel().copy()
        x0 = interior_view(phi0, h).ravel()
        x, n, history = gauss_seidel_solve(sys, x0, self.tol, self.max_iters, strict=False)
        phi = np.zeros_like(phi0)
        interior_view(phi, h)[...] = x.reshape(sys.ny, sys.nx)
        return phi, n, float(history[-1])

    def predict(self, source, phi0=None):
        check_is_fitted(self, "system_")
        sys = self.system_
        sys.rhs = np.asarray(source, dtype=float).ravel().copy()
        x, self.n_iter_, history = gauss_seidel_solve(
            sys, None if phi0 is None else np.asarray(phi0).ravel(),
            self.tol, self.max_iters)
        self.residual_ = float(history[-1])
        return x.reshape(sys.ny, sys.nx)


def reference_eigensolve(problem, controls=None, gs_tol=1e-12, gs_max_iters=100_000,
                         phi0=None):
    """Power iteration with Gauss-Seidel replacing the multigrid solves."""
    from .multigroup import power_iteration

    solvers = [GaussSeidelSolver(gs_tol, gs_max_iters).fit(problem, g)
               for g in range(problem.n_groups)]
    return power_iteration(problem, solvers, controls, phi0=phi0)
