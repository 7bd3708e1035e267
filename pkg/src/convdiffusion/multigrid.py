"""Single-group solver: convolutional Jacobi smoothing inside a sawtooth
multigrid cycle.

One cycle restricts the fine residual down to the coarsest grid, smooths a
zero-initialised correction there, then walks back up: upsample, smooth with
that level's restricted residual, repeat. The finest correction is added to
the flux. Coarse operators are rediscretised from harmonically averaged
material data; boundary halos are rebuilt from the edge tags on every level.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from ._validation import (check_halo, check_positive, check_positive_int,
                          check_same_shape)
from .discretisation import build_group_operator, off_diagonal_filter
from .exceptions import IndivisibleDims, OddDimensions
from .fields import (GridField, StencilFilter, _conv, _hadamard_inverse,
                     _upsample2x, interior_view)

MIN_COARSE_CELLS = 4


@dataclass(frozen=True)
class Level:
    dx: float
    dy: float
    filter: StencilFilter
    od_filter: StencilFilter
    D: np.ndarray
    sigma_as: np.ndarray
    diag: np.ndarray
    inv_diag: np.ndarray

    @property
    def halo(self):
        return self.filter.halo_required

    @property
    def shape(self):
        """Interior ``(ny, nx)``."""
        h = self.halo
        return self.D.shape[0] - 2 * h, self.D.shape[1] - 2 * h


@dataclass(frozen=True)
class MultigridHierarchy:
    levels: tuple
    jacobi_iters_per_level: int = 2

    @property
    def n_levels(self):
        return len(self.levels)


def _offdiag(phi, D, w_od, halo):
    out = D * _conv(phi, w_od, halo)
    out += _conv(D * phi, w_od, halo)
    out *= 0.5
    return out


def _zero_halo(a, h):
    a[:h, :] = 0.0
    a[-h:, :] = 0.0
    a[:, :h] = 0.0
    a[:, -h:] = 0.0
    return a


def _jacobi(phi, s, inv_diag, D, w_od, halo):
    return _zero_halo(inv_diag * (s - _offdiag(phi, D, w_od, halo)), halo)


def _residual(phi, s, diag, D, w_od, halo):
    return _zero_halo(s - (diag * phi + _offdiag(phi, D, w_od, halo)), halo)


def _check_operands(phi, s, D, filt):
    check_same_shape(phi, s, D)
    check_halo(phi, filt.halo_required)


def jacobi_step(phi, s, inv_diag, D, od_filter):
    """One Jacobi sweep written with the off-diagonal filter.

    ``phi_new = inv_diag * (s - 0.5 * (D * conv(phi) + conv(D * phi)))``
    on the interior; the returned halo is zero.
    """
    _check_operands(phi, s, D, od_filter)
    check_same_shape(phi, inv_diag)
    out = _jacobi(phi.values, s.values, inv_diag.values, D.values,
                  od_filter.weights, phi.halo)
    return GridField(out, phi.halo)


def residual(phi, s, diag, D, od_filter):
    """``s - A phi`` on the interior, zero in the halo."""
    _check_operands(phi, s, D, od_filter)
    check_same_shape(phi, diag)
    out = _residual(phi.values, s.values, diag.values, D.values,
                    od_filter.weights, phi.halo)
    return GridField(out, phi.halo)


def _restrict(fine, halo):
    inner = interior_view(fine, halo)
    ny, nx = inner.shape
    if ny % 2 or nx % 2:
        raise OddDimensions(f"cannot restrict an interior of {nx} x {ny} cells")
    coarse = np.zeros((ny // 2 + 2 * halo, nx // 2 + 2 * halo))
    dst = interior_view(coarse, halo)
    for v in (0, 1):
        for u in (0, 1):
            dst += 0.25 * inner[v::2, u::2]
    return coarse


def restrict(fine):
    """Average each 2x2 block of fine interior cells (stride-2 conv, weights 0.25)."""
    return GridField(_restrict(fine.values, fine.halo), fine.halo)


def harmonic_coarsen(values):
    """2x2 harmonic mean ``4 / sum(1 / v)``; a block containing 0 gives 0."""
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    if ny % 2 or nx % 2:
        raise OddDimensions(f"cannot coarsen a {nx} x {ny} field")
    blocks = [values[v::2, u::2] for v in (0, 1) for u in (0, 1)]
    zero = np.zeros(blocks[0].shape, dtype=bool)
    for b in blocks:
        zero |= b == 0.0
    total = 0.0
    for b in blocks:
        total = total + 1.0 / np.where(zero, 1.0, b)
    out = 4.0 / total
    out[zero] = 0.0
    return out


def _make_level(D_int, sas_int, dx, dy, problem):
    filt, D, sigma_as, diag = build_group_operator(
        D_int, sas_int, dx, dy, problem.scheme, problem.bc, problem.vacuum_mode,
        problem.constrained_reflective)
    return Level(dx, dy, filt, off_diagonal_filter(filt), D, sigma_as, diag,
                 _hadamard_inverse(diag, filt.halo_required))


def build_hierarchy(problem, n_levels=3, group=0, jacobi_iters=2):
    """Levels 1 (finest, taken from ``problem``) to ``n_levels``."""
    n_levels = check_positive_int(n_levels, "n_levels")
    jacobi_iters = check_positive_int(jacobi_iters, "jacobi_iters")
    ny, nx = problem.shape
    factor = 2 ** (n_levels - 1)
    if ny % factor or nx % factor:
        raise IndivisibleDims(
            f"interior {nx} x {ny} not divisible by 2^{n_levels - 1}")
    if n_levels > 1 and min(ny, nx) // factor < MIN_COARSE_CELLS:
        raise IndivisibleDims(
            f"coarsest level would be {nx // factor} x {ny // factor}; "
            f"need at least {MIN_COARSE_CELLS} x {MIN_COARSE_CELLS}")
    halo = problem.halo
    levels = [Level(problem.dx, problem.dy, problem.filter, problem.od_filter,
                    problem.D[group].values, problem.sigma_as[group].values,
                    problem.diag[group].values,
                    _hadamard_inverse(problem.diag[group].values, halo))]
    D_int = problem.D_interior[group]
    sas_int = problem.sigma_as_interior[group]
    dx, dy = problem.dx, problem.dy
    for _ in range(n_levels - 1):
        D_int, sas_int = harmonic_coarsen(D_int), harmonic_coarsen(sas_int)
        dx, dy = 2.0 * dx, 2.0 * dy
        levels.append(_make_level(D_int, sas_int, dx, dy, problem))
    return MultigridHierarchy(tuple(levels), jacobi_iters)


def _cycle(phi, r1, hierarchy):
    # numpy reference; MultigridSolver.solve runs the compiled equivalent
    levels = hierarchy.levels
    iters = hierarchy.jacobi_iters_per_level
    halo = levels[0].halo
    rs = [r1]
    for _ in levels[1:]:
        rs.append(_restrict(rs[-1], halo))
    delta = None
    for lev, r in zip(reversed(levels), reversed(rs)):
        if delta is None:
            delta = np.zeros_like(r)
        else:
            delta = _upsample2x(delta, halo)
        for _ in range(iters):
            delta = _jacobi(delta, r, lev.inv_diag, lev.D, lev.od_filter.weights, halo)
    return phi + delta


def mg_cycle(phi, s, hierarchy):
    """One sawtooth multigrid cycle; returns the updated flux."""
    fine = hierarchy.levels[0]
    _check_operands(phi, s, GridField(fine.D, fine.halo), fine.od_filter)
    r1 = _residual(phi.values, s.values, fine.diag, fine.D, fine.od_filter.weights, phi.halo)
    return GridField(_cycle(phi.values, r1, hierarchy), phi.halo)


class MultigridSolver(BaseEstimator):
    """Sawtooth multigrid for one energy group.

    ``fit`` builds the level hierarchy for one group of a discretised problem;
    ``predict`` solves ``A phi = source`` with up to ``n_iters`` cycles.

    Parameters
    ----------
    n_levels : int
        Grid levels including the finest one.
    jacobi_iters : int
        Jacobi sweeps on every level of a cycle.
    n_iters : int
        Cycle budget per solve.
    tol : float or None
        Stop early once ``linf(residual) <= tol * linf(source)``. ``None``
        always runs ``n_iters`` cycles.
    """

    def __init__(self, n_levels=3, jacobi_iters=2, n_iters=100, tol=None):
        self.n_levels = n_levels
        self.jacobi_iters = jacobi_iters
        self.n_iters = n_iters
        self.tol = tol

    def fit(self, problem, group=0):
        check_positive_int(self.n_iters, "n_iters")
        if self.tol is not None:
            check_positive(self.tol, "tol")
        self.hierarchy_ = build_hierarchy(problem, self.n_levels, group, self.jacobi_iters)
        self.group_ = group
        levels = self.hierarchy_.levels
        taps = [_kernels.nonzeros(lev.od_filter.weights) for lev in levels]
        self._packed = (tuple(lev.inv_diag for lev in levels),
                        tuple(lev.D for lev in levels),
                        *(tuple(t[k] for t in taps) for k in range(3)))
        return self

    def solve(self, source, phi0):
        """Padded-array solve used by the multigroup driver.

        Returns ``(phi, n_cycles, residual_linf)``; the residual is that of
        the returned flux when ``tol`` is set, else of the last cycle's input.
        """
        levels = self.hierarchy_.levels
        target = -1.0 if self.tol is None else self.tol * float(np.max(np.abs(source)))
        phi, n, res = _kernels.mg_solve(
            np.ascontiguousarray(phi0, dtype=float), np.ascontiguousarray(source, dtype=float),
            levels[0].diag, *self._packed,
            levels[0].halo, self.hierarchy_.jacobi_iters_per_level, self.n_iters, target)
        return phi, n, float(res)

    def predict(self, source, phi0=None):
        """Interior solution for an interior ``source`` array."""
        check_is_fitted(self, "hierarchy_")
        halo = self.hierarchy_.levels[0].halo
        s = GridField.from_interior(source, halo).values
        p = np.zeros_like(s) if phi0 is None else GridField.from_interior(phi0, halo).values
        phi, self.n_iter_, self.residual_ = self.solve(s, p)
        return interior_view(phi, halo).copy()
