"""Compiled versions of the hot stencil loops.

Each kernel performs, per cell, exactly the floating-point operations of the
numpy composition it replaces and in the same order (v outer, u inner, zero
weights skipped), so results are bitwise identical. Tests enforce this.
"""

import numba
import numpy as np


def nonzeros(w):
    """Offsets and weights of the nonzero taps of ``w`` in accumulation order.

    ``w`` is indexed ``[u + l, v + l]``; taps are listed v outer, u inner.
    """
    w = np.asarray(w, dtype=float)
    l = (w.shape[0] - 1) // 2
    du, dv, cw = [], [], []
    for v in range(-l, l + 1):
        for u in range(-l, l + 1):
            if w[u + l, v + l] != 0.0:
                du.append(u)
                dv.append(v)
                cw.append(w[u + l, v + l])
    return (np.array(du, dtype=np.int64), np.array(dv, dtype=np.int64),
            np.array(cw, dtype=float))


@numba.njit(cache=True)
def conv(x, du, dv, cw, halo):
    ny, nx = x.shape
    out = np.zeros_like(x)
    for j in range(halo, ny - halo):
        for i in range(halo, nx - halo):
            acc = 0.0
            for k in range(cw.shape[0]):
                acc += cw[k] * x[j + dv[k], i + du[k]]
            out[j, i] = acc
    return out


@numba.njit(cache=True)
def _offdiag(phi, D, du, dv, cw, j, i):
    a = 0.0
    b = 0.0
    for k in range(cw.shape[0]):
        jj = j + dv[k]
        ii = i + du[k]
        a += cw[k] * phi[jj, ii]
        b += cw[k] * (D[jj, ii] * phi[jj, ii])
    t = D[j, i] * a
    t = t + b
    return t * 0.5


@numba.njit(cache=True)
def jacobi(phi, s, inv_diag, D, du, dv, cw, halo):
    ny, nx = phi.shape
    out = np.zeros_like(phi)
    for j in range(halo, ny - halo):
        for i in range(halo, nx - halo):
            out[j, i] = inv_diag[j, i] * (s[j, i] - _offdiag(phi, D, du, dv, cw, j, i))
    return out


@numba.njit(cache=True)
def residual(phi, s, diag, D, du, dv, cw, halo):
    ny, nx = phi.shape
    out = np.zeros_like(phi)
    for j in range(halo, ny - halo):
        for i in range(halo, nx - halo):
            t = _offdiag(phi, D, du, dv, cw, j, i)
            out[j, i] = s[j, i] - (diag[j, i] * phi[j, i] + t)
    return out

@numba.njit(cache=True)
def restrict(fine, halo):
    ny, nx = fine.shape[0] - 2 * halo, fine.shape[1] - 2 * halo
    out = np.zeros((ny // 2 + 2 * halo, nx // 2 + 2 * halo))
    for J in range(ny // 2):
        for I in range(nx // 2):
            acc = 0.0
            for v in range(2):
                for u in range(2):
                    acc += 0.25 * fine[halo + 2 * J + v, halo + 2 * I + u]
            out[halo + J, halo + I] = acc
    return out


@numba.njit(cache=True)
def upsample2x(coarse, halo):
    ny, nx = coarse.shape[0] - 2 * halo, coarse.shape[1] - 2 * halo
    out = np.zeros((2 * ny + 2 * halo, 2 * nx + 2 * halo))
    for J in range(ny):
        for I in range(nx):
            c = coarse[halo + J, halo + I]
            for v in range(2):
                for u in range(2):
                    out[halo + 2 * J + v, halo + 2 * I + u] = c
    return out


@numba.njit(cache=True)
def cycle(phi, r1, inv_diags, Ds, dus, dvs, cws, halo, iters):
    """One sawtooth cycle; same arithmetic as ``multigrid._cycle``."""
    n = len(Ds)
    rs = [r1]
    for k in range(1, n):
        rs.append(restrict(rs[k - 1], halo))
    delta = np.zeros_like(rs[n - 1])
    for k in range(n - 1, -1, -1):
        if k < n - 1:
            delta = upsample2x(delta, halo)
        for _ in range(iters):
            delta = jacobi(delta, rs[k], inv_diags[k], Ds[k], dus[k], dvs[k], cws[k], halo)
    return phi + delta


@numba.njit(cache=True)
def mg_solve(phi, source, diag, inv_diags, Ds, dus, dvs, cws, halo, iters, n_iters,
             target):
    """Cycle until the residual max-norm is <= ``target`` or ``n_iters`` cycles ran.

    A negative ``target`` disables the early stop.
    """
    n = 0
    res = np.inf
    for n in range(n_iters + 1):
        r = residual(phi, source, diag, Ds[0], dus[0], dvs[0], cws[0], halo)
        res = np.max(np.abs(r))
        if (target >= 0.0 and res <= target) or n == n_iters:
            break
        phi = cycle(phi, r, inv_diags, Ds, dus, dvs, cws, halo, iters)
    return phi, n, res
