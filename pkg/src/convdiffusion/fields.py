"""Halo-padded grid fields and the stencil primitives built on them.

Arrays are stored row-major with shape ``(ny_total, nx_total)`` and indexed
``values[j, i]`` where ``i`` runs along x and ``j`` along y. Filter weights are
indexed by offset ``(u, v)``: ``weights[u + l, v + l]`` multiplies the value at
``(i + u, j + v)``.

The public functions validate their inputs and wrap the underscore kernels,
which take raw padded arrays and are what the solvers call in their loops.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_finite, check_halo, check_same_shape
from .exceptions import DimensionMismatch, ZeroDivisor


@dataclass
class GridField:
    """Scalar field on a regular grid surrounded by ``halo`` layers of cells."""

    values: np.ndarray
    halo: int = 1

    def __post_init__(self):
        self.values = check_finite(self.values)
        if self.values.ndim != 2:
            raise DimensionMismatch(f"expected a 2D array, got ndim={self.values.ndim}")
        if self.halo < 0:
            raise ValueError("halo must be non-negative")
        ny, nx = self.values.shape
        if nx < 2 * self.halo + 1 or ny < 2 * self.halo + 1:
            raise DimensionMismatch(
                f"shape {self.values.shape} too small for halo {self.halo}")

    @classmethod
    def zeros(cls, nx, ny, halo=1):
        """Field with an ``nx`` by ``ny`` interior, all zero."""
        return cls(np.zeros((ny + 2 * halo, nx + 2 * halo)), halo)

    @classmethod
    def from_interior(cls, interior, halo=1, fill=0.0):
        interior = np.asarray(interior, dtype=float)
        values = np.full((interior.shape[0] + 2 * halo,
                          interior.shape[1] + 2 * halo), float(fill))
        values[halo:values.shape[0] - halo, halo:values.shape[1] - halo] = interior
        return cls(values, halo)

    @property
    def nx_total(self):
        return self.values.shape[1]

    @property
    def ny_total(self):
        return self.values.shape[0]

    @property
    def nx(self):
        return self.values.shape[1] - 2 * self.halo

    @property
    def ny(self):
        return self.values.shape[0] - 2 * self.halo

    @property
    def interior(self):
        """Writable view of the interior cells."""
        return interior_view(self.values, self.halo)

    def __getitem__(self, ij):
        i, j = ij
        return self.values[j, i]

    def __setitem__(self, ij, value):
        i, j = ij
        self.values[j, i] = value

    def copy(self):
        return GridField(self.values.copy(), self.halo)


@dataclass(frozen=True)
class StencilFilter:
    """Odd-sized square convolution filter with weights indexed by (u, v)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
            raise DimensionMismatch(f"filter must be odd and square, got {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def halo_required(self):
        return (self.size - 1) // 2

    def weight(self, u, v):
        l = self.halo_required
        return self.weights[u + l, v + l]

    def __eq__(self, other):
        if not isinstance(other, StencilFilter):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())


def interior_view(values, halo):
    if halo == 0:
        return values
    return values[halo:-halo, halo:-halo]


def _conv(x, weights, halo):
    l = (weights.shape[0] - 1) // 2
    ny, nx = x.shape
    out = np.zeros_like(x)
    dst = out[halo:ny - halo, halo:nx - halo]
    # fixed order: v outer, u inner, both ascending
    for v in range(-l, l + 1):
        for u in range(-l, l + 1):
            c = weights[u + l, v + l]
            if c == 0.0:
                continue
            dst += c * x[halo + v:ny - halo + v, halo + u:nx - halo + u]
    return out


def conv_apply(field, filt):
    """Stride-1 convolution of ``field`` by ``filt``; output halo is zero."""
    check_halo(field, filt.halo_required)
    return GridField(_conv(field.values, filt.weights, field.halo), field.halo)


def hadamard_product(a, b):
    check_same_shape(a, b)
    return GridField(a.values * b.values, a.halo)


def _hadamard_inverse(values, halo, region="interior"):
    out = np.zeros_like(values)
    if region == "all":
        src, dst = values, out
    elif region == "interior":
        src, dst = interior_view(values, halo), interior_view(out, halo)
    else:
        raise ValueError(f"region must be 'interior' or 'all', got {region!r}")
    zeros = np.argwhere(src == 0.0)
    if zeros.size:
        j, i = zeros[0]
        if region == "interior":
            i, j = i + halo, j + halo
        raise ZeroDivisor((int(i), int(j)))
    dst[...] = 1.0 / src
    return out


def hadamard_inverse(a, region="interior"):
    """Componentwise reciprocal over ``region``; cells outside it are zero."""
    return GridField(_hadamard_inverse(a.values, a.halo, region), a.halo)


def _upsample2x(coarse, halo):
    inner = interior_view(coarse, halo)
    fine_inner = np.repeat(np.repeat(inner, 2, axis=0), 2, axis=1)
    out = np.zeros((fine_inner.shape[0] + 2 * halo, fine_inner.shape[1] + 2 * halo))
    interior_view(out, halo)[...] = fine_inner
    return out


def upsample2x(coarse):
    """Copy each coarse interior value into its 2x2 block of fine cells."""
    return GridField(_upsample2x(coarse.values, coarse.halo), coarse.halo)


def norms(a):
    """Interior ``(linf, l2, sum)`` of a field."""
    inner = a.interior
    if inner.size == 0:
        return 0.0, 0.0, 0.0
    return (float(np.max(np.abs(inner))), float(np.sqrt(np.sum(inner * inner))),
            float(np.sum(inner)))
