"""Stencil filters, the three-convolution diffusion operator and halo BCs.

The variable-coefficient operator ``-div(D grad phi)`` is written with one
constant filter ``w`` as::

    0.5 * (conv(D * phi) + D * conv(phi) - phi * conv(D))

Boundary conditions are encoded purely in halo values (and, for the FV vacuum
treatment, an absorption increment on the adjacent interior cells) so the
stencil never changes shape near an edge.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import (check_choice, check_halo, check_same_shape,
                          check_spacing)
from .exceptions import (BoundaryHomogeneityError, DimensionMismatch,
                         NonPositiveDiagonal, UnsupportedCombination)
from .fields import GridField, StencilFilter, _conv, interior_view

EDGES = ("left", "right", "bottom", "top")
SCHEMES = ("fv", "convfem")
VACUUM_MODES = ("absorption", "zero_halo")

_CONVFEM_STENCIL = np.array([
    [-5.0, 50.0, -15.0, 50.0, -5.0],
    [50.0, -320.0, -660.0, -320.0, 50.0],
    [-15.0, -660.0, 3600.0, -660.0, -15.0],
    [50.0, -320.0, -660.0, -320.0, 50.0],
    [-5.0, 50.0, -15.0, 50.0, -5.0],
])


def build_fv_filter(dx, dy):
    """3x3 five-point finite-volume Laplacian filter."""
    check_spacing(dx, dy)
    ax, ay = 1.0 / dx ** 2, 1.0 / dy ** 2
    w = np.zeros((3, 3))
    w[0, 1] = w[2, 1] = -ax  # (u, v) = (-1, 0), (1, 0)
    w[1, 0] = w[1, 2] = -ay
    w[1, 1] = 2.0 * ax + 2.0 * ay
    return StencilFilter(w)


def build_convfem_filter(dx):
    """5x5 filter of the quadratic (9-noded) convolutional finite elements."""
    check_spacing(dx)
    return StencilFilter(_CONVFEM_STENCIL / 900.0 / dx ** 2)


def build_filter(scheme, dx, dy):
    if scheme == "fv":
        return build_fv_filter(dx, dy)
    if scheme == "convfem":
        if dx != dy:
            raise UnsupportedCombination("ConvFEM requires dx == dy")
        return build_convfem_filter(dx)
    raise ValueError(f"unknown scheme {scheme!r}")


def off_diagonal_filter(filt):
    w = filt.weights.copy()
    l = filt.halo_required
    w[l, l] = 0.0
    return StencilFilter(w)


def _diffusion(phi, D, weights, halo):
    out = _conv(D * phi, weights, halo)
    out += D * _conv(phi, weights, halo)
    out -= phi * _conv(D, weights, halo)
    out *= 0.5
    inner = np.zeros_like(out)
    interior_view(inner, halo)[...] = interior_view(out, halo)
    return inner


def diffusion_apply(phi, D, filt):
    """Discrete ``-div(D grad phi)`` on the interior (halo of result is zero)."""
    check_same_shape(phi, D)
    check_halo(phi, filt.halo_required)
    return GridField(_diffusion(phi.values, D.values, filt.weights, phi.halo), phi.halo)


def _diagonal(D, sigma_as, weights, halo):
    l = (weights.shape[0] - 1) // 2
    out = np.zeros_like(D)
    inner = interior_view(out, halo)
    inner[...] = (weights[l, l] * interior_view(D, halo)
                  - 0.5 * interior_view(_conv(D, weights, halo), halo)
                  + interior_view(sigma_as, halo))
    if not (inner > 0.0).all():
        j, i = np.argwhere(~(inner > 0.0))[0]
        raise NonPositiveDiagonal(
            f"diagonal coefficient {inner[j, i]!r} <= 0 at (i, j) = ({i + halo}, {j + halo})")
    return out


def diagonal_coefficients(D, sigma_as, filt):
    """Coefficient of ``phi[i, j]`` in row ``(i, j)`` of the discrete system."""
    check_same_shape(D, sigma_as)
    check_halo(D, filt.halo_required)
    return GridField(_diagonal(D.values, sigma_as.values, filt.weights, D.halo), D.halo)


def compute_sigma_as(sigma_a_g, sigma_s_out_g):
    """Absorption plus the precomputed out-scatter sum, cell by cell."""
    check_same_shape(sigma_a_g, sigma_s_out_g)
    return GridField(sigma_a_g.values + sigma_s_out_g.values, sigma_a_g.halo)


# -- halo boundary conditions -------------------------------------------------

def _mirror(n, h, low):
    """Interior layers that reflect onto the ``h`` halo layers, nearest first."""
    if low:
        return slice(2 * h - 1, h - 1, -1)
    stop = n - 2 * h - 1
    return slice(n - h - 1, stop if stop >= 0 else None, -1)


def _edge_slices(shape, halo, edge):
    """(halo strip, mirror strip, first interior layer) for ``edge``.

    Strips exclude the corner blocks. The mirror strip is ordered so that
    ``strip[k]`` reflects onto ``mirror[k]`` across the boundary face.
    """
    ny, nx = shape
    h = halo
    rows, cols = slice(h, ny - h), slice(h, nx - h)
    if edge == "left":
        return (rows, slice(0, h)), (rows, _mirror(nx, h, True)), (rows, slice(h, h + 1))
    if edge == "right":
        return ((rows, slice(nx - h, nx)), (rows, _mirror(nx, h, False)),
                (rows, slice(nx - h - 1, nx - h)))
    if edge == "bottom":
        return (slice(0, h), cols), (_mirror(ny, h, True), cols), (slice(h, h + 1), cols)
    if edge == "top":
        return ((slice(ny - h, ny), cols), (_mirror(ny, h, False), cols),
                (slice(ny - h - 1, ny - h), cols))
    raise ValueError(f"unknown edge {edge!r}")


def _reflect_edge(D, phi, halo, edge):
    strip, mirror, _ = _edge_slices(D.shape, halo, edge)
    D[strip] = -D[mirror]
    if phi is not None:
        phi[strip] = 0.0


def _zero_edge(D, phi, halo, edge):
    strip, _, _ = _edge_slices(D.shape, halo, edge)
    D[strip] = 0.0
    if phi is not None:
        phi[strip] = 0.0


def _fill_corners(D, halo, bc):
    """Reflective-reflective corners mirror diagonally; all others are zero."""
    ny, nx = D.shape
    h = halo
    for xedge, yedge in (("left", "bottom"), ("right", "bottom"),
                         ("left", "top"), ("right", "top")):
        xs = slice(0, h) if xedge == "left" else slice(nx - h, nx)
        ys = slice(0, h) if yedge == "bottom" else slice(ny - h, ny)
        if bc.get(xedge) == "reflective" and bc.get(yedge) == "reflective":
            xm = _mirror(nx, h, xedge == "left")
            ym = _mirror(ny, h, yedge == "bottom")
            D[ys, xs] = -D[ym, xm]
        else:
            D[ys, xs] = 0.0


def apply_reflective_halo(D_g, phi_g, edge):
    """Zero-current edge: halo flux 0 and halo D the negated mirror value.

    With one halo layer the face-averaged diffusivity becomes exactly zero.
    With two layers (ConvFEM) this is the constrained-D treatment, which is
    only consistent when the two boundary-adjacent layers share one D value;
    :func:`check_boundary_homogeneity` verifies that.
    """
    check_choice(edge, "edge", EDGES)
    check_halo(D_g, 1)
    if phi_g is not None:
        check_same_shape(D_g, phi_g)
    _reflect_edge(D_g.values, None if phi_g is None else phi_g.values, D_g.halo, edge)


def apply_vacuum(problem, edge, mode=None):
    """Apply a bare-surface condition on ``edge`` to every group of ``problem``.

    ``absorption`` adds ``1/(2 dx)`` (x-facing) or ``1/(2 dy)`` (y-facing) to
    the absorption of the interior cells along the edge and gives the halo the
    reflective treatment, so no diffusive leakage competes with the added sink.
    ``zero_halo`` sets halo flux and D to zero and leaves absorption alone.
    Diagonal coefficients are rebuilt afterwards.
    """
    check_choice(edge, "edge", EDGES)
    mode = problem.vacuum_mode if mode is None else mode
    check_choice(mode, "vacuum mode", VACUUM_MODES)
    if mode == "absorption" and problem.filter.halo_required > 1:
        raise UnsupportedCombination(
            "absorption vacuum treatment needs a 3x3 filter; use zero_halo")
    for g in range(problem.n_groups):
        _vacuum_edge(problem.D[g].values, problem.sigma_as[g].values, problem.halo,
                     edge, mode, problem.dx, problem.dy)
        problem.diag[g] = GridField(
            _diagonal(problem.D[g].values, problem.sigma_as[g].values,
                      problem.filter.weights, problem.halo), problem.halo)


def _vacuum_edge(D, sigma_as, halo, edge, mode, dx, dy):
    if mode == "zero_halo":
        _zero_edge(D, None, halo, edge)
        return
    _reflect_edge(D, None, halo, edge)
    _, _, first = _edge_slices(D.shape, halo, edge)
    sigma_as[first] += 1.0 / (2.0 * dx) if edge in ("left", "right") else 1.0 / (2.0 * dy)


def check_boundary_homogeneity(D_interior, bc, depth=2):
    """Raise unless the ``depth`` cell layers next to every reflective edge
    share one common D value."""
    values = []
    for edge, tag in bc.items():
        if tag != "reflective":
            continue
        if edge == "left":
            block = D_interior[:, :depth]
        elif edge == "right":
            block = D_interior[:, -depth:]
        elif edge == "bottom":
            block = D_interior[:depth, :]
        else:
            block = D_interior[-depth:, :]
        values.append(block.ravel())
    if not values:
        return
    values = np.concatenate(values)
    if not np.all(values == values[0]):
        raise BoundaryHomogeneityError(
            "D varies along a reflective edge (or between reflective edges); "
            "the constrained two-layer halo is not valid here")


def _pad(interior, halo):
    out = np.zeros((interior.shape[0] + 2 * halo, interior.shape[1] + 2 * halo))
    interior_view(out, halo)[...] = interior
    return out


def build_group_operator(D_interior, sigma_as_interior, dx, dy, scheme, bc,
                         vacuum_mode, constrained_reflective=False):
    """Halo-padded D, effective sigma_as and diagonal for one group and level."""
    filt = build_filter(scheme, dx, dy)
    halo = filt.halo_required
    if halo > 1 and "reflective" in bc.values():
        if not constrained_reflective:
            raise UnsupportedCombination(
                "reflective edges with a 5x5 filter require constrained_reflective=True")
        check_boundary_homogeneity(D_interior, bc, depth=halo)
    D = _pad(D_interior, halo)
    sigma_as = _pad(sigma_as_interior, halo)
    for edge in EDGES:
        tag = bc.get(edge, "vacuum")
        if tag == "reflective":
            _reflect_edge(D, None, halo, edge)
        else:
            _vacuum_edge(D, sigma_as, halo, edge, vacuum_mode, dx, dy)
    _fill_corners(D, halo, bc)
    diag = _diagonal(D, sigma_as, filt.weights, halo)
    return filt, D, sigma_as, diag


@dataclass
class DiscretisedProblem:
    """Per-group operator data on the finest grid plus the coupling fields.

    ``D``, ``sigma_as`` and ``diag`` carry boundary conditions (halo values and
    vacuum absorption). ``D_interior`` and ``sigma_as_interior`` are the raw
    material values, kept so coarse grids can rebuild BCs from scratch.
    ``scatter[(g_from, g_to)]`` holds only the nonzero transfer fields.
    """

    dx: float
    dy: float
    scheme: str
    filter: StencilFilter
    od_filter: StencilFilter
    D: list
    sigma_as: list
    diag: list
    bc: dict
    vacuum_mode: str
    D_interior: list
    sigma_as_interior: list
    scatter: dict = field(default_factory=dict)
    nu_sigma_f: list = field(default_factory=list)
    chi: list = field(default_factory=list)
    constrained_reflective: bool = False

    @property
    def n_groups(self):
        return len(self.D)

    @property
    def halo(self):
        return self.filter.halo_required

    @property
    def shape(self):
        """Interior ``(ny, nx)``."""
        return self.D_interior[0].shape


def default_vacuum_mode(scheme):
    return "absorption" if scheme == "fv" else "zero_halo"


def discretise(fields, scheme="fv", vacuum_mode=None, within_group="cancel",
               constrained_reflective=False):
    """Build a :class:`DiscretisedProblem` from rasterised material fields.

    ``within_group`` controls the self-scatter term ``sigma_s[g -> g]``:
    ``"cancel"`` drops it from both the removal term and the source,
    ``"both"`` keeps it in the removal term and in the (lagged) source. Both
    choices share the same converged solution.
    """
    check_choice(scheme, "scheme", SCHEMES)
    vacuum_mode = default_vacuum_mode(scheme) if vacuum_mode is None else vacuum_mode
    check_choice(vacuum_mode, "vacuum_mode", VACUUM_MODES)
    check_choice(within_group, "within_group", ("cancel", "both"))
    if scheme == "convfem" and vacuum_mode == "absorption":
        raise UnsupportedCombination("ConvFEM supports only the zero_halo vacuum mode")
    G = fields.n_groups
    D_int, sas_int, D_list, sas_list, diag_list = [], [], [], [], []
    scatter = {}
    filt = None
    for g in range(G):
        out_scatter = np.zeros(fields.shape)
        for gp in range(G):
            s = fields.sigma_s(g, gp)
            if gp == g and within_group == "cancel":
                continue
            out_scatter = out_scatter + s
        sas = compute_sigma_as(GridField(fields.sigma_a(g), 0),
                               GridField(out_scatter, 0)).values
        D_g = fields.D(g)
        filt, D, sigma_as, diag = build_group_operator(
            D_g, sas, fields.dx, fields.dy, scheme, fields.bc, vacuum_mode,
            constrained_reflective)
        halo = filt.halo_required
        D_int.append(D_g)
        sas_int.append(sas)
        D_list.append(GridField(D, halo))
        sas_list.append(GridField(sigma_as, halo))
        diag_list.append(GridField(diag, halo))
        for gp in range(G):
            if gp == g and within_group == "cancel":
                continue
            s = fields.sigma_s(g, gp)
            if np.any(s):
                scatter[(g, gp)] = s
    if D_list and D_list[0].values.shape[0] < 1:
        raise DimensionMismatch("empty grid")
    return DiscretisedProblem(
        dx=fields.dx, dy=fields.dy, scheme=scheme, filter=filt,
        od_filter=off_diagonal_filter(filt), D=D_list, sigma_as=sas_list,
        diag=diag_list, bc=dict(fields.bc), vacuum_mode=vacuum_mode,
        D_interior=D_int, sigma_as_interior=sas_int, scatter=scatter,
        nu_sigma_f=[fields.nu_sigma_f(g) for g in range(G)],
        chi=[fields.chi(g) for g in range(G)],
        constrained_reflective=constrained_reflective)
