"""Lattice descriptions and rasterisation of assemblies and quarter cores.

Lattice and core maps are written top row first, as they would be drawn. On
the computational grid ``j`` increases upwards, so map row ``r`` of an
``n``-row map lands in block row ``n - 1 - r``.

Geometry file layout::

    [lattice]
    pitch_cm 1.26                 # lattice-cell pitch
    cells_per_lattice_cell 20
    inner_region_cells 12
    FFFFFFFFFFFFFFFFF             # one row per lattice row: F fuel, G guide, M moderator
    ...
    [core]                        # optional: 3 rows of W (withdrawn) / I (inserted)
    WWI
    WIW
    IWW

Optional ``[lattice]`` keys: ``fuel``, ``moderator``, ``control`` (material
names, defaults ``uox``/``moderator``/``control``) and ``bc_left``,
``bc_right``, ``bc_bottom``, ``bc_top`` (``vacuum`` or ``reflective``).
"""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import GridIndivisible, ParseError, UnknownMaterial

# 17x17 PWR lattice with 24 guide tubes and the central instrument tube.
DEFAULT_ASSEMBLY_MAP = (
    "FFFFFFFFFFFFFFFFF",
    "FFFFFFFFFFFFFFFFF",
    "FFFFFGFFGFFGFFFFF",
    "FFFGFFFFFFFFFGFFF",
    "FFFFFFFFFFFFFFFFF",
    "FFGFFGFFGFFGFFGFF",
    "FFFFFFFFFFFFFFFFF",
    "FFFFFFFFFFFFFFFFF",
    "FFGFFGFFGFFGFFGFF",
    "FFFFFFFFFFFFFFFFF",
    "FFFFFFFFFFFFFFFFF",
    "FFGFFGFFGFFGFFGFF",
    "FFFFFFFFFFFFFFFFF",
    "FFFGFFFFFFFFFGFFF",
    "FFFFFGFFGFFGFFFFF",
    "FFFFFFFFFFFFFFFFF",
    "FFFFFFFFFFFFFFFFF",
)

DEFAULT_PITCH_CM = 1.26
DEFAULT_INNER = {20: 12, 10: 6}
EDGES = ("left", "right", "bottom", "top")
CELL_TYPES = ("fuel", "guide_moderator", "guide_control", "moderator")


@dataclass
class LatticeSpec:
    cell_map: tuple = DEFAULT_ASSEMBLY_MAP
    cells_per_lattice_cell: int = 20
    inner_region_cells: int = None
    pitch_cm: float = DEFAULT_PITCH_CM
    bc: dict = field(default_factory=lambda: dict.fromkeys(EDGES, "vacuum"))
    fuel: str = "uox"
    moderator: str = "moderator"
    control: str = "control"
    core_map: tuple = None

    def __post_init__(self):
        self.cell_map = tuple(row.strip().upper() for row in self.cell_map)
        if not self.cell_map or len({len(r) for r in self.cell_map}) != 1:
            raise ValueError("lattice map rows must be non-empty and equally long")
        bad = set("".join(self.cell_map)) - set("FGM")
        if bad:
            raise ValueError(f"unknown lattice cell codes {sorted(bad)}")
        if self.inner_region_cells is None:
            self.inner_region_cells = DEFAULT_INNER.get(
                self.cells_per_lattice_cell, (3 * self.cells_per_lattice_cell) // 5)
        n, k = self.cells_per_lattice_cell, self.inner_region_cells
        if n < 1 or not 0 <= k <= n:
            raise ValueError(f"need 0 <= inner_region_cells ({k}) <= cells_per_lattice_cell ({n})")
        if (n - k) % 2:
            raise GridIndivisible(
                f"inner region {k} cannot be centred in {n} cells")
        if self.pitch_cm <= 0:
            raise ValueError("pitch_cm must be positive")
        for edge in EDGES:
            self.bc.setdefault(edge, "vacuum")
            if self.bc[edge] not in ("vacuum", "reflective"):
                raise ValueError(f"bc for {edge} must be vacuum or reflective")
        if self.core_map is not None:
            self.core_map = parse_core_map(self.core_map)

    @property
    def lattice_shape(self):
        """(rows, columns) of lattice cells."""
        return len(self.cell_map), len(self.cell_map[0])

    @property
    def dx(self):
        return self.pitch_cm / self.cells_per_lattice_cell

    @property
    def assembly_width_cm(self):
        return self.pitch_cm * self.lattice_shape[1]


def parse_core_map(core_map):
    if isinstance(core_map, str):
        core_map = core_map.replace(",", "/").split("/")
    rows = tuple(str(r).strip().upper() for r in core_map)
    if len(rows) != 3 or any(len(r) != 3 or set(r) - set("WI") for r in rows):
        raise ValueError(f"core map must be 3 rows of 3 W/I flags, got {core_map!r}")
    return rows


@dataclass
class MaterialFields:
    """Material-id raster plus per-group coefficient lookups."""

    material_ids: np.ndarray
    material_names: tuple
    library: object
    dx: float
    dy: float
    bc: dict

    @property
    def shape(self):
        return self.material_ids.shape

    @property
    def n_groups(self):
        return self.library.n_groups

    def _materials(self):
        return [self.library[name] for name in self.material_names]

    @cached_property
    def _tables(self):
        mats = self._materials()
        return {
            "D": np.array([m.D for m in mats]),
            "sigma_a": np.array([m.sigma_a for m in mats]),
            "sigma_s": np.array([m.sigma_s for m in mats]),
            "nu_sigma_f": np.array([m.nu_sigma_f for m in mats]),
            "chi": np.array([m.chi for m in mats]),
        }

    def D(self, g):
        return self._tables["D"][:, g][self.material_ids]

    def sigma_a(self, g):
        return self._tables["sigma_a"][:, g][self.material_ids]

    def sigma_s(self, g_from, g_to):
        return self._tables["sigma_s"][:, g_from, g_to][self.material_ids]

    def nu_sigma_f(self, g):
        return self._tables["nu_sigma_f"][:, g][self.material_ids]

    def chi(self, g):
        return self._tables["chi"][:, g][self.material_ids]

    def count(self, name):
        if name not in self.material_names:
            return 0
        return int(np.count_nonzero(self.material_ids == self.material_names.index(name)))


def grid_counts(shape, halo=1, n_groups=1):
    """Interior, halo and interior-DOF counts for an interior ``shape``."""
    ny, nx = shape
    interior = nx * ny
    total = (nx + 2 * halo) * (ny + 2 * halo)
    return {"interior": interior, "halo": total - interior, "dof": interior * n_groups}


def _check_materials(spec, library, names):
    for name in names:
        if name not in library:
            raise UnknownMaterial(f"material {name!r} not in cross-section library")


def rasterise_lattice_cell(cell_type, spec):
    """Material names for one lattice cell, shape ``(n, n)``.

    ``cell_type`` is one of ``fuel``, ``guide_moderator``, ``guide_control``
    or ``moderator``. The centred ``inner_region_cells`` square holds the rod
    material; the surrounding ring is moderator.
    """
    n, k = spec.cells_per_lattice_cell, spec.inner_region_cells
    inner = {"fuel": spec.fuel, "guide_moderator": spec.moderator,
             "guide_control": spec.control, "moderator": spec.moderator}
    if cell_type not in inner:
        raise ValueError(f"cell type must be one of {CELL_TYPES}, got {cell_type!r}")
    block = np.full((n, n), spec.moderator, dtype=object)
    lo = (n - k) // 2
    block[lo:lo + k, lo:lo + k] = inner[cell_type]
    return block


def _cell_type(code, rods):
    if code == "F":
        return "fuel"
    if code == "M":
        return "moderator"
    return "guide_control" if rods == "inserted" else "guide_moderator"


def _raster_assembly(spec, rods):
    if rods not in ("withdrawn", "inserted"):
        raise ValueError(f"rods must be 'withdrawn' or 'inserted', got {rods!r}")
    n = spec.cells_per_lattice_cell
    rows, cols = spec.lattice_shape
    out = np.empty((rows * n, cols * n), dtype=object)
    blocks = {t: rasterise_lattice_cell(t, spec) for t in CELL_TYPES}
    for r, line in enumerate(spec.cell_map):
        jb = rows - 1 - r
        for c, code in enumerate(line):
            out[jb * n:(jb + 1) * n, c * n:(c + 1) * n] = blocks[_cell_type(code, rods)]
    return out


def _to_fields(names, spec, library, bc):
    used = [spec.moderator, spec.fuel, spec.control]
    present = [m for m in used if np.any(names == m)]
    _check_materials(spec, library, present)
    ids = np.zeros(names.shape, dtype=np.intp)
    for k, m in enumerate(present):
        ids[names == m] = k
    return MaterialFields(ids, tuple(present), library, spec.dx, spec.dx, dict(bc))


def build_assembly(spec, library, rods="withdrawn"):
    """Rasterise one assembly; every edge uses ``spec.bc`` (vacuum by default)."""
    return _to_fields(_raster_assembly(spec, rods), spec, library, spec.bc)


def build_core(core_map, spec, library):
    """Quarter core: 3x3 assemblies plus one assembly-width moderator reflector.

    Map row 0 is the top row. The fuel sits in the upper-left 3x3 block next
    to the two reflective symmetry edges (left, top); the reflector runs along
    the right and bottom edges, which are vacuum.
    """
    core_map = parse_core_map(spec.core_map if core_map is None else core_map)
    rows, cols = spec.lattice_shape
    n = spec.cells_per_lattice_cell
    ah, aw = rows * n, cols * n
    names = np.full((4 * ah, 4 * aw), spec.moderator, dtype=object)
    cache = {}
    for r, line in enumerate(core_map):
        jb = 3 - r  # rows 3, 2, 1 from the top; block row 0 is reflector
        for c, flag in enumerate(line):
            rods = "inserted" if flag == "I" else "withdrawn"
            if rods not in cache:
                cache[rods] = _raster_assembly(spec, rods)
            names[jb * ah:(jb + 1) * ah, c * aw:(c + 1) * aw] = cache[rods]
    bc = {"left": "reflective", "top": "reflective",
          "right": "vacuum", "bottom": "vacuum"}
    return _to_fields(names, spec, library, bc)


def _kv(line):
    if "=" in line:
        key, value = line.split("=", 1)
    else:
        parts = line.split(None, 1)
        if len(parts) != 2:
            return None
        key, value = parts
    return key.strip().lower(), value.strip()


def parse_geometry(text, path="<string>"):
    section = None
    keys, cell_rows, core_rows = {}, [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").strip().lower()
            if section not in ("lattice", "core"):
                raise ParseError(f"unknown section [{section}]", path, lineno)
            continue
        if section is None:
            raise ParseError("data before the first section", path, lineno)
        kv = _kv(line)
        if section == "lattice" and kv is not None:
            keys[kv[0]] = (kv[1], lineno)
        elif section == "lattice":
            if set(line.upper()) - set("FGM"):
                raise ParseError(f"bad lattice row {line!r}", path, lineno)
            cell_rows.append(line)
        else:
            if kv is not None or set(line.upper()) - set("WI"):
                raise ParseError(f"bad core row {line!r}", path, lineno)
            core_rows.append(line)

    kwargs = {}
    for key, conv in (("pitch_cm", float), ("cells_per_lattice_cell", int),
                      ("inner_region_cells", int)):
        if key in keys:
            value, lineno = keys.pop(key)
            try:
                kwargs[key] = conv(value)
            except ValueError:
                raise ParseError(f"{key}: cannot parse {value!r}", path, lineno) from None
    bc = dict.fromkeys(EDGES, "vacuum")
    for edge in EDGES:
        if f"bc_{edge}" in keys:
            bc[edge] = keys.pop(f"bc_{edge}")[0].lower()
    for key in ("fuel", "moderator", "control"):
        if key in keys:
            kwargs[key] = keys.pop(key)[0]
    if keys:
        key, (_, lineno) = next(iter(keys.items()))
        raise ParseError(f"unknown key {key!r}", path, lineno)
    if cell_rows:
        kwargs["cell_map"] = tuple(cell_rows)
    try:
        return LatticeSpec(bc=bc, core_map=tuple(core_rows) or None, **kwargs)
    except (ValueError, GridIndivisible) as exc:
        raise ParseError(str(exc), path, None) from None


def load_geometry(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path, None) from None
    return parse_geometry(text, str(path))
