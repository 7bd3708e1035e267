"""Multigroup cross-section library and its plain-text file format.

File layout, one section per material::

    [material uox]
    groups 2
    sigma_a 0.01 0.08
    sigma_s_row 1 0.54 0.02     # row g holds sigma_s[g -> g'] for every g'
    sigma_s_row 2 0.00 1.20
    nu 2.5 2.45
    sigma_f 0.003 0.06
    chi 1 0
    d 1.3 0.4                   # optional; otherwise 1 / (3 (sigma_a + sigma_s))

Blank lines and ``#`` comments are ignored. Groups are numbered from 1 in the
file and from 0 in the API.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InconsistentGroups, NegativeCrossSection, ParseError

CHI_TOL = 1e-12


def diffusion_coefficient(sigma_a, sigma_s, include_self_scatter=True):
    """``D_g = 1 / (3 (sigma_a_g + sigma_s_g))`` with ``sigma_s_g`` a row sum."""
    sigma_s = np.asarray(sigma_s, dtype=float)
    total = sigma_s.sum(axis=1)
    if not include_self_scatter:
        total = total - np.diag(sigma_s)
    return 1.0 / (3.0 * (np.asarray(sigma_a, dtype=float) + total))


@dataclass
class Material:
    name: str
    sigma_a: np.ndarray
    sigma_s: np.ndarray
    nu: np.ndarray
    sigma_f: np.ndarray
    chi: np.ndarray
    D: np.ndarray = None

    def __post_init__(self):
        self.sigma_a = np.asarray(self.sigma_a, dtype=float)
        G = self.sigma_a.shape[0]
        self.sigma_s = np.asarray(self.sigma_s, dtype=float).reshape(G, G)
        self.nu = np.asarray(self.nu, dtype=float).reshape(G)
        self.sigma_f = np.asarray(self.sigma_f, dtype=float).reshape(G)
        self.chi = np.asarray(self.chi, dtype=float).reshape(G)
        for label in ("sigma_a", "sigma_s", "nu", "sigma_f", "chi"):
            arr = getattr(self, label)
            if np.any(arr < 0) or not np.isfinite(arr).all():
                raise NegativeCrossSection(
                    f"material {self.name!r}: {label} must be finite and >= 0")
        if self.is_fissile:
            if abs(self.chi.sum() - 1.0) > CHI_TOL:
                raise ValueError(f"material {self.name!r}: chi sums to "
                                 f"{self.chi.sum()!r}, expected 1")
        elif np.any(self.chi):
            raise ValueError(f"material {self.name!r} is not fissile but has nonzero chi")
        if self.D is None:
            self.D = diffusion_coefficient(self.sigma_a, self.sigma_s)
        else:
            self.D = np.asarray(self.D, dtype=float).reshape(G)
            if np.any(self.D <= 0):
                raise NegativeCrossSection(f"material {self.name!r}: D must be > 0")

    @property
    def n_groups(self):
        return self.sigma_a.shape[0]

    @property
    def nu_sigma_f(self):
        return self.nu * self.sigma_f

    @property
    def is_fissile(self):
        return bool(np.any(self.nu * self.sigma_f > 0))


@dataclass
class CrossSectionLibrary:
    materials: dict = field(default_factory=dict)

    @property
    def n_groups(self):
        if not self.materials:
            return 0
        return next(iter(self.materials.values())).n_groups

    def add(self, material):
        if self.materials and material.n_groups != self.n_groups:
            raise InconsistentGroups(
                f"material {material.name!r} has {material.n_groups} groups, "
                f"library has {self.n_groups}")
        self.materials[material.name] = material

    def __getitem__(self, name):
        return self.materials[name]

    def __contains__(self, name):
        return name in self.materials

    def __len__(self):
        return len(self.materials)

    def names(self):
        return list(self.materials)


_ARRAY_KEYS = ("sigma_a", "nu", "sigma_f", "chi", "d")


def _floats(tokens, path, lineno, count=None):
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"not a number: {exc}", path, lineno) from None
    if count is not None and len(values) != count:
        raise ParseError(f"expected {count} values, got {len(values)}", path, lineno)
    return values


def _finish(name, data, path, lineno, include_self_scatter):
    if "groups" not in data:
        raise ParseError(f"material {name!r} has no 'groups' line", path, lineno)
    G = data["groups"]
    for key in ("sigma_a", "nu", "sigma_f", "chi"):
        if key not in data:
            raise ParseError(f"material {name!r} is missing {key!r}", path, lineno)
    rows = data.get("sigma_s", {})
    if sorted(rows) != list(range(1, G + 1)):
        raise ParseError(f"material {name!r} needs sigma_s_row 1..{G}", path, lineno)
    sigma_s = np.array([rows[g] for g in range(1, G + 1)])
    D = data.get("d")
    if D is None and not include_self_scatter:
        D = diffusion_coefficient(data["sigma_a"], sigma_s, include_self_scatter=False)
    try:
        return Material(name, data["sigma_a"], sigma_s, data["nu"], data["sigma_f"],
                        data["chi"], D)
    except NegativeCrossSection as exc:
        raise NegativeCrossSection(f"{path}: {exc}") from None
    except ValueError as exc:
        raise ParseError(str(exc), path, data.get("_line_chi", lineno)) from None


def parse_cross_sections(text, path="<string>", include_self_scatter=True):
    library = CrossSectionLibrary()
    name, data, start = None, None, 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {line!r}", path, lineno)
            if name is not None:
                library.add(_finish(name, data, path, start, include_self_scatter))
            header = line[1:-1].split()
            if len(header) != 2 or header[0] != "material":
                raise ParseError("expected '[material <name>]'", path, lineno)
            name, data, start = header[1], {}, lineno
            if name in library:
                raise ParseError(f"duplicate material {name!r}", path, lineno)
            continue
        if name is None:
            raise ParseError("data before the first [material] section", path, lineno)
        key, *tokens = line.split()
        key = key.lower()
        if key == "groups":
            if len(tokens) != 1 or not tokens[0].isdigit() or int(tokens[0]) < 1:
                raise ParseError("'groups' takes one positive integer", path, lineno)
            data["groups"] = int(tokens[0])
            continue
        G = data.get("groups")
        if G is None:
            raise ParseError(f"{key!r} before 'groups'", path, lineno)
        if key == "sigma_s_row":
            if not tokens or not tokens[0].isdigit() or not 1 <= int(tokens[0]) <= G:
                raise ParseError(f"sigma_s_row needs a group index in 1..{G}", path, lineno)
            data.setdefault("sigma_s", {})[int(tokens[0])] = _floats(tokens[1:], path, lineno, G)
        elif key in _ARRAY_KEYS:
            data[key] = _floats(tokens, path, lineno, G)
            data[f"_line_{key}"] = lineno
        else:
            raise ParseError(f"unknown keyword {key!r}", path, lineno)
    if name is not None:
        library.add(_finish(name, data, path, start, include_self_scatter))
    if len(library) == 0:
        raise ParseError("no materials defined", path, None)
    return library


def load_cross_sections(path, include_self_scatter=True):
    """Read a cross-section file into a :class:`CrossSectionLibrary`.

    ``include_self_scatter`` decides whether the within-group term enters the
    scattering sum used for D when the file gives no ``d`` line.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path, None) from None
    return parse_cross_sections(text, str(path), include_self_scatter)


def format_cross_sections(library):
    """Inverse of :func:`parse_cross_sections` (17 significant digits)."""
    def row(values):
        return " ".join(f"{v:.17g}" for v in values)

    lines = []
    for mat in library.materials.values():
        lines.append(f"[material {mat.name}]")
        lines.append(f"groups {mat.n_groups}")
        lines.append(f"sigma_a {row(mat.sigma_a)}")
        for g in range(mat.n_groups):
            lines.append(f"sigma_s_row {g + 1} {row(mat.sigma_s[g])}")
        lines.append(f"nu {row(mat.nu)}")
        lines.append(f"sigma_f {row(mat.sigma_f)}")
        lines.append(f"chi {row(mat.chi)}")
        lines.append(f"d {row(mat.D)}")
        lines.append("")
    return "\n".join(lines)
