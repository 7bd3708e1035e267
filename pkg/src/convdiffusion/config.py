"""Run configuration for the command-line front end.

A run file is sectioned ``key = value`` text::

    [problem]
    geometry = mini_assembly.geom
    cross_sections = synthetic_2g.xs
    kind = assembly            # or core
    rods = withdrawn           # assembly only
    core_map = WWI/WIW/IWW     # core only, overrides the geometry file
    include_self_scatter = yes # within-group scatter in D's total

    [discretisation]
    scheme = fv
    vacuum_mode = absorption

    [solver]
    n_levels = 3
    jacobi_iters = 2
    n_mg_iters = 100
    max_power_iters = 100

    [output]
    directory = out

Relative paths resolve against the directory holding the run file.
"""

import configparser
import dataclasses
import re
from pathlib import Path

from ._validation import check_choice, check_positive, check_positive_int
from .discretisation import SCHEMES, VACUUM_MODES
from .exceptions import ConvDiffusionError, ParseError, UnsupportedCombination
from .geometry import build_assembly, build_core, load_geometry, parse_core_map
from .materials import load_cross_sections

_SECTIONS = ("problem", "discretisation", "solver", "oracle", "compare", "bench",
             "output", "run")


@dataclasses.dataclass
class RunConfig:
    geometry: Path
    cross_sections: Path
    kind: str = "assembly"
    rods: str = "withdrawn"
    core_map: str | None = None
    include_self_scatter: bool = True
    scheme: str = "fv"
    vacuum_mode: str | None = None
    within_group: str = "cancel"
    constrained_reflective: bool = False
    n_levels: int = 3
    jacobi_iters: int = 2
    n_mg_iters: int = 100
    mg_tol: float | None = None
    multigroup_mode: str = "gauss_seidel"
    max_power_iters: int = 100
    sweeps_per_power: int = 1
    k_tol: float = 1e-10
    flux_tol: float = 1e-10
    gs_tol: float = 1e-12
    gs_max_iters: int = 100_000
    compare_linf: float = 1e-8
    bench_repeats: int = 400
    bench_jacobi_iters: int = 100
    output_dir: Path = Path("out")
    seed: int = 0
    source: str = "<overrides>"

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Raise :class:`ParseError` for any out-of-range setting."""
        try:
            check_choice(self.kind, "kind", ("assembly", "core"))
            check_choice(self.rods, "rods", ("withdrawn", "inserted"))
            check_choice(self.scheme, "scheme", SCHEMES)
            if self.vacuum_mode is not None:
                check_choice(self.vacuum_mode, "vacuum_mode", VACUUM_MODES)
            if self.scheme == "convfem" and self.vacuum_mode == "absorption":
                raise UnsupportedCombination("ConvFEM supports only the zero_halo vacuum mode")
            check_choice(self.within_group, "within_group", ("cancel", "both"))
            check_choice(self.multigroup_mode, "multigroup_mode", ("gauss_seidel", "jacobi"))
            for name in ("n_levels", "jacobi_iters", "n_mg_iters", "max_power_iters",
                         "sweeps_per_power", "gs_max_iters", "bench_repeats",
                         "bench_jacobi_iters"):
                check_positive_int(getattr(self, name), name)
            for name in ("k_tol", "flux_tol", "gs_tol", "compare_linf"):
                check_positive(getattr(self, name), name)
            if self.mg_tol is not None:
                check_positive(self.mg_tol, "mg_tol")
            if self.core_map is not None:
                parse_core_map(self.core_map)
        except (ValueError, ConvDiffusionError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), self.source, None) from None
        return self

    def solver_params(self, spatial_solver="multigrid"):
        """Keyword arguments for :class:`~convdiffusion.solver.KEffSolver`."""
        return dict(scheme=self.scheme, vacuum_mode=self.vacuum_mode,
                    within_group=self.within_group, spatial_solver=spatial_solver,
                    n_levels=self.n_levels, jacobi_iters=self.jacobi_iters,
                    n_mg_iters=self.n_mg_iters, mg_tol=self.mg_tol,
                    gs_tol=self.gs_tol, gs_max_iters=self.gs_max_iters,
                    multigroup_mode=self.multigroup_mode,
                    max_power_iters=self.max_power_iters, k_tol=self.k_tol,
                    flux_tol=self.flux_tol, sweeps_per_power=self.sweeps_per_power,
                    constrained_reflective=self.constrained_reflective)

    def build_fields(self):
        """Load geometry and cross sections and rasterise the problem."""
        spec = load_geometry(self.geometry)
        library = load_cross_sections(self.cross_sections, self.include_self_scatter)
        if self.kind == "core":
            return build_core(self.core_map, spec, library)
        return build_assembly(spec, library, self.rods)


# (type, section, key) for every recognised setting
_FIELDS = {
    "geometry": (Path, "problem", "geometry"),
    "cross_sections": (Path, "problem", "cross_sections"),
    "kind": (str, "problem", "kind"),
    "rods": (str, "problem", "rods"),
    "core_map": (str, "problem", "core_map"),
    "include_self_scatter": (bool, "problem", "include_self_scatter"),
    "scheme": (str, "discretisation", "scheme"),
    "vacuum_mode": (str, "discretisation", "vacuum_mode"),
    "within_group": (str, "discretisation", "within_group"),
    "constrained_reflective": (bool, "discretisation", "constrained_reflective"),
    "n_levels": (int, "solver", "n_levels"),
    "jacobi_iters": (int, "solver", "jacobi_iters"),
    "n_mg_iters": (int, "solver", "n_mg_iters"),
    "mg_tol": (float, "solver", "mg_tol"),
    "multigroup_mode": (str, "solver", "multigroup_mode"),
    "max_power_iters": (int, "solver", "max_power_iters"),
    "sweeps_per_power": (int, "solver", "sweeps_per_power"),
    "k_tol": (float, "solver", "k_tol"),
    "flux_tol": (float, "solver", "flux_tol"),
    "gs_tol": (float, "oracle", "gs_tol"),
    "gs_max_iters": (int, "oracle", "gs_max_iters"),
    "compare_linf": (float, "compare", "linf_bound"),
    "bench_repeats": (int, "bench", "repeats"),
    "bench_jacobi_iters": (int, "bench", "jacobi_iters"),
    "output_dir": (Path, "output", "directory"),
    "seed": (int, "run", "seed"),
}


def _line_index(text):
    """Map ``(section, key)`` to the 1-based line it was defined on."""
    index, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index[(section, m.group(1).strip().lower())] = lineno
    return index


def _convert(kind, raw, base):
    if kind is Path:
        p = Path(raw).expanduser()
        return p if p.is_absolute() else base / p
    if kind is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is int:
        return int(raw.replace("_", ""))
    return kind(raw)


def parse_run_config(text, path="<string>", base=None):
    """Parse run-file text into a :class:`RunConfig`."""
    base = Path(".") if base is None else Path(base)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", path, lineno) from None
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], path, getattr(exc, "lineno", None)) from None
    lines = _line_index(text)
    known = {(sec, key) for _, sec, key in _FIELDS.values()}
    for section in parser.sections():
        if section.lower() not in _SECTIONS:
            raise ParseError(f"unknown section [{section}]", path, None)
        for key in parser[section]:
            if (section.lower(), key) not in known:
                raise ParseError(f"unknown key {key!r} in [{section}]", path,
                                 lines.get((section.lower(), key)))
    values = {}
    for name, (kind, section, key) in _FIELDS.items():
        if not parser.has_option(section, key):
            continue
        raw = parser.get(section, key).strip()
        if raw.lower() in ("", "none", "default") and name in ("vacuum_mode", "mg_tol", "core_map"):
            continue
        try:
            values[name] = _convert(kind, raw, base)
        except ValueError:
            raise ParseError(f"{key}: cannot parse {raw!r}", path,
                             lines.get((section, key))) from None
    for name in ("geometry", "cross_sections"):
        if name not in values:
            raise ParseError(f"[problem] {name} is required", path, None)
    values.setdefault("output_dir", base / "out")
    try:
        return RunConfig(source=str(path), **values)
    except ParseError as exc:
        # point at the offending line when the message names a key
        message = str(exc).split(": ", 1)[-1]
        for name, (_, section, key) in _FIELDS.items():
            if message.startswith(name + " "):
                raise ParseError(message, path, lines.get((section, key))) from None
        raise


def load_run_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path, None) from None
    return parse_run_config(text, str(path), base=path.parent)
