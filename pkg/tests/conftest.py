import sys
from importlib.resources import files
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from convdiffusion import load_cross_sections, load_geometry  # noqa: E402
from convdiffusion.geometry import MaterialFields  # noqa: E402
from convdiffusion.materials import parse_cross_sections  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(str(files("convdiffusion") / "data"))


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def library():
    return load_cross_sections(DATA / "synthetic_2g.xs")


@pytest.fixture(scope="session")
def mini_spec():
    return load_geometry(DATA / "mini_assembly.geom")


ONE_GROUP_XS = """
[material fuel]
groups 1
sigma_a {sa}
sigma_s_row 1 {ss}
nu {nu}
sigma_f {sf}
chi 1
"""


def uniform_fields(nx, ny, bc, sa=0.1, ss=0.2, nu=2.5, sf=0.05, dx=1.0):
    """One-group, one-material fields on an ``nx`` by ``ny`` grid."""
    lib = parse_cross_sections(ONE_GROUP_XS.format(sa=sa, ss=ss, nu=nu, sf=sf))
    ids = np.zeros((ny, nx), dtype=np.intp)
    if isinstance(bc, str):
        bc = dict.fromkeys(("left", "right", "bottom", "top"), bc)
    return MaterialFields(ids, ("fuel",), lib, dx, dx, dict(bc))


def two_group_slab(nx=16, ny=16, bc="reflective", upscatter=0.0, dx=0.5):
    """Two materials in vertical stripes, two groups."""
    text = f"""
[material fuel]
groups 2
sigma_a 0.01 0.08
sigma_s_row 1 0.50 0.02
sigma_s_row 2 {upscatter} 1.1
nu 2.5 2.45
sigma_f 0.004 0.07
chi 1 0
[material water]
groups 2
sigma_a 0.0005 0.02
sigma_s_row 1 0.6 0.04
sigma_s_row 2 0 1.8
nu 0 0
sigma_f 0 0
chi 0 0
"""
    lib = parse_cross_sections(text)
    ids = np.zeros((ny, nx), dtype=np.intp)
    ids[:, nx // 2:] = 1
    if isinstance(bc, str):
        bc = dict.fromkeys(("left", "right", "bottom", "top"), bc)
    return MaterialFields(ids, ("fuel", "water"), lib, dx, dx, dict(bc))


def random_fields(nx, ny, seed, bc="reflective", n_materials=6, groups=1):
    """Cells drawn from a handful of random materials (one fissile)."""
    from convdiffusion.materials import CrossSectionLibrary, Material
    rng = np.random.default_rng(seed)
    lib = CrossSectionLibrary()
    for k in range(n_materials):
        G = groups
        ss = np.triu(rng.uniform(0.0, 0.4, (G, G)))
        fissile = k == 0
        chi = np.zeros(G)
        chi[0] = 1.0
        lib.add(Material(f"m{k}", rng.uniform(0.01, 0.2, G), ss,
                         np.full(G, 2.4) if fissile else np.zeros(G),
                         rng.uniform(0.01, 0.1, G) if fissile else np.zeros(G),
                         chi if fissile else np.zeros(G)))
    ids = rng.integers(0, n_materials, (ny, nx))
    if isinstance(bc, str):
        bc = dict.fromkeys(("left", "right", "bottom", "top"), bc)
    return MaterialFields(ids, tuple(lib.names()), lib, 0.5, 0.5, dict(bc))
