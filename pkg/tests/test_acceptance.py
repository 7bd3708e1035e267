"""Acceptance suite: one PASS/FAIL line per primary criterion.

Run with ``pytest tests/test_acceptance.py -s`` (or ``-v``) to see the lines.
"""

import os
import time

import numpy as np
import pytest

from conftest import DATA, uniform_fields
from convdiffusion import (GridField, KEffSolver, LatticeSpec, build_assembly, build_convfem_filter,
                           build_core, build_fv_filter, diffusion_apply, discretise,
                           grid_counts, jacobi_step, load_cross_sections, load_geometry,
                           reference_eigensolve, restrict)
from convdiffusion.cli import main as cli_main
from convdiffusion.discretisation import build_group_operator, off_diagonal_filter
from convdiffusion.fields import _hadamard_inverse
from convdiffusion.multigroup import PowerControls
from reference import dense_matrix, fv_coefficients, fv_operator_vec, index_jacobi, restrict_loop


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return emit


MINI_SOLVER = dict(n_levels=4, jacobi_iters=2, n_mg_iters=5000, mg_tol=1e-11,
                   k_tol=1e-10, flux_tol=1e-10, max_power_iters=100)


@pytest.fixture(scope="module")
def mini():
    spec = load_geometry(DATA / "mini_assembly.geom")
    lib = load_cross_sections(DATA / "synthetic_2g.xs")
    out = {}
    for rods in ("withdrawn", "inserted"):
        problem = discretise(build_assembly(spec, lib, rods))
        t0 = time.perf_counter()
        est = KEffSolver(**MINI_SOLVER).fit(problem)
        out[rods] = (problem, est, time.perf_counter() - t0)
    return out


def test_operator_equivalence(report):
    rng = np.random.default_rng(2024)
    filt = build_fv_filter(0.5, 0.5)
    worst, t0 = 0.0, time.perf_counter()
    for _ in range(100):
        D = rng.uniform(0.2, 3.0, (34, 34))
        phi = rng.uniform(-1.0, 2.0, (34, 34))
        got = diffusion_apply(GridField(phi), GridField(D), filt).interior
        want = fv_operator_vec(D, phi, 0.5, 0.5)
        worst = max(worst, np.max(np.abs(got - want)) / np.max(np.abs(want)))
    wall = time.perf_counter() - t0
    report("operator equivalence", worst <= 1e-13 and wall < 5.0,
           f"max rel err {worst:.2e} (<= 1e-13), {wall:.2f} s (< 5 s)")


def test_jacobi_equivalence(report):
    rng = np.random.default_rng(7)
    bc = dict.fromkeys(("left", "right", "bottom", "top"), "vacuum")
    step_err, solve_err = 0.0, 0.0
    for _ in range(5):
        D_int = rng.uniform(0.2, 1.0, (16, 16))
        sas = rng.uniform(0.5, 2.0, (16, 16))
        filt, D, sa, diag = build_group_operator(D_int, sas, 1.0, 1.0, "fv", bc, "absorption")
        coeffs = fv_coefficients(D, sa, 1.0, 1.0)
        od, inv = off_diagonal_filter(filt), GridField(_hadamard_inverse(diag, 1))
        s = GridField.from_interior(rng.random((16, 16)))
        phi = GridField.from_interior(rng.random((16, 16)))
        for _ in range(20):
            nxt = jacobi_step(phi, s, inv, GridField(D), od)
            ref = index_jacobi(phi.values, s.values, coeffs)
            step_err = max(step_err, np.max(np.abs(nxt.values - ref)) / np.max(np.abs(ref)))
            phi = nxt
        phi = GridField.zeros(16, 16)
        for _ in range(500):
            phi = jacobi_step(phi, s, inv, GridField(D), od)
        exact = np.linalg.solve(dense_matrix(coeffs), s.interior.ravel()).reshape(16, 16)
        solve_err = max(solve_err, np.max(np.abs(phi.interior - exact)))
    report("Jacobi-form equivalence", step_err <= 1e-15 and solve_err <= 1e-10,
           f"per-step rel err {step_err:.2e} (<= 1e-15), 500-step linf {solve_err:.2e} (<= 1e-10)")


def test_oracle_match(report, mini):
    problem, est, wall = mini["withdrawn"]
    ref = reference_eigensolve(problem, PowerControls(100, 1e-10, 1e-10), gs_tol=1e-11)
    flux = max(np.max(np.abs(a - b)) for a, b in zip(est.flux_, ref.flux()))
    dk = abs(est.keff_ - ref.k_eff)
    hist = max(abs(a[1] - b[1]) for a, b in zip(est.keff_history_, ref.keff_history))
    same_len = len(est.keff_history_) == len(ref.keff_history)
    ok = flux <= 1e-8 and dk <= 1e-8 and hist <= 1e-8 and same_len and wall < 60.0
    report("oracle match (mini assembly)", ok,
           f"flux linf {flux:.2e}, |dk| {dk:.2e}, history {hist:.2e} (all <= 1e-8), "
           f"{len(est.keff_history_) - 1} power iterations each, multigrid {wall:.1f} s (< 60 s)")


def test_infinite_medium(report):
    p = discretise(uniform_fields(32, 32, "reflective"))
    est = KEffSolver(n_mg_iters=1000, mg_tol=1e-13).fit(p)
    expected = 2.5 * 0.05 / 0.1
    flux = est.flux_[0]
    flat = np.max(np.abs(flux - flux.mean())) / flux.mean()
    report("infinite medium", abs(est.keff_ - expected) <= 1e-9 and flat <= 1e-8,
           f"k_eff {est.keff_:.12f} vs {expected} (|dk| {abs(est.keff_ - expected):.1e}), "
           f"flatness {flat:.1e}")


def test_filter_facts(report):
    dx, dy = 0.3, 0.7
    fv = build_fv_filter(dx, dy).weights
    # first index is the x offset u, second the y offset v
    want = np.array([[0, -1 / dx**2, 0], [-1 / dy**2, 2 / dx**2 + 2 / dy**2, -1 / dy**2],
                     [0, -1 / dx**2, 0]])
    fv_ok = np.array_equal(fv, want)
    integer = np.array([[-5, 50, -15, 50, -5], [50, -320, -660, -320, 50],
                        [-15, -660, 3600, -660, -15], [50, -320, -660, -320, 50],
                        [-5, 50, -15, 50, -5]], dtype=float)
    cf = build_convfem_filter(1.0).weights
    cf_ok = np.array_equal(cf, integer / 900.0) and cf[2, 2] == 4.0 and abs(cf.sum()) <= 1e-15
    x = np.random.default_rng(3).random((10, 12))
    r_ok = np.allclose(restrict(GridField.from_interior(x)).interior, restrict_loop(x),
                       rtol=0, atol=1e-15)
    report("filter facts", fv_ok and cf_ok and r_ok,
           f"FV weights exact {fv_ok}, ConvFEM entries/centre/sum {cf_ok} "
           f"(sum {cf.sum():.1e}), 2x2 mean restriction {r_ok}")


def test_grid_counts(report):
    lib = load_cross_sections(DATA / "synthetic_2g.xs")
    spec = load_geometry(DATA / "assembly.geom")
    a = grid_counts(build_assembly(spec, lib).shape, 1, 7)
    core_spec = load_geometry(DATA / "core.geom")
    f = build_core(None, core_spec, lib)
    c = grid_counts(f.shape, 1, 7)
    n = core_spec.cells_per_lattice_cell * 17
    reflector = f.shape[0] * f.shape[1] - 9 * n * n
    ok = (a["interior"] == 115_600 and a["halo"] == 1_364 and round(spec.dx, 3) == 0.063
          and c["interior"] == 462_400 and reflector == 202_300 and c["dof"] == 3_236_800)
    report("grid counts", ok,
           f"assembly {a['interior']} interior + {a['halo']} halo, dx {spec.dx:.4f} cm; "
           f"core {c['interior']} interior, {reflector} reflector, {c['dof']} DOF")


def test_rod_monotonicity(report, mini):
    kw, ki = mini["withdrawn"][1].keff_, mini["inserted"][1].keff_
    report("control-rod monotonicity", ki <= kw, f"inserted {ki:.10f} <= withdrawn {kw:.10f}")


def _kaist_cases():
    path = os.environ.get("KAIST_XS")
    if not path:
        return None
    return load_cross_sections(path)


@pytest.mark.parametrize("case", ["assembly-fv", "assembly-convfem", "core"])
def test_benchmark_reproduction(case, capsys):
    lib = _kaist_cases()
    if lib is None:
        with capsys.disabled():
            print(f"\nSKIP benchmark reproduction ({case}): set KAIST_XS to a seven-group "
                  "cross-section file to enable")
        pytest.skip("KAIST_XS not set; benchmark cross sections are not shipped")
    solver = dict(n_levels=3, jacobi_iters=2, n_mg_iters=100, max_power_iters=100)
    results = {}
    if case.startswith("assembly"):
        scheme = case.split("-")[1]
        spec = load_geometry(DATA / "assembly.geom")
        table = {"fv": (0.5797, 0.4347), "convfem": (0.5838, 0.4370)}[scheme]
        vac = "zero_halo" if scheme == "convfem" else None
        for rods, want in zip(("withdrawn", "inserted"), table):
            est = KEffSolver(scheme=scheme, vacuum_mode=vac, **solver)
            results[rods] = (est.fit(build_assembly(spec, lib, rods)).keff_, want)
    else:
        maps = [os.environ.get("KAIST_CORE_MAP_ONE"), os.environ.get("KAIST_CORE_MAP_TWO")]
        if None in maps:
            pytest.skip("set KAIST_CORE_MAP_ONE and KAIST_CORE_MAP_TWO (e.g. WWI/WIW/IWW)")
        spec = load_geometry(DATA / "core.geom")
        solver["jacobi_iters"] = 5
        for name, cmap, want in zip(("one", "two"), maps, (1.1777, 1.2557)):
            est = KEffSolver(**solver)
            results[name] = (est.fit(build_core(cmap, spec, lib)).keff_, want)
    ok = all(abs(k - w) <= 5e-5 for k, w in results.values())
    detail = ", ".join(f"{n} {k:.5f} vs {w}" for n, (k, w) in results.items())
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} benchmark reproduction ({case}): {detail} (+-5e-5)")
    assert ok, detail


def test_cli_determinism(report, tmp_path):
    config = DATA / "mini_assembly.ini"
    codes = [cli_main(["solve", str(config), "--output-dir", str(tmp_path / d)]) for d in "ab"]
    files = ("flux_g1.csv", "flux_g2.csv", "keff_history.csv")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in files)
    report("determinism", codes == [0, 0] and same,
           f"exit codes {codes}, flux and history files byte-identical: {same}")
