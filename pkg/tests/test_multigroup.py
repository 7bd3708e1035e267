import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ONE_GROUP_XS, random_fields, two_group_slab, uniform_fields
from convdiffusion import (EigenSolveState, GaussSeidelSolver, GridField, KEffSolver,
                           MultigridSolver, PowerControls, assemble_group_source,
                           assemble_sparse_system, discretise, fission_source,
                           gauss_seidel_solve, multigroup_sweep, power_iteration,
                           reference_eigensolve)
from convdiffusion.geometry import MaterialFields
from convdiffusion.materials import parse_cross_sections
from convdiffusion.exceptions import NoFissileMaterial, NonConvergence


def field(v, shape=(4, 4)):
    return GridField.from_interior(np.broadcast_to(np.asarray(v, float), shape))


class TestSources:
    def test_empty(self):
        out = assemble_group_source(0, [None], [field(1.0)], field(0.0), {})
        assert not out.values.any()

    def test_down_scatter_uses_new_flux(self):
        old = [field(1.0), field(2.0)]
        new = [field(5.0)]
        xs = {(0, 1): field(0.1)}
        out = assemble_group_source(1, new, old, field(0.25), xs)
        np.testing.assert_allclose(out.interior, 0.1 * 5.0 + 0.25, rtol=1e-15)

    def test_jacobi_mode_uses_old_flux(self):
        old = [field(1.0), field(2.0)]
        new = [field(5.0)]
        xs = {(0, 1): field(0.1), (1, 0): field(0.3)}
        out = assemble_group_source(1, new, old, field(0.0), xs, mode="jacobi")
        np.testing.assert_allclose(out.interior, 0.1 * 1.0, rtol=1e-15)
        out0 = assemble_group_source(0, [], old, field(0.0), xs)
        np.testing.assert_allclose(out0.interior, 0.3 * 2.0, rtol=1e-15)

    def test_fission(self):
        src = fission_source([field(1.0)], [field(2.5 * 0.1)], [field(1.0)], 1.0)
        np.testing.assert_allclose(src[0].interior, 0.25, rtol=1e-15)
        zero = fission_source([field(1.0)], [field(0.0)], [field(1.0)], 1.0)
        assert not zero[0].values.any()

    @given(st.floats(1e-3, 1e3))
    def test_fission_linear_in_lambda(self, lam):
        phi = [field(np.random.default_rng(0).random((4, 4)))]
        a = fission_source(phi, [field(0.3)], [field(1.0)], lam)[0].values
        b = fission_source(phi, [field(0.3)], [field(1.0)], 2 * lam)[0].values
        np.testing.assert_array_equal(b, 2 * a)


def _state(problem, phi_interior, lam=1.0):
    h = problem.halo
    phi = [GridField.from_interior(p, h) for p in phi_interior]
    nsf = [GridField.from_interior(x, h) for x in problem.nu_sigma_f]
    chi = [GridField.from_interior(x, h) for x in problem.chi]
    return EigenSolveState(phi=phi, fission_source=fission_source(phi, nsf, chi, lam))


class TestSweep:
    def test_one_group_is_plain_multigrid(self):
        p = discretise(uniform_fields(16, 16, "vacuum", ss=0.0))
        mg = MultigridSolver(n_levels=3, n_iters=6).fit(p, 0)
        state = _state(p, [np.ones(p.shape)])
        s = state.fission_source[0]
        multigroup_sweep(state, p, [mg])
        direct, n, _ = mg.solve(s.values, np.pad(np.ones(p.shape), 1))
        np.testing.assert_array_equal(state.phi[0].values, direct)
        assert state.inner_iters == 6 and state.multigroup_iters == 1

    def test_two_group_down_scatter_block_triangular(self):
        p = discretise(two_group_slab(16, 16, "vacuum"))
        assert (1, 0) not in p.scatter
        solvers = [GaussSeidelSolver(tol=1e-13).fit(p, g) for g in range(2)]
        state = _state(p, [np.ones(p.shape)] * 2)
        fis = [f.interior.ravel() for f in state.fission_source]
        multigroup_sweep(state, p, solvers)
        # reference: solve group 1 to tolerance, then group 2 with its scatter source
        s1 = assemble_sparse_system(p, 0, fis[0].reshape(p.shape))
        x1, _, _ = gauss_seidel_solve(s1, tol=1e-13)
        src2 = p.scatter[(0, 1)].ravel() * x1 + fis[1]
        x2, _, _ = gauss_seidel_solve(assemble_sparse_system(p, 1, src2.reshape(p.shape)), tol=1e-13)
        np.testing.assert_allclose(state.phi[1].interior.ravel(), x2, rtol=1e-10, atol=1e-14)

    def test_converged_state_is_fixed_point(self):
        p = discretise(two_group_slab(16, 16, "reflective", upscatter=0.001))
        est = KEffSolver(spatial_solver="gauss_seidel", gs_tol=1e-13).fit(p)
        st_ = est.state_
        h = p.halo
        nsf = [GridField.from_interior(x, h) for x in p.nu_sigma_f]
        chi = [GridField.from_interior(x, h) for x in p.chi]
        before = [f.copy() for f in st_.phi]
        st_.fission_source = fission_source(st_.phi, nsf, chi, 1.0 / st_.k_eff)
        solvers = [GaussSeidelSolver(tol=1e-13).fit(p, g) for g in range(2)]
        multigroup_sweep(st_, p, solvers)
        change = max(np.max(np.abs(a.values - b.values)) for a, b in zip(st_.phi, before))
        assert change <= 1e-10


class TestPowerIteration:
    def test_infinite_medium(self):
        p = discretise(uniform_fields(16, 16, "reflective"))
        est = KEffSolver(n_mg_iters=1000, mg_tol=1e-13).fit(p)
        assert abs(est.keff_ - 2.5 * 0.05 / 0.1) <= 1e-9
        flux = est.flux_[0]
        assert np.max(np.abs(flux - flux.mean())) <= 1e-8 * flux.mean()

    def test_oracle_infinite_medium(self):
        p = discretise(uniform_fields(8, 8, "reflective"))
        assert abs(reference_eigensolve(p).k_eff - 1.25) <= 1e-9

    def test_history_and_normalisation(self):
        p = discretise(two_group_slab(16, 16, "vacuum"))
        est = KEffSolver(spatial_solver="gauss_seidel").fit(p)
        hist = est.keff_history_
        assert hist[0] == (0, 1.0)
        assert [m for m, _ in hist] == list(range(len(hist)))
        assert est.flux_.max() == 1.0 and est.flux_.min() >= 0.0
        assert est.keff_ > 0 and est.state_.converged

    @given(st.floats(1e-3, 1e3))
    @settings(max_examples=5)
    def test_initial_scale_invariance(self, c):
        p = discretise(two_group_slab(16, 16, "vacuum"))
        solvers = [GaussSeidelSolver(tol=1e-12).fit(p, g) for g in range(2)]
        base = power_iteration(p, solvers).k_eff
        scaled = power_iteration(p, solvers, phi0=[c * np.ones(p.shape)] * 2).k_eff
        assert abs(scaled - base) <= 1e-10 * base

    def test_sweep_modes_agree(self):
        p = discretise(two_group_slab(16, 16, "vacuum", upscatter=0.002))
        gs = KEffSolver(spatial_solver="gauss_seidel", k_tol=1e-12, flux_tol=1e-11).fit(p)
        ja = KEffSolver(spatial_solver="gauss_seidel", multigroup_mode="jacobi",
                        k_tol=1e-12, flux_tol=1e-11, max_power_iters=300).fit(p)
        assert abs(gs.keff_ - ja.keff_) <= 1e-8
        assert np.max(np.abs(gs.flux_ - ja.flux_)) <= 1e-8

    def test_self_scatter_treatments_agree(self):
        f = random_fields(16, 16, 3, "vacuum", groups=2)
        a = KEffSolver(spatial_solver="gauss_seidel", within_group="cancel").fit(f)
        b = KEffSolver(spatial_solver="gauss_seidel", within_group="both",
                       max_power_iters=1000).fit(f)
        assert abs(a.keff_ - b.keff_) <= 1e-8

    def test_converged_pair_satisfies_coupled_system(self):
        p = discretise(two_group_slab(16, 16, "vacuum", upscatter=0.002))
        est = KEffSolver(spatial_solver="gauss_seidel", gs_tol=1e-13, k_tol=1e-12,
                         flux_tol=1e-12).fit(p)
        phi, lam = est.flux_, 1.0 / est.keff_
        prod = sum(p.nu_sigma_f[g] * phi[g] for g in range(2))
        for g in range(2):
            s = lam * p.chi[g] * prod
            for (gf, gt), xs in p.scatter.items():
                if gt == g:
                    s = s + xs * phi[gf]
            A = assemble_sparse_system(p, g).matrix
            r = s.ravel() - A @ phi[g].ravel()
            assert np.max(np.abs(r)) <= 1e-8 * np.max(np.abs(s))

    def test_no_fissile(self):
        text = ONE_GROUP_XS.format(sa=0.1, ss=0.2, nu=0, sf=0).replace("chi 1", "chi 0")
        f = uniform_fields(8, 8, "vacuum")
        f = MaterialFields(f.material_ids, f.material_names, parse_cross_sections(text),
                           f.dx, f.dy, f.bc)
        with pytest.raises(NoFissileMaterial):
            KEffSolver(spatial_solver="gauss_seidel").fit(f)

    def test_nonconvergence_keeps_history(self):
        p = discretise(two_group_slab(16, 16, "vacuum"))
        with pytest.raises(NonConvergence) as err:
            KEffSolver(spatial_solver="gauss_seidel", max_power_iters=2).fit(p)
        state = err.value.state
        assert len(state.keff_history) == 3 and not state.converged

    def test_controls_validation(self):
        with pytest.raises(ValueError):
            PowerControls(max_power_iters=0)
        with pytest.raises(ValueError):
            PowerControls(k_tol=0.0)
        with pytest.raises(ValueError):
            PowerControls(multigroup_mode="sor")
