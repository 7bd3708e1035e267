"""Estimator front end for the k-effective eigen solve."""

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_choice
from .discretisation import DiscretisedProblem, discretise
from .multigrid import MultigridSolver
from .multigroup import PowerControls, power_iteration
from .oracle import GaussSeidelSolver


class KEffSolver(BaseEstimator):
    """Multigroup diffusion eigen solver.

    ``fit`` takes rasterised material fields (or an already discretised
    problem) and leaves the converged eigenpair on the estimator.

    Parameters
    ----------
    scheme : {"fv", "convfem"}
    vacuum_mode : {"absorption", "zero_halo"} or None
        None picks ``absorption`` for FV and ``zero_halo`` for ConvFEM.
    within_group : {"cancel", "both"}
        Treatment of self-scatter, see :func:`~convdiffusion.discretisation.discretise`.
    spatial_solver : {"multigrid", "gauss_seidel"}
        ``gauss_seidel`` is the sparse reference path.
    n_levels, jacobi_iters, n_mg_iters, mg_tol
        Multigrid settings (see :class:`~convdiffusion.multigrid.MultigridSolver`).
    gs_tol, gs_max_iters
        Gauss-Seidel settings.
    multigroup_mode : {"gauss_seidel", "jacobi"}
    max_power_iters, k_tol, flux_tol, sweeps_per_power
        Outer iteration controls (see :class:`~convdiffusion.multigroup.PowerControls`).

    Attributes
    ----------
    keff_ : float
    flux_ : ndarray of shape (n_groups, ny, nx)
        Interior flux normalised to a maximum of 1.
    keff_history_ : list of (int, float)
    state_ : EigenSolveState
    problem_ : DiscretisedProblem
    """

    def __init__(self, scheme="fv", vacuum_mode=None, within_group="cancel",
                 spatial_solver="multigrid", n_levels=3, jacobi_iters=2,
                 n_mg_iters=100, mg_tol=None, gs_tol=1e-12, gs_max_iters=100_000,
                 multigroup_mode="gauss_seidel", max_power_iters=100, k_tol=1e-10,
                 flux_tol=1e-10, sweeps_per_power=1, constrained_reflective=False):
        self.scheme = scheme
        self.vacuum_mode = vacuum_mode
        self.within_group = within_group
        self.spatial_solver = spatial_solver
        self.n_levels = n_levels
        self.jacobi_iters = jacobi_iters
        self.n_mg_iters = n_mg_iters
        self.mg_tol = mg_tol
        self.gs_tol = gs_tol
        self.gs_max_iters = gs_max_iters
        self.multigroup_mode = multigroup_mode
        self.max_power_iters = max_power_iters
        self.k_tol = k_tol
        self.flux_tol = flux_tol
        self.sweeps_per_power = sweeps_per_power
        self.constrained_reflective = constrained_reflective

    def _discretise(self, X):
        if isinstance(X, DiscretisedProblem):
            return X
        return discretise(X, self.scheme, self.vacuum_mode, self.within_group,
                          self.constrained_reflective)

    def _group_solvers(self, problem):
        check_choice(self.spatial_solver, "spatial_solver", ("multigrid", "gauss_seidel"))
        if self.spatial_solver == "multigrid":
            make = lambda: MultigridSolver(self.n_levels, self.jacobi_iters,
                                           self.n_mg_iters, self.mg_tol)
        else:
            make = lambda: GaussSeidelSolver(self.gs_tol, self.gs_max_iters)
        return [make().fit(problem, g) for g in range(problem.n_groups)]

    def controls(self):
        return PowerControls(self.max_power_iters, self.k_tol, self.flux_tol,
                             self.sweeps_per_power, self.multigroup_mode)

    def fit(self, X, y=None, phi0=None):
        problem = self._discretise(X)
        controls = self.controls()
        solvers = self._group_solvers(problem)
        state = power_iteration(problem, solvers, controls, phi0=phi0)
        self.problem_ = problem
        self.state_ = state
        self.keff_ = state.k_eff
        self.keff_history_ = list(state.keff_history)
        self.flux_ = state.flux()
        self.n_power_iter_ = state.power_iters
        return self

    def predict(self, X=None):
        """Converged interior flux, shape ``(n_groups, ny, nx)``."""
        check_is_fitted(self, "flux_")
        return self.flux_.copy()

    def fit_predict(self, X, y=None, phi0=None):
        return self.fit(X, phi0=phi0).predict()
