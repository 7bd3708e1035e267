"""Multigroup coupling and the outer power iteration for k-effective."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_choice, check_positive, check_positive_int
from .exceptions import DimensionMismatch, NoFissileMaterial, NonConvergence
from .fields import GridField, interior_view

MULTIGROUP_MODES = ("gauss_seidel", "jacobi")


@dataclass
class PowerControls:
    """Iteration budgets and stopping tolerances of the eigen solve.

    Each power step runs ``sweeps_per_power`` multigroup sweeps; the inner
    per-group budget lives on the spatial solvers themselves.
    """

    max_power_iters: int = 100
    k_tol: float = 1e-10
    flux_tol: float = 1e-10
    sweeps_per_power: int = 1
    multigroup_mode: str = "gauss_seidel"

    def __post_init__(self):
        check_positive_int(self.max_power_iters, "max_power_iters")
        check_positive_int(self.sweeps_per_power, "sweeps_per_power")
        check_positive(self.k_tol, "k_tol")
        check_positive(self.flux_tol, "flux_tol")
        check_choice(self.multigroup_mode, "multigroup_mode", MULTIGROUP_MODES)


@dataclass
class EigenSolveState:
    phi: list
    k_eff: float = 1.0
    fission_source: list = field(default_factory=list)
    keff_history: list = field(default_factory=list)
    flux_change_history: list = field(default_factory=list)
    power_iters: int = 0
    multigroup_iters: int = 0
    inner_iters: int = 0
    inner_residuals: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_groups(self):
        return len(self.phi)

    def flux(self):
        """Interior fluxes stacked as ``(n_groups, ny, nx)``."""
        return np.stack([p.interior.copy() for p in self.phi])


def _pad(interior, halo):
    out = np.zeros((interior.shape[0] + 2 * halo, interior.shape[1] + 2 * halo))
    interior_view(out, halo)[...] = interior
    return out


def _group_source(g, phi_new, phi_old, fission_g, scatter, mode):
    s = np.zeros_like(fission_g)
    for gp in range(len(phi_old)):
        xs = scatter.get((gp, g))
        if xs is None:
            continue
        src = phi_new[gp] if (mode == "gauss_seidel" and gp < g) else phi_old[gp]
        s += xs * src
    s += fission_g
    return s


def assemble_group_source(g, phi_new, phi_old, fission_source_g, scatter,
                          mode="gauss_seidel"):
    """Scattering plus fission source for group ``g``.

    Groups below ``g`` use ``phi_new`` (block Gauss-Seidel); ``g`` and above
    use ``phi_old``. In ``jacobi`` mode every group uses ``phi_old``.
    ``scatter[(g_from, g_to)]`` are halo-padded transfer fields; absent keys
    mean no transfer.
    """
    check_choice(mode, "mode", MULTIGROUP_MODES)
    shape = fission_source_g.values.shape
    for f in list(phi_old) + [f for f in phi_new if f is not None] + list(scatter.values()):
        if f.values.shape != shape:
            raise DimensionMismatch("all fields must share one shape")
    new = [None if f is None else f.values for f in phi_new]
    new += [None] * (len(phi_old) - len(new))
    out = _group_source(g, new, [f.values for f in phi_old], fission_source_g.values,
                        {k: v.values for k, v in scatter.items()}, mode)
    return GridField(out, fission_source_g.halo)


def _production(phi, nu_sigma_f):
    total = np.zeros_like(phi[0])
    for p, nsf in zip(phi, nu_sigma_f):
        total += nsf * p
    return total


def _fission(phi, nu_sigma_f, chi, lam):
    prod = _production(phi, nu_sigma_f)
    return [(lam * c) * prod for c in chi]


def fission_source(phi, nu_sigma_f, chi, lam):
    """``lam * chi_g * sum_g' nu_sigma_f_g' * phi_g'`` for every group."""
    check_positive(lam, "lambda")
    halo = phi[0].halo
    out = _fission([p.values for p in phi],
                   [_as_padded(x, halo) for x in nu_sigma_f],
                   [_as_padded(x, halo) for x in chi], lam)
    return [GridField(s, halo) for s in out]


def _as_padded(x, halo):
    if isinstance(x, GridField):
        return x.values
    return _pad(np.asarray(x, dtype=float), halo)


class _Coupling:
    """Halo-padded copies of the coupling fields of a problem."""

    def __init__(self, problem):
        h = problem.halo
        self.halo = h
        self.scatter = {k: _pad(v, h) for k, v in problem.scatter.items()}
        self.nu_sigma_f = [_pad(v, h) for v in problem.nu_sigma_f]
        self.chi = [_pad(v, h) for v in problem.chi]


def _sweep(phi, fission, coupling, solvers, mode, stats):
    G = len(phi)
    new = [None] * G
    for g in range(G):
        s = _group_source(g, new, phi, fission[g], coupling.scatter, mode)
        new[g], n, res = solvers[g].solve(s, phi[g])
        stats["inner"] += n
        stats["residuals"].append(res)
    return new


def multigroup_sweep(state, problem, solvers, mode="gauss_seidel"):
    """One pass over all groups; updates ``state.phi`` in place.

    ``state.fission_source`` must already hold this power step's fission
    source. Each group is solved by ``solvers[g].solve(source, phi0)``.
    """
    check_choice(mode, "mode", MULTIGROUP_MODES)
    coupling = _Coupling(problem)
    stats = {"inner": 0, "residuals": []}
    phi = _sweep([p.values for p in state.phi], [f.values for f in state.fission_source],
                 coupling, solvers, mode, stats)
    state.phi = [GridField(p, coupling.halo) for p in phi]
    state.multigroup_iters += 1
    state.inner_iters += stats["inner"]
    state.inner_residuals.extend(stats["residuals"])
    return state


def power_iteration(problem, solvers, controls=None, phi0=None):
    """Power method for the dominant eigenpair.

    Starts from ``phi = 1`` (or ``phi0``) and ``k = 1``. Each step builds the
    fission source with ``lambda = 1/k``, runs the multigroup sweeps, updates
    ``k <- k * P_new / P_old`` with ``P`` the total fission production, and
    rescales the flux so its largest interior value is 1. Stops when both the
    change in ``k`` and the max-norm flux change fall below tolerance.

    Raises :class:`NonConvergence` (with the partial state) when the budget
    runs out.
    """
    controls = PowerControls() if controls is None else controls
    h = problem.halo
    G = problem.n_groups
    if not any(np.any(x > 0) for x in problem.nu_sigma_f):
        raise NoFissileMaterial("no cell has a nonzero nu * sigma_f")
    coupling = _Coupling(problem)
    if phi0 is None:
        phi = [_pad(np.ones(problem.shape), h) for _ in range(G)]
    else:
        phi = [_as_padded(p, h).copy() for p in phi0]
    k = 1.0
    P = float(np.sum(_production(phi, coupling.nu_sigma_f)))
    if not P > 0:
        raise NoFissileMaterial("initial flux produces no fissions")
    state = EigenSolveState(phi=[GridField(p, h) for p in phi], k_eff=k,
                            keff_history=[(0, k)])
    stats = {"inner": 0, "residuals": []}
    for m in range(1, controls.max_power_iters + 1):
        fission = _fission(phi, coupling.nu_sigma_f, coupling.chi, 1.0 / k)
        new = phi
        for _ in range(controls.sweeps_per_power):
            new = _sweep(new, fission, coupling, solvers, controls.multigroup_mode, stats)
            state.multigroup_iters += 1
        P_new = float(np.sum(_production(new, coupling.nu_sigma_f)))
        k_new = k * P_new / P
        scale = max(float(np.max(interior_view(p, h))) for p in new)
        new = [p / scale for p in new]
        P = float(np.sum(_production(new, coupling.nu_sigma_f)))
        dphi = max(float(np.max(np.abs(a - b))) for a, b in zip(new, phi))
        dk = abs(k_new - k)
        phi, k = new, k_new
        state.keff_history.append((m, k))
        state.flux_change_history.append(dphi)
        state.power_iters = m
        if dk < controls.k_tol and dphi < controls.flux_tol:
            state.converged = True
            break
    state.phi = [GridField(p, h) for p in phi]
    state.k_eff = k
    state.fission_source = [GridField(f, h) for f in fission]
    state.inner_iters = stats["inner"]
    state.inner_residuals = stats["residuals"]
    if not state.converged:
        raise NonConvergence(
            f"power iteration not converged after {controls.max_power_iters} steps "
            f"(k = {k:.10f})", state=state)
    return state
