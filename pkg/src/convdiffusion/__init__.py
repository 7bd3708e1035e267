"""Multigroup neutron diffusion eigenvalue solver built from fixed-weight
stencil convolutions, Jacobi-smoothed sawtooth multigrid and power iteration."""

from .discretisation import (DiscretisedProblem, apply_reflective_halo,
                             apply_vacuum, build_convfem_filter,
                             build_fv_filter, compute_sigma_as,
                             diagonal_coefficients, diffusion_apply,
                             discretise, off_diagonal_filter)
from .fields import (GridField, StencilFilter, conv_apply, hadamard_inverse,
                     hadamard_product, norms, upsample2x)
from .geometry import (LatticeSpec, MaterialFields, build_assembly, build_core,
                       grid_counts, load_geometry, rasterise_lattice_cell)
from .materials import CrossSectionLibrary, Material, load_cross_sections
from .multigrid import (MultigridHierarchy, MultigridSolver, build_hierarchy,
                        jacobi_step, mg_cycle, residual, restrict)
from .multigroup import (EigenSolveState, PowerControls, assemble_group_source,
                         fission_source, multigroup_sweep, power_iteration)
from .oracle import (GaussSeidelSolver, SparseSystem, assemble_sparse_system,
                     gauss_seidel_solve, reference_eigensolve)
from .solver import KEffSolver

__version__ = "0.1.0"
