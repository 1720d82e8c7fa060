"""Residual-distribution schemes on triangular meshes with entropy fixes.

The package discretizes 2D scalar conservation laws with residual
distribution / finite element schemes, applies a post-hoc per-element
correction that makes any conservative base scheme exactly
entropy-conservative, offers entropy-dissipating filters, and recovers
locally conservative two-point fluxes from arbitrary residuals.
"""

from .errors import DomainError, InvalidArgumentError, NumericalError
from .mesh import (DofMap, Mesh, build_dof_map, build_rect_mesh, face_pairing,
                   read_mesh_ascii, write_mesh_ascii)
from .problems import (EntropyPair, FluxFunction, ProblemSpec, exact_sinh_steady,
                       make_problem, numerical_flux_llf, numerical_flux_upwind,
                       entropy_numerical_flux, entropy_numerical_flux_llf)
from .residuals import (ElementResidual, ResidualEvaluator, SchemeConfig,
                        boundary_residual, galerkin_residual,
                        jump_stabilized_residual, limited_rd_residual,
                        limiter_beta, rusanov_residual, supg_residual)
from .entropy import correction, corrected_residual, entropy_defect
from .solver import (MarchConfig, MarchResult, StateField, dual_volumes,
                     euler_step, march)
from .audit import entropy_residual_sum, error_norms, identity_check, slopes, truncation_probe
from .fvrecover import FluxGraph, fv_as_rd, recover_laplacian, recover_p1, verify_p2_table

__version__ = "0.1.0"
