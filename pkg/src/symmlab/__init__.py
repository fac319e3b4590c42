"""Numerical verification toolkit for symmetry and stability of p-Laplace problems.

Modules:

    geometry      star-shaped domains, isoperimetric deficit, polar ring meshes
    nonlinearity  piecewise-affine f, its primitive, bounds and growth hypotheses
    solver        P1 p-Laplace solver, fixed-point loop, boundary diagnostics
    rearrange     exact distribution functions, u^#, Schwarz symmetrization, deficits
    radial        radial solution of the symmetrized problem and comparison gaps
    deficits      the deficit D, inequality verdicts, reports and family fits
    pipeline      case execution and persistence; cli is the command line
"""

from .constants import kappa, omega
from .geometry import (Domain, Mesh, iso_deficit, make_disk, make_ellipse, make_perturbed_ball,
                       make_regular_polygon, make_square, triangulate)
from .nonlinearity import Nonlinearity, bounds, check_hypotheses, parse as parse_nonlinearity, sigma
from .solver import (MeshFunction, boundary_flux, dirichlet_energy_p, gradient_field,
                     pohozaev_residual, solve_fixed_rhs, solve_semilinear)
from .rearrange import (LevelCurveData, RadialProfile, decreasing_rearrangement, distribution_curve,
                        grad_p_norm_radial, gradient_smallness, l1_asymmetry, ps_deficit,
                        schwarz_evaluate)
from .radial import grad_v, solve_symmetrized, talenti_bound_constant, talenti_gap
from .deficits import DeficitReport, compute_D, fit_stability_exponent
from .verdict import Verdict

__version__ = "0.1.0"
