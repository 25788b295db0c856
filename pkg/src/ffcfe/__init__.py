"""Functionally fitted, energy-preserving continuous finite element integrators."""

from .basis import (
    BasisAtom,
    FittingSpace,
    make_cfe_space,
    make_custom_space,
    make_tf1_space,
    make_tf2_space,
    make_tf3_space,
    parse_atom,
    space_for_method,
)
from .errors import (
    BlowUpError,
    ConvergenceError,
    DegenerateSpaceError,
    DivergenceError,
    FFCFEError,
    NodeDegeneracyError,
    StepError,
)
from .integrator import StepControl, Trajectory, adjoint_step, integrate, step
from .metrics import Experiment, error_series, observed_order, run_experiment
from .problems import HamiltonianSystem, make_problem
from .tableau import (
    DiscreteTableau,
    build_tableau,
    coefficient_A,
    dump_tableau,
    gauss_legendre,
    kernel_P,
    lagrange_interpolants,
    limit_kernel,
    orthonormalize,
)

__version__ = "0.1.0"
