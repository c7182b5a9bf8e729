"""Slow-invariant-manifold approximations for fast/slow ODE and
reaction-diffusion systems: GQL decomposition, implicit correction formulas
of orders 0-2, a method-of-lines solver, and the Michaelis-Menten benchmark.
"""

__version__ = "0.1.0"

from .calculus import (JacobianBlocks, Laplacian1D, SecondDerivTensor,
                       apply_laplacian, fd_hessian, fd_jacobian,
                       sps_hessian_tensor, sps_jacobian_blocks)
from .errors import (BracketSearchError, ComplexPairSplitError,
                     ConfigurationError, DimensionMismatchError,
                     NewtonDivergenceError, NoSpectralGapError,
                     NonFiniteEvaluationError, RankDeficientError,
                     RedimlabError, TurningPointError)
from .gql import (GqlDecomposition, build_decomposed_system,
                  fit_global_linearization, from_decomposed_coords,
                  split_spectrum, to_decomposed_coords)
from .manifold import (CorrectionContext, DiffusiveTransport, ResidualReport,
                       h0_residual, h1_laplacian, h1_ode, h1_profile,
                       h2_laplacian, h2_ode, h2_profile, laplacian_context,
                       profile_time_derivatives, residual_report)
from .mm import (MmParams, Scenario, build_scenarios, mm_equilibrium,
                 mm_jacobian, mm_model, mm_rhs)
from .model import (ModelDefinition, Partition, PartitionedState, SpsSystem,
                    evaluate_rhs, join_state, split_state)
from .pde import (Profile1D, SolverConfig, fast_projection,
                  linear_ramp_profile, march_to_steady, semidiscretize,
                  simulate_transient, step_implicit)

__all__ = [name for name in dir() if not name.startswith("_")]
