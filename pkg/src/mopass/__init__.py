"""Musielak-Orlicz machinery and a mountain-pass solver for G(.)-Laplacian problems."""

from .discretization import Field, GradField, Grid, grad, random_dirichlet_field
from .mountain_pass import (Geometry, GeometryError, MountainPassConfig, MountainPassResult, OracleError,
                            bump_field, probe_geometry, shooting_oracle, solve)
from .orlicz_space import amemiya_norm, embedding_check, holder_check, luxemburg_norm, modular, poincare_ratio
from .phi_core import (CompanionPsi, ConjugatePhi, PhiFamily, PhiKind, SampleSpec, SpatialFunction,
                       build_companion, check_a0, check_a1, check_alpha_window, check_sc,
                       check_standing_assumption, estimate_sc_constants)
from .problem import (DiscreteEnergy, Nonlinearity, check_ar, check_ar_consequence, check_subcritical,
                      check_superlinear_zero, dual_residual, energy, energy_gradient, weak_residual)
from .reports import CheckReport, HypothesisError, HypothesisWarning, InputError, NumericError

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
