"""Inertial hybrid and shrinking projection methods for monotone inclusions."""

from .core import AffineSet, DimensionError, HalfSpace, InfeasibleError, axpy, inner, norm
from .operators import ForwardMap, ProblemInstance, ResolventFamily, soft_threshold, tseng_map
from .projections import (
    HalfSpaceStack,
    anchor_halfspace,
    descent_halfspace,
    project_affine,
    project_halfspace,
    project_halfspace_stack,
    project_two_halfspaces,
)
from .solvers import ALGORITHMS, RunConfig, StepsizePolicy, run

__version__ = "0.1.0"
