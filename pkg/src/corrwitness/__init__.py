"""Trace-distance witnesses of initial system-environment correlations for
polarization-entangled photon pairs, with count simulation and ML tomography."""
from .kernels import BACKEND
from .qstate import DensityMatrix, Projector, PureStateVector, helstrom_projector, partial_trace, trace_distance
from .photon import PhaseFunction, PixelGrid, build_total_state, epsilon, gaussian_profile, reduced_state
from .dynamics import bound_check, semigroup_witness, sweep
from .tomography import ml_reconstruct, projector_set

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DensityMatrix",
    "PhaseFunction",
    "PixelGrid",
    "Projector",
    "PureStateVector",
    "bound_check",
    "build_total_state",
    "epsilon",
    "gaussian_profile",
    "helstrom_projector",
    "ml_reconstruct",
    "partial_trace",
    "projector_set",
    "reduced_state",
    "semigroup_witness",
    "sweep",
    "trace_distance",
]
