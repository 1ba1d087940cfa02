"""Hamiltonian flows of Lagrangian branes on a local Coulomb-branch model."""

from .coords import PhasePoint, TangentVector, omega
from .hamiltonian import HamiltonianSpec, X_H_closed, H_value
from .flow import IntegratorConfig, integrate, integrate_batch
from .branes import BraneCloud, TargetBrane, convergence_run, seed_semicircles
from .ss_model import SurfacePoint, ss_convergence, ss_flow

__all__ = [
    "PhasePoint",
    "TangentVector",
    "omega",
    "HamiltonianSpec",
    "X_H_closed",
    "H_value",
    "IntegratorConfig",
    "integrate",
    "integrate_batch",
    "BraneCloud",
    "TargetBrane",
    "convergence_run",
    "seed_semicircles",
    "SurfacePoint",
    "ss_convergence",
    "ss_flow",
]
