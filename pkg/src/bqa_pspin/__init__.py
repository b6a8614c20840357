"""Semiclassical and exact analysis of bifurcation-based quantum annealing of the spin-1 p-spin model."""

__version__ = "0.1.0"

from .exact import (ConvergenceError, SymmetricBasis, SymmetricState, build_hamiltonian, coherent_overlap,
                    enumerate_basis, ground_state, trace_distance_point, trace_norm_distance)
from .minimize import SearchSettings, minimize_coefficients, minimize_potential
from .model import ModelParams, Schedule, single_spin_ground_state, single_spin_hamiltonian, spin1_operators
from .potential import Angles, order_parameter, potential, potential_value
from .semiclassics import (SweepResult, TransitionKind, TransitionReport, classify_transitions,
                           first_order_endpoint, phase_diagram_ab, phase_diagram_sc, second_order_crossing,
                           second_order_curve, sweep)

__all__ = [
    "Angles", "ConvergenceError", "ModelParams", "Schedule", "SearchSettings", "SweepResult", "SymmetricBasis",
    "SymmetricState", "TransitionKind", "TransitionReport", "build_hamiltonian", "classify_transitions",
    "coherent_overlap", "enumerate_basis", "first_order_endpoint", "ground_state", "minimize_coefficients",
    "minimize_potential", "order_parameter", "phase_diagram_ab", "phase_diagram_sc", "potential",
    "potential_value", "second_order_crossing", "second_order_curve", "single_spin_ground_state",
    "single_spin_hamiltonian", "spin1_operators", "sweep", "trace_distance_point", "trace_norm_distance",
]
