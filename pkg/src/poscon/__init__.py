"""Distributed positive-consensus toolkit.

Synthesizes and simulates distributed controllers that drive heterogeneous
positive linear agents to an output consensus with a prescribed dynamic
pattern, under switching communication topologies, while keeping every
state in the nonnegative orthant and attenuating external disturbances in
the finite-L2-gain sense. Includes numerical audits of all three closed-loop
guarantees and a built-in eight-agent reference case.
"""

from .errors import (DimensionMismatch, DisconnectedGraph, Infeasible,
                     InvariantViolation, MissingCertificate, NoSolution,
                     NonFiniteState, NonnegativityViolation, NotSymmetric,
                     Overflow, ParseError, PosconError, SingularMatrix,
                     UnsupportedDimension)
from .kernel import BACKEND
from .model import (AgentModel, DisturbanceSignal, PatternModel,
                    ToleranceConfig, check_assumption1, eigenvalues_small,
                    is_metzler, is_nonnegative, is_positive, validate_scenario)
from .metrics import (AuditReport, audit_consensus, audit_generator_bound,
                      audit_l2_gain, audit_positivity, auto_kappa)
from .regulator import RegulatorSolution, solve_regulator
from .scenario import Scenario
from .sim import (ClosedLoopSystem, Trajectory, build_closed_loop,
                  build_generator, integrate, reference_trajectory)
from .synthesis import (AgentGains, FeasibilityCertificate, GainSet,
                        check_output_conditions, check_relaxed_conditions,
                        check_state_conditions, compute_gains,
                        min_feasible_gamma, mu_lower_bound, search_certificate,
                        select_mu, synthesize, synthesize_pinned, validate_mu)
from .topology import (Graph, SwitchingSchedule, is_connected, lambda2,
                       laplacian, min_algebraic_connectivity,
                       periodic_schedule, sigma_at, single_graph_schedule)

__version__ = "0.1.0"

__all__ = [
    "AgentModel", "AgentGains", "AuditReport", "BACKEND", "ClosedLoopSystem",
    "DimensionMismatch", "DisconnectedGraph", "DisturbanceSignal",
    "FeasibilityCertificate", "GainSet", "Graph", "Infeasible",
    "InvariantViolation", "MissingCertificate", "NoSolution",
    "NonFiniteState", "NonnegativityViolation", "NotSymmetric", "Overflow",
    "ParseError", "PatternModel", "PosconError", "RegulatorSolution",
    "Scenario", "SingularMatrix", "SwitchingSchedule", "ToleranceConfig",
    "Trajectory", "UnsupportedDimension", "audit_consensus",
    "audit_generator_bound", "audit_l2_gain", "audit_positivity",
    "auto_kappa", "build_closed_loop", "build_generator",
    "check_assumption1", "check_output_conditions",
    "check_relaxed_conditions", "check_state_conditions", "compute_gains",
    "eigenvalues_small", "integrate", "is_connected", "is_metzler",
    "is_nonnegative", "is_positive", "lambda2", "laplacian",
    "min_algebraic_connectivity", "min_feasible_gamma", "mu_lower_bound",
    "periodic_schedule", "reference_trajectory", "search_certificate",
    "select_mu", "sigma_at", "single_graph_schedule", "solve_regulator",
    "synthesize", "synthesize_pinned", "validate_mu", "validate_scenario",
]
