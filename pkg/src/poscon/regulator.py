"""Tracking-gain prerequisites: the per-agent regulator equations.

For agent matrices (A, B, C) and pattern (A0, C0) this solves

    A X + B U - X A0 = 0
    C X - C0        = 0

for X (state map) and U (feedforward map). Both equations are linear in the
stacked unknowns, so they are vectorized column-major with the identity
``vec(A X B) = (B.T kron A) vec(X)`` and solved by least squares; the
residual reported is the max-norm of both equations after substitution.
Nonnegativity of (X, U) is what makes the downstream gains positivity
preserving, so it is checked and recorded rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import NoSolution
from .model import DEFAULT_TOL, AgentModel, PatternModel, ToleranceConfig, is_nonnegative


@dataclass(frozen=True)
class RegulatorSolution:
    """Solution pair with its substitution residual and structural flags.

    ``unique`` is False when the stacked system is rank deficient (the
    minimum-norm solution is returned in that case). ``positive_certified``
    records whether the returned (X, U) is entrywise nonnegative.
    """

    X: np.ndarray
    U: np.ndarray
    residual: float
    unique: bool = True
    positive_certified: bool = True


def _stacked_system(agent: AgentModel, pattern: PatternModel):
    ni, mi = agent.state_dim, agent.input_dim
    n0, l = pattern.dim, pattern.output_dim
    In0 = np.eye(n0)
    top = np.hstack([
        np.kron(In0, agent.A) - np.kron(pattern.A0.T, np.eye(ni)),
        np.kron(In0, agent.B),
    ])
    bot = np.hstack([np.kron(In0, agent.C), np.zeros((l * n0, mi * n0))])
    M = np.vstack([top, bot])
    rhs = np.concatenate([np.zeros(ni * n0), pattern.C0.flatten(order="F")])
    return M, rhs


def _unpack(sol, agent, pattern):
    ni, mi, n0 = agent.state_dim, agent.input_dim, pattern.dim
    X = sol[: ni * n0].reshape((ni, n0), order="F")
    U = sol[ni * n0:].reshape((mi, n0), order="F")
    return X, U


def _substitution_residual(agent, pattern, X, U) -> float:
    r1 = agent.A @ X + agent.B @ U - X @ pattern.A0
    r2 = agent.C @ X - pattern.C0
    return float(max(np.abs(r1).max(), np.abs(r2).max()))


def solve_regulator(agent: AgentModel, pattern: PatternModel,
                    tol: ToleranceConfig = DEFAULT_TOL) -> RegulatorSolution:
    """Solve the regulator equations for one agent.

    Returns the minimum-norm least-squares solution. When that solution has
    negative entries and the system leaves room (rank deficiency), a
    nonnegative solution is additionally sought with Lawson-Hanson NNLS and
    adopted if it matches the equations to the same tolerance; otherwise the
    solution is returned with ``positive_certified=False``.

    Raises
    ------
    NoSolution
        If the least-squares residual exceeds ``tol.regulator_residual_tol``
        (the regulator equations are unsolvable for this agent/pattern pair).
    """
    M, rhs = _stacked_system(agent, pattern)
    sol, _, rank, _ = np.linalg.lstsq(M, rhs, rcond=None)
    X, U = _unpack(sol, agent, pattern)
    residual = _substitution_residual(agent, pattern, X, U)
    if residual > tol.regulator_residual_tol:
        raise NoSolution(
            f"agent {agent.label}: regulator residual {residual:.3e} exceeds "
            f"{tol.regulator_residual_tol:.0e}")
    unique = bool(rank == M.shape[1])
    positive = is_nonnegative(X, tol.positivity_slack) and \
        is_nonnegative(U, tol.positivity_slack)
    if not positive:
        nn_sol, _ = scipy.optimize.nnls(M, rhs)
        Xn, Un = _unpack(nn_sol, agent, pattern)
        res_n = _substitution_residual(agent, pattern, Xn, Un)
        if res_n <= tol.regulator_residual_tol:
            X, U, residual, positive = Xn, Un, res_n, True
    return RegulatorSolution(X=X, U=U, residual=residual, unique=unique,
                             positive_certified=positive)
