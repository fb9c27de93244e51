"""Post-hoc audits of a trajectory: positivity, consensus, and L2 gain.

The audits are the executable counterpart of the closed-loop guarantees:
state positivity, patterned consensus of the outputs (decaying error when
the disturbance vanishes), the finite-horizon energy inequality

    int ||e_i||^2  <=  gamma^2 int ||d||^2  +  kappa_i

and the generator contraction bound ``||w~(t)|| <= ||w~(0)|| exp(-lam t)``
with ``lam`` the minimum algebraic connectivity. All audits are pure
functions of the trajectory (plus gains where noted). The energy inequality
is stated over an infinite horizon; both sides are monotone in the horizon,
so the finite-horizon check is a necessary trace of it, reported as such.

The automatic ``kappa_i`` is the initial value of the Lyapunov-like
functional from the closed-loop analysis,

    kappa_i = x~_i(0)' Q_i^-1 x~_i(0) + iota_i * ||w~(0)||^2 / 2
              [ + m_i * xbar_i(0)' P_i xbar_i(0)   in output mode ]

with the scale factors evaluated at their analytic lower bounds,

    iota_i = (2 / lam) * max(fac / c0 * ||Q^-1 B K2||^2, 1)
    m_i    = (2 / c1)  * max(4 / c0 * ||Q^-1 B K1||^2, 1)

where ``fac`` is 2 for state feedback and 4 for output feedback, ``c0`` the
measured definiteness margin of the certificate (the sharpest constant with
``form < -c0 Q^2``), and ``c1`` the measured Lyapunov margin of the
observer error dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import MissingCertificate
from .sim import Trajectory
from .synthesis import GainSet


@dataclass(frozen=True)
class PositivityAudit:
    passed: bool
    min_entry: float
    location: str


def audit_positivity(traj: Trajectory, slack: float = 1e-8) -> PositivityAudit:
    """Worst state entry over the certified-positive blocks (x and w)."""
    worst = np.inf
    where = ""
    for name, block in traj.positivity_blocks():
        m = float(block.min())
        if m < worst:
            worst, where = m, name
    if not np.isfinite(worst):
        worst, where = 0.0, "(no blocks)"
    return PositivityAudit(passed=bool(worst >= -slack), min_entry=worst,
                           location=where)


@dataclass(frozen=True)
class ConsensusAudit:
    """Tail error sup-norms and log-linear decay fits, per agent.

    ``decay_rates[i]`` is None when the error never entered the fit window
    (flagged in ``insufficient_decay``); the sup norm is always reported.
    """

    tail_sup: np.ndarray
    decay_rates: tuple
    insufficient_decay: tuple
    tail_tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.tail_sup <= self.tail_tol))


def audit_consensus(traj: Trajectory, tail_fraction: float = 0.2,
                    fit_floor: float = 1e-8, fit_ceiling: float = 1e-2,
                    tail_tol: float = 1e-3) -> ConsensusAudit:
    """Per-agent sup of ||e_i|| over the trailing window plus decay-rate fit.

    The fit is a least-squares slope of ``log ||e_i(t)||`` over the samples
    where the norm lies in ``[fit_floor, fit_ceiling]``; meaningful for
    disturbance-free runs where the error decays exponentially.
    """
    times = traj.times
    norms = np.linalg.norm(traj.errors, axis=2)
    t_tail = times[-1] - tail_fraction * (times[-1] - times[0])
    tail = times >= t_tail
    sups = norms[tail].max(axis=0)
    rates = []
    flags = []
    for i in range(norms.shape[1]):
        window = (norms[:, i] >= fit_floor) & (norms[:, i] <= fit_ceiling)
        if window.sum() < 8:
            rates.append(None)
            flags.append(True)
            continue
        slope = np.polyfit(times[window], np.log(norms[window, i]), 1)[0]
        rates.append(float(slope))
        flags.append(False)
    return ConsensusAudit(tail_sup=sups, decay_rates=tuple(rates),
                          insufficient_decay=tuple(flags), tail_tol=tail_tol)


@dataclass(frozen=True)
class L2GainAudit:
    """Finite-horizon energy inequality, per agent.

    ``slack[i] = gamma^2 * int ||d||^2 + kappa[i] - int ||e_i||^2``; the
    audit passes when every slack is nonnegative.
    """

    passed: bool
    slack: np.ndarray
    kappa: np.ndarray
    error_energy: np.ndarray
    disturbance_energy: float
    gamma: float


def _certificate_margin(cert) -> float:
    """Sharpest c with ``definiteness_form < -c Q^2`` (measured, not assumed)."""
    qinv = 1.0 / cert.q_diag
    scaled = cert.state_margins.definiteness_form * np.outer(qinv, qinv)
    return -linalg.max_sym_eigenvalue(scaled)


def auto_kappa(traj: Trajectory, gains: GainSet, agents) -> np.ndarray:
    """Per-agent kappa from the certificate Lyapunov data at t = 0."""
    if gains is None or agents is None:
        raise MissingCertificate("auto kappa needs the gains and agent models")
    if traj.mode == "generator_only":
        raise MissingCertificate("auto kappa applies to tracking runs")
    lam = gains.lambda_min
    w_av0 = traj.generator_average()[0]
    v_w0 = 0.5 * float(np.sum(traj.generator_deviation()[0] ** 2))
    output_mode = traj.mode == "output_feedback"
    fac = 4.0 if output_mode else 2.0
    kappas = np.empty(len(gains.agents))
    for i, g in enumerate(gains.agents):
        cert = g.certificate
        qinv = 1.0 / cert.q_diag
        c0 = _certificate_margin(cert)
        if c0 <= 0:
            raise MissingCertificate(
                f"agent {g.label}: certificate has no positive definiteness margin")
        x0 = traj.agent_states(i)[0]
        x_tilde = x0 - g.regulator.X @ w_av0
        bk2 = linalg.spectral_norm(qinv[:, None] * (agents[i].B @ g.K2))
        iota = (2.0 / lam) * max(fac / c0 * bk2 ** 2, 1.0)
        kappa = float(x_tilde @ (qinv * x_tilde)) + iota * v_w0
        if output_mode:
            p = cert.p_diag
            ahat = agents[i].A - g.K3 @ agents[i].C
            c1 = -linalg.max_sym_eigenvalue(ahat.T @ np.diag(p) + np.diag(p) @ ahat)
            if c1 <= 0:
                raise MissingCertificate(
                    f"agent {g.label}: observer Lyapunov margin not positive")
            bk1 = linalg.spectral_norm(qinv[:, None] * (agents[i].B @ g.K1))
            m_i = (2.0 / c1) * max(4.0 / c0 * bk1 ** 2, 1.0)
            xbar0 = x0 - traj.observer_states(i)[0]
            kappa += m_i * float(xbar0 @ (p * xbar0))
        kappas[i] = kappa
    return kappas


def audit_l2_gain(traj: Trajectory, gamma: float, kappa=None,
                  gains: Optional[GainSet] = None, agents=None) -> L2GainAudit:
    """Finite-horizon disturbance-attenuation audit.

    ``kappa`` may be an explicit per-agent array (or scalar broadcast);
    when omitted it is computed from the certificate data, which requires
    ``gains`` and ``agents``.
    """
    n = traj.errors.shape[1]
    if kappa is None:
        kap = auto_kappa(traj, gains, agents)
    else:
        kap = np.broadcast_to(np.asarray(kappa, dtype=float), (n,)).copy()
    e_energy = traj.err_energy[-1]
    d_energy = float(traj.dist_energy[-1])
    slack = gamma ** 2 * d_energy + kap - e_energy
    return L2GainAudit(passed=bool(np.all(slack >= 0)), slack=slack, kappa=kap,
                       error_energy=e_energy, disturbance_energy=d_energy,
                       gamma=gamma)


@dataclass(frozen=True)
class GeneratorBoundAudit:
    passed: bool
    margin: float
    initial_norm: float
    rate: float


def audit_generator_bound(traj: Trajectory, lambda_min: float,
                          rel_slack: float = 1e-6) -> GeneratorBoundAudit:
    """Check ``||w~(t)|| <= ||w~(0)|| exp(-lambda_min t)`` at every sample.

    Runs on any trajectory carrying generator blocks; when the coupling gain
    is below its admissibility bound the result is informational (the bound
    is then not guaranteed).
    """
    dev = traj.generator_deviation()
    norms = np.linalg.norm(dev, axis=1)
    w0 = float(norms[0])
    bound = w0 * np.exp(-lambda_min * traj.times)
    margin = float(np.min(bound - norms))
    return GeneratorBoundAudit(passed=bool(margin >= -rel_slack * max(w0, 1e-300)),
                               margin=margin, initial_norm=w0, rate=lambda_min)


@dataclass(frozen=True)
class AuditReport:
    """Bundle of the audits a simulation run was asked to answer for."""

    positivity: PositivityAudit
    consensus: Optional[ConsensusAudit] = None
    l2_gain: Optional[L2GainAudit] = None
    generator_bound: Optional[GeneratorBoundAudit] = None

    @property
    def passed(self) -> bool:
        parts = [self.positivity.passed]
        if self.consensus is not None:
            parts.append(self.consensus.passed)
        if self.l2_gain is not None:
            parts.append(self.l2_gain.passed)
        if self.generator_bound is not None:
            parts.append(self.generator_bound.passed)
        return all(parts)

    def to_dict(self) -> dict:
        out = {
            "passed": self.passed,
            "positivity": {
                "passed": self.positivity.passed,
                "min_entry": self.positivity.min_entry,
                "location": self.positivity.location,
            },
        }
        if self.consensus is not None:
            c = self.consensus
            out["consensus"] = {
                "passed": c.passed,
                "tail_sup": c.tail_sup.tolist(),
                "tail_tol": c.tail_tol,
                "decay_rates": list(c.decay_rates),
                "insufficient_decay": list(c.insufficient_decay),
            }
        if self.l2_gain is not None:
            g = self.l2_gain
            out["l2_gain"] = {
                "passed": g.passed,
                "gamma": g.gamma,
                "slack": g.slack.tolist(),
                "kappa": g.kappa.tolist(),
                "error_energy": g.error_energy.tolist(),
                "disturbance_energy": g.disturbance_energy,
            }
        if self.generator_bound is not None:
            b = self.generator_bound
            out["generator_bound"] = {
                "passed": b.passed, "margin": b.margin,
                "initial_norm": b.initial_norm, "rate": b.rate,
            }
        return out
