"""Controller synthesis: feasibility certificates, gains, and coupling gain.

The tracking gains come from diagonal scaling certificates. For state
feedback a diagonal Q > 0 and a scalar delta > 0 must satisfy

    A Q - B B' + delta Q            entrywise positive
    sym(Q A' + A Q - 2 B B' + gamma^-2 D D' + Q C' C Q)   negative definite

(the second inequality drops to ``sym(Q A' + A Q - 2 B B')`` in relaxed
mode, which certifies nominal consensus only). Output feedback adds the dual
pair in a diagonal P for the output-injection gain. The gains themselves are

    K1 = -B' Q^-1,   K2 = U - K1 X,   K3 = P^-1 C'

with (X, U) the regulator solution. "Entrywise positive" follows the
positive-systems convention: no entry below -tol and at least one entry
above tol; its structural purpose, that ``A + B K1`` is Metzler, is
re-asserted directly when gains are computed.

Certificates found by search are always re-validated through the plain
check functions before use; nothing is trusted from the search path.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import linalg, topology
from .errors import DisconnectedGraph, Infeasible, InvariantViolation
from .model import (DEFAULT_TOL, AgentModel, PatternModel, ToleranceConfig,
                    is_metzler, is_nonnegative)
from .regulator import RegulatorSolution, solve_regulator


@dataclass(frozen=True)
class MarginReport:
    """Margins of one (entrywise, definiteness) inequality pair.

    ``entrywise_min``/``entrywise_max`` are the extreme entries of the
    entrywise form; ``definiteness`` is ``-lambda_max`` of the symmetric
    form, so positive values mean negative definite. Both matrices are kept
    for diagnostics.
    """

    entrywise_min: float
    entrywise_max: float
    definiteness: float
    entrywise_form: np.ndarray
    definiteness_form: np.ndarray

    def entrywise_ok(self, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return (self.entrywise_min >= -tol.zero_tol
                and self.entrywise_max > tol.zero_tol)

    def definiteness_ok(self, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return self.definiteness > tol.definiteness_margin

    def passed(self, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return self.entrywise_ok(tol) and self.definiteness_ok(tol)

    def worst(self, tol: ToleranceConfig = DEFAULT_TOL) -> float:
        return min(self.entrywise_min + tol.zero_tol,
                   self.entrywise_max - tol.zero_tol,
                   self.definiteness - tol.definiteness_margin)


@dataclass(frozen=True)
class OutputMargins:
    """The four output-feedback margins: observer (P) pair + state (Q) pair."""

    observer: MarginReport
    state: MarginReport

    def passed(self, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return self.observer.passed(tol) and self.state.passed(tol)

    def worst(self, tol: ToleranceConfig = DEFAULT_TOL) -> float:
        return min(self.observer.worst(tol), self.state.worst(tol))


def _margins(entrywise_form: np.ndarray, definiteness_form: np.ndarray) -> MarginReport:
    sym = 0.5 * (definiteness_form + definiteness_form.T)
    lam_max = linalg.max_sym_eigenvalue(sym)
    return MarginReport(
        entrywise_min=float(entrywise_form.min()),
        entrywise_max=float(entrywise_form.max()),
        definiteness=float(-lam_max),
        entrywise_form=entrywise_form,
        definiteness_form=sym,
    )


def check_state_conditions(agent: AgentModel, q_diag, delta: float, gamma: float,
                           tol: ToleranceConfig = DEFAULT_TOL) -> MarginReport:
    """Margins of the robust state-feedback inequalities for one agent."""
    q = np.asarray(q_diag, dtype=float).reshape(-1)
    _require_diag(agent, q, "Q")
    A, B, C, D = agent.A, agent.B, agent.C, agent.D
    Q = np.diag(q)
    BBt = B @ B.T
    entry = A @ Q - BBt + delta * Q
    form = Q @ A.T + A @ Q - 2.0 * BBt + (D @ D.T) / gamma ** 2 + Q @ C.T @ C @ Q
    return _margins(entry, form)


def check_relaxed_conditions(agent: AgentModel, q_diag, delta: float,
                             tol: ToleranceConfig = DEFAULT_TOL) -> MarginReport:
    """Margins of the relaxed (nominal-consensus) state-feedback inequalities."""
    q = np.asarray(q_diag, dtype=float).reshape(-1)
    _require_diag(agent, q, "Q")
    A, B = agent.A, agent.B
    Q = np.diag(q)
    BBt = B @ B.T
    entry = A @ Q - BBt + delta * Q
    form = Q @ A.T + A @ Q - 2.0 * BBt
    return _margins(entry, form)


def check_observer_conditions(agent: AgentModel, p_diag, delta: float,
                              tol: ToleranceConfig = DEFAULT_TOL) -> MarginReport:
    """Margins of the output-injection inequalities (the P pair)."""
    p = np.asarray(p_diag, dtype=float).reshape(-1)
    _require_diag(agent, p, "P")
    A, C = agent.A, agent.C
    P = np.diag(p)
    CtC = C.T @ C
    entry = P @ A - CtC + delta * P
    form = A.T @ P + P @ A - 2.0 * CtC
    return _margins(entry, form)


def check_output_conditions(agent: AgentModel, p_diag, q_diag, delta: float,
                            gamma: float,
                            tol: ToleranceConfig = DEFAULT_TOL) -> OutputMargins:
    """All four output-feedback margins for one agent."""
    return OutputMargins(
        observer=check_observer_conditions(agent, p_diag, delta, tol),
        state=check_state_conditions(agent, q_diag, delta, gamma, tol),
    )


def _require_diag(agent, diag, name):
    if diag.size != agent.state_dim:
        raise InvariantViolation(
            f"agent {agent.label}: {name} diagonal length {diag.size} "
            f"!= state dim {agent.state_dim}")
    if np.any(diag <= 0):
        raise InvariantViolation(f"agent {agent.label}: {name} must be "
                                 "diagonal with strictly positive entries")


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

#: Condition sets a certificate can be issued under.
CONDITION_SETS = ("state", "state_relaxed", "output", "output_relaxed")


@dataclass(frozen=True)
class FeasibilityCertificate:
    """Concrete (Q, P, delta, gamma) with re-verified margins.

    ``condition_set`` records which inequality family was certified;
    ``*_relaxed`` variants certify the relaxed definiteness form for the Q
    pair (no disturbance-attenuation level), which is what nominal-consensus
    synthesis needs.
    """

    q_diag: np.ndarray
    delta: float
    condition_set: str
    state_margins: MarginReport
    p_diag: Optional[np.ndarray] = None
    gamma: Optional[float] = None
    observer_margins: Optional[MarginReport] = None

    @property
    def relaxed(self) -> bool:
        return self.condition_set.endswith("_relaxed")

    def passed(self, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        ok = self.state_margins.passed(tol)
        if self.observer_margins is not None:
            ok = ok and self.observer_margins.passed(tol)
        return ok


def verify_certificate(agent: AgentModel, cert: FeasibilityCertificate,
                       tol: ToleranceConfig = DEFAULT_TOL) -> FeasibilityCertificate:
    """Recompute every margin of ``cert`` from scratch and return the result."""
    if cert.condition_set in ("state", "output"):
        state = check_state_conditions(agent, cert.q_diag, cert.delta, cert.gamma, tol)
    else:
        state = check_relaxed_conditions(agent, cert.q_diag, cert.delta, tol)
    observer = None
    if cert.condition_set.startswith("output"):
        observer = check_observer_conditions(agent, cert.p_diag, cert.delta, tol)
    return replace(cert, state_margins=state, observer_margins=observer)


_DELTA_GRID = (1.0, 2.0, 3.0, 5.0, 10.0, 0.5, 0.1, 0.01, 0.001)
_DIAG_GRID = (1.0, 0.1, 10.0, 0.01, 100.0)
_DESCENT_FACTORS = (0.25, 0.5, 0.8, 1.25, 2.0, 4.0)


def _search_diag(score_fn, n, budget_box):
    """Grid + coordinate-descent search of a positive diagonal, maximizing score.

    Returns ``(best_diag, best_score)``; stops early on the first candidate
    with positive score (feasible). Always evaluates at least the all-ones
    diagonal so callers never receive an empty result.
    """
    best_d = np.ones(n)
    budget_box[0] -= 1
    best_s = score_fn(best_d)
    if best_s > 0:
        return best_d, best_s
    for combo in itertools.product(_DIAG_GRID, repeat=n):
        if budget_box[0] <= 0:
            break
        budget_box[0] -= 1
        s = score_fn(np.array(combo))
        if s > best_s:
            best_d, best_s = np.array(combo), s
            if s > 0:
                return best_d, best_s
    improved = True
    while improved and budget_box[0] > 0 and best_s <= 0:
        improved = False
        for i in range(n):
            for f in _DESCENT_FACTORS:
                if budget_box[0] <= 0:
                    break
                cand = best_d.copy()
                cand[i] *= f
                if not (1e-4 <= cand[i] <= 1e4):
                    continue
                budget_box[0] -= 1
                s = score_fn(cand)
                if s > best_s:
                    best_d, best_s = cand, s
                    improved = True
                    if s > 0:
                        return best_d, best_s
    return best_d, best_s


def search_certificate(agent: AgentModel, gamma: Optional[float] = None,
                       mode: str = "state", budget: int = 200_000,
                       tol: ToleranceConfig = DEFAULT_TOL) -> FeasibilityCertificate:
    """Search diagonal certificates for one agent.

    ``mode`` is one of ``state`` (robust state feedback, needs ``gamma``),
    ``relaxed`` (nominal consensus), or ``output`` (robust output feedback,
    needs ``gamma``). The search walks a coarse log grid over the diagonal
    entries of Q (and P) for each delta in a fixed grid, refining by
    multiplicative coordinate descent on the worst margin, and stops at the
    first candidate whose margins all pass. The winner is re-validated by
    the corresponding check function before being returned.

    Raises
    ------
    Infeasible
        After the evaluation budget is exhausted; carries the best margins.
    """
    if mode not in ("state", "relaxed", "output"):
        raise InvariantViolation(f"unknown search mode {mode!r}")
    if mode in ("state", "output") and gamma is None:
        raise InvariantViolation(f"mode {mode!r} requires gamma")
    if budget < 2 * len(_DIAG_GRID) ** agent.state_dim:
        raise InvariantViolation("search budget too small for one grid sweep")
    n = agent.state_dim
    budget_box = [budget]
    best = None

    for delta in _DELTA_GRID:
        if mode == "state":
            q_fn = lambda q: check_state_conditions(agent, q, delta, gamma, tol).worst(tol)
        elif mode == "relaxed":
            q_fn = lambda q: check_relaxed_conditions(agent, q, delta, tol).worst(tol)
        else:
            q_fn = lambda q: check_state_conditions(agent, q, delta, gamma, tol).worst(tol)
        q_diag, q_score = _search_diag(q_fn, n, budget_box)
        p_diag, p_score = None, np.inf
        if mode == "output":
            p_fn = lambda p: check_observer_conditions(agent, p, delta, tol).worst(tol)
            p_diag, p_score = _search_diag(p_fn, n, budget_box)
        score = min(q_score, p_score)
        if best is None or score > best[0]:
            best = (score, delta, q_diag, p_diag)
        if score > 0:
            break
        if budget_box[0] <= 0:
            break

    score, delta, q_diag, p_diag = best
    condition_set = {"state": "state", "relaxed": "state_relaxed",
                     "output": "output"}[mode]
    cert = FeasibilityCertificate(
        q_diag=q_diag, delta=delta, condition_set=condition_set,
        state_margins=None, p_diag=p_diag,
        gamma=gamma if mode in ("state", "output") else None)
    cert = verify_certificate(agent, cert, tol)
    if not cert.passed(tol):
        raise Infeasible(
            f"agent {agent.label}: no certificate within budget "
            f"(best worst-margin {score:.3e})", best=cert)
    return cert


def pinned_certificate(agent: AgentModel, q_diag, delta: float,
                       gamma: Optional[float] = None, p_diag=None,
                       output_mode: bool = False, allow_relaxed: bool = True,
                       tol: ToleranceConfig = DEFAULT_TOL) -> FeasibilityCertificate:
    """Certificate at caller-pinned Q (and P), with relaxed fallback.

    When the full gamma-dependent definiteness inequality fails at the
    pinned diagonals but the relaxed form passes, the certificate is issued
    under the ``*_relaxed`` condition set; anything else raises Infeasible.
    """
    q_diag = np.asarray(q_diag, dtype=float).reshape(-1)
    condition_set = "output" if output_mode else "state"
    state = None
    full = None
    if gamma is not None:
        full = check_state_conditions(agent, q_diag, delta, gamma, tol)
        if full.passed(tol):
            state = full
    if state is None:
        if gamma is not None and not allow_relaxed:
            raise Infeasible(
                f"agent {agent.label}: pinned certificate infeasible at "
                f"gamma={gamma}", best=full)
        relaxed = check_relaxed_conditions(agent, q_diag, delta, tol)
        if not relaxed.passed(tol):
            raise Infeasible(
                f"agent {agent.label}: pinned certificate infeasible",
                best=full if full is not None else relaxed)
        state = relaxed
        condition_set += "_relaxed"
    observer = None
    if output_mode:
        observer = check_observer_conditions(agent, p_diag, delta, tol)
        if not observer.passed(tol):
            raise Infeasible(
                f"agent {agent.label}: pinned observer conditions infeasible",
                best=observer)
    return FeasibilityCertificate(
        q_diag=q_diag, delta=delta, condition_set=condition_set,
        state_margins=state,
        p_diag=None if p_diag is None else np.asarray(p_diag, float).reshape(-1),
        gamma=gamma if not condition_set.endswith("_relaxed") else None,
        observer_margins=observer)


def min_feasible_gamma(agent: AgentModel, lo: float = 0.05, hi: float = 4.0,
                       resolution: float = 1e-2, mode: str = "state",
                       budget: int = 20_000,
                       tol: ToleranceConfig = DEFAULT_TOL):
    """Bisect the smallest attenuation level gamma with a feasible certificate.

    Feasibility is monotone in gamma (larger gamma weakens the disturbance
    term), so plain bisection against ``search_certificate`` applies.
    Returns ``(gamma, certificate)`` at the upper end of the final bracket.

    Raises
    ------
    Infeasible
        If even ``hi`` admits no certificate.
    """

    def feasible(g):
        try:
            return search_certificate(agent, gamma=g, mode=mode,
                                      budget=budget, tol=tol)
        except Infeasible:
            return None

    cert_hi = feasible(hi)
    if cert_hi is None:
        raise Infeasible(f"agent {agent.label}: infeasible even at gamma={hi}")
    cert_lo = feasible(lo)
    if cert_lo is not None:
        return lo, cert_lo
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        cert = feasible(mid)
        if cert is None:
            lo = mid
        else:
            hi, cert_hi = mid, cert
    return hi, cert_hi


# ---------------------------------------------------------------------------
# Gains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgentGains:
    """Synthesized gains for one agent, with their provenance."""

    label: str
    K1: np.ndarray
    K2: np.ndarray
    K3: Optional[np.ndarray]
    regulator: RegulatorSolution
    certificate: FeasibilityCertificate


def compute_gains(agent: AgentModel, cert: FeasibilityCertificate,
                  regsol: RegulatorSolution,
                  tol: ToleranceConfig = DEFAULT_TOL) -> AgentGains:
    """Gain formulas plus the structural postconditions they guarantee.

    Asserts that -K1 and K2 are nonnegative, that ``A + B K1`` is Metzler,
    and in output mode that ``A - K3 C`` is Metzler and Lyapunov stable for
    the certified P. Violations surface as InvariantViolation naming the
    failed predicate, since a certificate that passed its margins should
    never produce them.
    """
    if not cert.passed(tol):
        raise InvariantViolation(f"agent {agent.label}: certificate margins failed")
    if not regsol.positive_certified:
        raise InvariantViolation(
            f"agent {agent.label}: regulator solution not nonnegative")
    q = cert.q_diag
    K1 = -(agent.B / q[:, None]).T
    K2 = regsol.U - K1 @ regsol.X
    slack = tol.positivity_slack
    if not is_nonnegative(-K1, slack):
        raise InvariantViolation(f"agent {agent.label}: -K1 has negative entries")
    if not is_nonnegative(K2, slack):
        raise InvariantViolation(f"agent {agent.label}: K2 has negative entries")
    Abar = agent.A + agent.B @ K1
    if not is_metzler(Abar, slack):
        raise InvariantViolation(f"agent {agent.label}: A + B K1 not Metzler")
    K3 = None
    if cert.condition_set.startswith("output"):
        p = cert.p_diag
        K3 = agent.C.T / p[:, None]
        Ahat = agent.A - K3 @ agent.C
        if not is_metzler(Ahat, slack):
            raise InvariantViolation(f"agent {agent.label}: A - K3 C not Metzler")
        P = np.diag(p)
        lyap = linalg.max_sym_eigenvalue(Ahat.T @ P + P @ Ahat)
        if lyap >= -tol.zero_tol:
            raise InvariantViolation(
                f"agent {agent.label}: A - K3 C not certified Hurwitz "
                f"(lambda_max {lyap:.3e})")
    return AgentGains(label=agent.label, K1=K1, K2=K2, K3=K3,
                      regulator=regsol, certificate=cert)


# ---------------------------------------------------------------------------
# Generator coupling gain
# ---------------------------------------------------------------------------


def mu_lower_bound(pattern: PatternModel, graphs,
                   tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Smallest admissible generator coupling gain, ``||A0||/lambda_min + 1``."""
    lam = topology.min_algebraic_connectivity(graphs)
    if lam <= tol.zero_tol:
        raise DisconnectedGraph(
            f"minimum algebraic connectivity {lam:.3e} not positive")
    return linalg.spectral_norm(pattern.A0) / lam + 1.0


def select_mu(pattern: PatternModel, graphs, margin: float = 0.0,
              tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Coupling gain at the admissibility bound plus ``margin``."""
    if margin < 0:
        raise InvariantViolation("mu margin must be >= 0")
    return mu_lower_bound(pattern, graphs, tol) + margin


def validate_mu(mu: float, pattern: PatternModel, graphs,
                tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """True iff ``mu`` meets the coupling-gain bound (within zero_tol)."""
    return mu >= mu_lower_bound(pattern, graphs, tol) - tol.zero_tol


# ---------------------------------------------------------------------------
# Whole-team synthesis
# ---------------------------------------------------------------------------

#: Controller modes a GainSet can be synthesized for.
MODES = ("state_feedback", "output_feedback", "relaxed")

_MODE_TO_SEARCH = {"state_feedback": "state", "output_feedback": "output",
                   "relaxed": "relaxed"}


@dataclass(frozen=True)
class GainSet:
    """Everything the closed loop needs: per-agent gains plus shared data."""

    agents: tuple
    mode: str
    mu: float
    gamma: Optional[float]
    lambda_min: float

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvariantViolation(f"unknown mode {self.mode!r}")

    def entry(self, label: str) -> AgentGains:
        for g in self.agents:
            if g.label == label:
                return g
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "mu": self.mu,
            "gamma": self.gamma,
            "lambda_min": self.lambda_min,
            "agents": [_agent_gains_to_dict(g) for g in self.agents],
        }

    @staticmethod
    def from_dict(d: dict) -> "GainSet":
        return GainSet(
            agents=tuple(_agent_gains_from_dict(a) for a in d["agents"]),
            mode=d["mode"], mu=d["mu"], gamma=d["gamma"],
            lambda_min=d["lambda_min"])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @staticmethod
    def load(path) -> "GainSet":
        with open(path) as fh:
            return GainSet.from_dict(json.load(fh))


def _opt(a):
    return None if a is None else np.asarray(a, dtype=float)


def _margin_to_dict(m: Optional[MarginReport]):
    if m is None:
        return None
    return {"entrywise_min": m.entrywise_min, "entrywise_max": m.entrywise_max,
            "definiteness": m.definiteness,
            "entrywise_form": m.entrywise_form.tolist(),
            "definiteness_form": m.definiteness_form.tolist()}


def _margin_from_dict(d):
    if d is None:
        return None
    return MarginReport(entrywise_min=d["entrywise_min"],
                        entrywise_max=d["entrywise_max"],
                        definiteness=d["definiteness"],
                        entrywise_form=np.array(d["entrywise_form"]),
                        definiteness_form=np.array(d["definiteness_form"]))


def _agent_gains_to_dict(g: AgentGains) -> dict:
    c = g.certificate
    return {
        "label": g.label,
        "K1": g.K1.tolist(),
        "K2": g.K2.tolist(),
        "K3": None if g.K3 is None else g.K3.tolist(),
        "regulator": {
            "X": g.regulator.X.tolist(),
            "U": g.regulator.U.tolist(),
            "residual": float(g.regulator.residual),
            "unique": bool(g.regulator.unique),
            "positive_certified": bool(g.regulator.positive_certified),
        },
        "certificate": {
            "q_diag": c.q_diag.tolist(),
            "p_diag": None if c.p_diag is None else c.p_diag.tolist(),
            "delta": c.delta,
            "gamma": c.gamma,
            "condition_set": c.condition_set,
            "state_margins": _margin_to_dict(c.state_margins),
            "observer_margins": _margin_to_dict(c.observer_margins),
        },
    }


def _agent_gains_from_dict(d: dict) -> AgentGains:
    r = d["regulator"]
    c = d["certificate"]
    return AgentGains(
        label=d["label"],
        K1=np.array(d["K1"], dtype=float),
        K2=np.array(d["K2"], dtype=float),
        K3=_opt(d["K3"]),
        regulator=RegulatorSolution(
            X=np.array(r["X"], dtype=float), U=np.array(r["U"], dtype=float),
            residual=r["residual"], unique=r["unique"],
            positive_certified=r["positive_certified"]),
        certificate=FeasibilityCertificate(
            q_diag=np.array(c["q_diag"], dtype=float),
            p_diag=_opt(c["p_diag"]), delta=c["delta"], gamma=c["gamma"],
            condition_set=c["condition_set"],
            state_margins=_margin_from_dict(c["state_margins"]),
            observer_margins=_margin_from_dict(c["observer_margins"])),
    )


def synthesize(agents, pattern: PatternModel, graphs, mode: str = "state_feedback",
               gamma: Optional[float] = None, mu: Optional[float] = None,
               mu_margin: float = 0.0, budget: int = 200_000,
               tol: ToleranceConfig = DEFAULT_TOL) -> GainSet:
    """Search-based synthesis for every agent.

    ``mu=None`` selects the coupling gain at its bound plus ``mu_margin``;
    an explicit ``mu`` is validated against the bound and rejected below it.
    """
    entries = []
    for agent in agents:
        regsol = solve_regulator(agent, pattern, tol)
        cert = search_certificate(agent, gamma=gamma,
                                  mode=_MODE_TO_SEARCH[mode],
                                  budget=budget, tol=tol)
        entries.append(compute_gains(agent, cert, regsol, tol))
    return _assemble(entries, pattern, graphs, mode, gamma, mu, mu_margin, tol)


def synthesize_pinned(agents, pattern: PatternModel, graphs, q_diags,
                      delta: float, mode: str = "output_feedback",
                      gamma: Optional[float] = None, p_diags=None,
                      mu: Optional[float] = None, mu_margin: float = 0.0,
                      allow_relaxed: bool = True,
                      tol: ToleranceConfig = DEFAULT_TOL) -> GainSet:
    """Synthesis at caller-pinned diagonal scalings (reproduction path)."""
    output_mode = mode == "output_feedback"
    entries = []
    for k, agent in enumerate(agents):
        regsol = solve_regulator(agent, pattern, tol)
        cert = pinned_certificate(
            agent, q_diags[k], delta,
            gamma=None if mode == "relaxed" else gamma,
            p_diag=None if p_diags is None else p_diags[k],
            output_mode=output_mode, allow_relaxed=allow_relaxed, tol=tol)
        entries.append(compute_gains(agent, cert, regsol, tol))
    return _assemble(entries, pattern, graphs, mode, gamma, mu, mu_margin, tol)


def _assemble(entries, pattern, graphs, mode, gamma, mu, mu_margin, tol):
    lam = topology.min_algebraic_connectivity(graphs)
    if mu is None:
        mu = select_mu(pattern, graphs, mu_margin, tol)
    elif not validate_mu(mu, pattern, graphs, tol):
        raise InvariantViolation(
            f"mu={mu} below the coupling-gain bound "
            f"{mu_lower_bound(pattern, graphs, tol):.6g}")
    return GainSet(agents=tuple(entries), mode=mode, mu=float(mu),
                   gamma=gamma, lambda_min=float(lam))
