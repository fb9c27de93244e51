"""Scenario configuration: parsing, validation, and serialization.

A scenario file is a YAML document of nested tables describing the agents,
the consensus pattern, the graph family and switching schedule, the
disturbance, initial conditions, controller settings, and simulation grid.
Matrices are written row by row as number lists. Parsing reports precise
locations (``agents[2].A``) on every failure; a parsed scenario serializes
back to an identical document (field-by-field round trip).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ParseError
from .model import (AgentModel, DisturbanceSignal, PatternModel,
                    ToleranceConfig)
from .topology import Graph, SwitchingSchedule, periodic_schedule

_CONTROLLER_MODES = ("state", "output", "relaxed")

#: CLI/scenario mode tokens to GainSet modes.
MODE_TOKENS = {"state": "state_feedback", "output": "output_feedback",
               "relaxed": "relaxed"}


@dataclass(frozen=True)
class ScheduleSpec:
    """Either a periodic pattern or an explicit switch list (1-based indices)."""

    kind: str
    order: tuple = ()
    period: float = 0.0
    switch_times: tuple = ()
    active: tuple = ()
    dwell_floor: Optional[float] = None

    def build(self, graphs, horizon: float) -> SwitchingSchedule:
        if self.kind == "periodic":
            return periodic_schedule(graphs, [k - 1 for k in self.order],
                                     self.period, horizon,
                                     tau=self.dwell_floor)
        return SwitchingSchedule(
            graphs=tuple(graphs), switch_times=self.switch_times,
            active=tuple(a - 1 for a in self.active),
            tau=self.dwell_floor)


@dataclass(frozen=True)
class InitialSpec:
    """Initial conditions: explicit vectors or a seeded uniform range."""

    x0_kind: str            # "uniform" | "explicit"
    w0_kind: str            # "explicit" | "zero" | "uniform"
    xi0_kind: str           # "zero" | "explicit"
    low: float = 0.0
    high: float = 1.0
    seed: int = 0
    x0: tuple = ()
    w0: tuple = ()
    xi0: tuple = ()

    def draw(self, agent_dims, pattern_dim, n_agents):
        """Resolve to concrete (x0, w0, xi0) lists; deterministic in seed."""
        rng = np.random.default_rng(self.seed)
        if self.x0_kind == "uniform":
            x0 = [rng.uniform(self.low, self.high, d) for d in agent_dims]
        else:
            x0 = [np.asarray(v, dtype=float) for v in self.x0]
        if self.w0_kind == "uniform":
            w0 = [rng.uniform(self.low, self.high, pattern_dim)
                  for _ in range(n_agents)]
        elif self.w0_kind == "zero":
            w0 = [np.zeros(pattern_dim) for _ in range(n_agents)]
        else:
            w0 = [np.asarray(v, dtype=float) for v in self.w0]
        if self.xi0_kind == "zero":
            xi0 = [np.zeros(d) for d in agent_dims]
        else:
            xi0 = [np.asarray(v, dtype=float) for v in self.xi0]
        return x0, w0, xi0


@dataclass(frozen=True)
class ControllerSpec:
    mode: str = "state"
    gamma: Optional[float] = None
    mu: Optional[float] = None      # None means select at the bound
    mu_margin: float = 0.0
    delta: Optional[float] = None   # used by pinned synthesis
    pinned: bool = False


@dataclass(frozen=True)
class Scenario:
    """Fully parsed scenario, ready to be checked, synthesized, simulated."""

    agents: tuple
    pattern: PatternModel
    graphs: tuple
    schedule: ScheduleSpec
    disturbance: DisturbanceSignal
    initial: InitialSpec
    controller: ControllerSpec
    horizon: float
    step: float
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    q_diags: tuple = ()            # optional per-agent pinned scalings
    p_diags: tuple = ()

    def build_schedule(self, horizon: Optional[float] = None) -> SwitchingSchedule:
        return self.schedule.build(self.graphs, horizon or self.horizon)

    def initial_conditions(self):
        return self.initial.draw([a.state_dim for a in self.agents],
                                 self.pattern.dim, len(self.agents))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "pattern": {"A0": self.pattern.A0.tolist(),
                        "C0": self.pattern.C0.tolist()},
            "agents": [],
            "topology": {
                "graphs": [{"n": g.n, "edges": [list(e) for e in g.edges]}
                           for g in self.graphs],
                "schedule": _schedule_to_dict(self.schedule),
            },
            "disturbance": _disturbance_to_dict(self.disturbance),
            "initial": _initial_to_dict(self.initial),
            "controller": _controller_to_dict(self.controller),
            "simulation": {"horizon": self.horizon, "step": self.step},
            "tolerances": {
                "zero_tol": self.tolerances.zero_tol,
                "definiteness_margin": self.tolerances.definiteness_margin,
                "positivity_slack": self.tolerances.positivity_slack,
                "regulator_residual_tol": self.tolerances.regulator_residual_tol,
            },
        }
        for k, a in enumerate(self.agents):
            entry = {"label": a.label, "A": a.A.tolist(), "B": a.B.tolist(),
                     "C": a.C.tolist(), "D": a.D.tolist()}
            if self.q_diags and self.q_diags[k] is not None:
                entry["q_diag"] = [float(x) for x in self.q_diags[k]]
            if self.p_diags and self.p_diags[k] is not None:
                entry["p_diag"] = [float(x) for x in self.p_diags[k]]
            d["agents"].append(entry)
        return d

    @staticmethod
    def from_dict(doc: dict) -> "Scenario":
        return _parse_scenario(doc)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False,
                              default_flow_style=None)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @staticmethod
    def loads(text: str) -> "Scenario":
        try:
            doc = yaml.safe_load(io.StringIO(text))
        except yaml.YAMLError as exc:
            raise ParseError(f"invalid YAML: {exc}") from exc
        if not isinstance(doc, dict):
            raise ParseError("scenario document must be a mapping")
        return _parse_scenario(doc)

    @staticmethod
    def load(path) -> "Scenario":
        with open(path) as fh:
            return Scenario.loads(fh.read())


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _req(doc, key, path):
    if key not in doc:
        raise ParseError("missing required field", f"{path}.{key}" if path else key)
    return doc[key]


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {type(v).__name__}", path)
    return float(v)


def _matrix(v, path):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ParseError("expected a list of number rows", path)
    width = len(v[0])
    for r, row in enumerate(v):
        if len(row) != width:
            raise ParseError(f"row {r} has {len(row)} entries, expected {width}",
                             path)
        for c, x in enumerate(row):
            _number(x, f"{path}[{r}][{c}]")
    return np.array(v, dtype=float)


def _vector(v, path):
    if not isinstance(v, list) or not v:
        raise ParseError("expected a nonempty number list", path)
    return np.array([_number(x, f"{path}[{k}]") for k, x in enumerate(v)])


def _parse_scenario(doc: dict) -> Scenario:
    pat = _req(doc, "pattern", "")
    pattern = PatternModel(A0=_matrix(_req(pat, "A0", "pattern"), "pattern.A0"),
                           C0=_matrix(_req(pat, "C0", "pattern"), "pattern.C0"))
    raw_agents = _req(doc, "agents", "")
    if not isinstance(raw_agents, list) or not raw_agents:
        raise ParseError("expected a nonempty agent list", "agents")
    agents, q_diags, p_diags = [], [], []
    for k, a in enumerate(raw_agents):
        path = f"agents[{k}]"
        try:
            agent = AgentModel(
                A=_matrix(_req(a, "A", path), f"{path}.A"),
                B=_matrix(_req(a, "B", path), f"{path}.B"),
                C=_matrix(_req(a, "C", path), f"{path}.C"),
                D=_matrix(_req(a, "D", path), f"{path}.D"),
                label=str(a.get("label", k + 1)))
        except ParseError:
            raise
        except Exception as exc:
            raise ParseError(str(exc), path) from exc
        agents.append(agent)
        q_diags.append(tuple(_vector(a["q_diag"], f"{path}.q_diag"))
                       if "q_diag" in a else None)
        p_diags.append(tuple(_vector(a["p_diag"], f"{path}.p_diag"))
                       if "p_diag" in a else None)
    topo = _req(doc, "topology", "")
    raw_graphs = _req(topo, "graphs", "topology")
    if not isinstance(raw_graphs, list) or not raw_graphs:
        raise ParseError("expected a nonempty graph list", "topology.graphs")
    graphs = []
    for k, g in enumerate(raw_graphs):
        path = f"topology.graphs[{k}]"
        n = _req(g, "n", path)
        edges = g.get("edges", [])
        try:
            graphs.append(Graph(n=int(n), edges=tuple(tuple(e) for e in edges)))
        except Exception as exc:
            raise ParseError(str(exc), path) from exc
    schedule = _parse_schedule(_req(topo, "schedule", "topology"), len(graphs))
    dist = _parse_disturbance(_req(doc, "disturbance", ""))
    initial = _parse_initial(_req(doc, "initial", ""))
    controller = _parse_controller(_req(doc, "controller", ""))
    simd = _req(doc, "simulation", "")
    horizon = _number(_req(simd, "horizon", "simulation"), "simulation.horizon")
    step = _number(_req(simd, "step", "simulation"), "simulation.step")
    if horizon <= 0 or step <= 0:
        raise ParseError("horizon and step must be positive", "simulation")
    told = doc.get("tolerances", {})
    try:
        tol = ToleranceConfig(
            zero_tol=float(told.get("zero_tol", 1e-9)),
            definiteness_margin=float(told.get("definiteness_margin", 1e-7)),
            positivity_slack=float(told.get("positivity_slack", 1e-8)),
            regulator_residual_tol=float(told.get("regulator_residual_tol", 1e-8)))
    except Exception as exc:
        raise ParseError(str(exc), "tolerances") from exc
    return Scenario(agents=tuple(agents), pattern=pattern, graphs=tuple(graphs),
                    schedule=schedule, disturbance=dist, initial=initial,
                    controller=controller, horizon=horizon, step=step,
                    tolerances=tol, q_diags=tuple(q_diags),
                    p_diags=tuple(p_diags))


def _parse_schedule(d, n_graphs) -> ScheduleSpec:
    kind = _req(d, "kind", "topology.schedule")
    if kind == "periodic":
        order = _req(d, "order", "topology.schedule")
        period = _number(_req(d, "period", "topology.schedule"),
                         "topology.schedule.period")
        spec = ScheduleSpec(kind="periodic", order=tuple(int(o) for o in order),
                            period=period,
                            dwell_floor=d.get("dwell_floor"))
        indices = spec.order
    elif kind == "explicit":
        times = _vector(_req(d, "switch_times", "topology.schedule"),
                        "topology.schedule.switch_times")
        active = _req(d, "active", "topology.schedule")
        spec = ScheduleSpec(kind="explicit", switch_times=tuple(times),
                            active=tuple(int(a) for a in active),
                            dwell_floor=_number(
                                _req(d, "dwell_floor", "topology.schedule"),
                                "topology.schedule.dwell_floor"))
        indices = spec.active
    else:
        raise ParseError(f"unknown schedule kind {kind!r}", "topology.schedule.kind")
    for a in indices:
        if not (1 <= a <= n_graphs):
            raise ParseError(f"graph index {a} outside 1..{n_graphs}",
                             "topology.schedule")
    return spec


def _schedule_to_dict(s: ScheduleSpec) -> dict:
    if s.kind == "periodic":
        out = {"kind": "periodic", "order": list(s.order), "period": s.period}
        if s.dwell_floor is not None:
            out["dwell_floor"] = s.dwell_floor
        return out
    return {"kind": "explicit", "switch_times": list(s.switch_times),
            "active": list(s.active), "dwell_floor": s.dwell_floor}


def _parse_disturbance(d) -> DisturbanceSignal:
    kind = _req(d, "kind", "disturbance")
    try:
        if kind == "zero":
            return DisturbanceSignal.zero(int(d.get("dim", 1)))
        if kind == "constant":
            return DisturbanceSignal.constant(
                _vector(_req(d, "value", "disturbance"), "disturbance.value"))
        if kind == "abs_sine":
            return DisturbanceSignal.abs_sine(
                _vector(_req(d, "amplitude", "disturbance"),
                        "disturbance.amplitude"),
                _number(_req(d, "frequency", "disturbance"),
                        "disturbance.frequency"))
        if kind == "table":
            return DisturbanceSignal.table(
                _vector(_req(d, "times", "disturbance"), "disturbance.times"),
                _matrix(_req(d, "values", "disturbance"), "disturbance.values"))
    except ParseError:
        raise
    except Exception as exc:
        raise ParseError(str(exc), "disturbance") from exc
    raise ParseError(f"unknown disturbance kind {kind!r}", "disturbance.kind")


def _disturbance_to_dict(d: DisturbanceSignal) -> dict:
    if d.kind == "zero":
        return {"kind": "zero", "dim": d.dim}
    if d.kind == "constant":
        return {"kind": "constant", "value": d.amplitude.tolist()}
    if d.kind == "abs_sine":
        return {"kind": "abs_sine", "amplitude": d.amplitude.tolist(),
                "frequency": d.frequency}
    return {"kind": "table", "times": d.times.tolist(),
            "values": d.values.tolist()}


def _parse_initial(d) -> InitialSpec:
    def block(name, default_kind):
        v = d.get(name)
        if v is None:
            return default_kind, ()
        if isinstance(v, dict):
            return _req(v, "kind", f"initial.{name}"), ()
        if isinstance(v, list):
            return "explicit", tuple(tuple(_vector(row, f"initial.{name}[{k}]"))
                                     for k, row in enumerate(v))
        raise ParseError("expected a table or a list of vectors",
                         f"initial.{name}")

    x0_kind, x0 = block("x0", "uniform")
    w0_kind, w0 = block("w0", "zero")
    xi0_kind, xi0 = block("xi0", "zero")
    if x0_kind not in ("uniform", "explicit"):
        raise ParseError(f"unknown x0 kind {x0_kind!r}", "initial.x0")
    if w0_kind not in ("uniform", "zero", "explicit"):
        raise ParseError(f"unknown w0 kind {w0_kind!r}", "initial.w0")
    if xi0_kind not in ("zero", "explicit"):
        raise ParseError(f"unknown xi0 kind {xi0_kind!r}", "initial.xi0")
    return InitialSpec(
        x0_kind=x0_kind, w0_kind=w0_kind, xi0_kind=xi0_kind,
        low=_number(d.get("low", 0.0), "initial.low"),
        high=_number(d.get("high", 1.0), "initial.high"),
        seed=int(d.get("seed", 0)), x0=x0, w0=w0, xi0=xi0)


def _initial_to_dict(i: InitialSpec) -> dict:
    def rows(vs):
        return [[float(x) for x in v] for v in vs]

    out = {"low": i.low, "high": i.high, "seed": i.seed}
    out["x0"] = rows(i.x0) if i.x0_kind == "explicit" else {"kind": i.x0_kind}
    out["w0"] = rows(i.w0) if i.w0_kind == "explicit" else {"kind": i.w0_kind}
    out["xi0"] = rows(i.xi0) if i.xi0_kind == "explicit" else {"kind": i.xi0_kind}
    return out


def _parse_controller(d) -> ControllerSpec:
    mode = d.get("mode", "state")
    if mode not in _CONTROLLER_MODES:
        raise ParseError(f"mode must be one of {_CONTROLLER_MODES}",
                         "controller.mode")
    gamma = d.get("gamma")
    mu = d.get("mu")
    if mu == "auto":
        mu = None
    return ControllerSpec(
        mode=mode,
        gamma=None if gamma is None else _number(gamma, "controller.gamma"),
        mu=None if mu is None else _number(mu, "controller.mu"),
        mu_margin=_number(d.get("mu_margin", 0.0), "controller.mu_margin"),
        delta=None if d.get("delta") is None
        else _number(d["delta"], "controller.delta"),
        pinned=bool(d.get("pinned", False)))


def _controller_to_dict(c: ControllerSpec) -> dict:
    out = {"mode": c.mode}
    if c.gamma is not None:
        out["gamma"] = c.gamma
    out["mu"] = "auto" if c.mu is None else c.mu
    if c.mu_margin:
        out["mu_margin"] = c.mu_margin
    if c.delta is not None:
        out["delta"] = c.delta
    if c.pinned:
        out["pinned"] = True
    return out
