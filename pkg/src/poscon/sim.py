"""Closed-loop assembly and fixed-step integration.

Three system flavors share one stacked piecewise-LTI representation:

- generator only: the coupled reference generators ``w`` alone,
- state feedback: agent states ``x`` driven by ``K1 x + K2 w``,
- output feedback: ``x`` plus observer states ``xi``, the input being
  ``K1 xi + K2 w`` with output injection ``K3 (y - C xi)``.

Within a switching interval the drift matrix is constant, so integration is
classical RK4 with the step snapped to interval boundaries (adjusted
downward per interval so switch times land exactly on sample instants).
The disturbance is evaluated at the RK4 stage times, not held. A
cross-validation mode advances the homogeneous part by exact matrix
exponentials instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.integrate

from . import kernel, linalg
from .errors import (DimensionMismatch, InvariantViolation, NonFiniteState,
                     NonnegativityViolation)
from .model import DEFAULT_TOL, DisturbanceSignal, PatternModel, ToleranceConfig
from .synthesis import GainSet
from .topology import SwitchingSchedule

#: Divergence guard: integration aborts when any state magnitude passes this.
DIVERGENCE_GUARD = 1e12

MODES = ("generator_only", "state_feedback", "output_feedback")


@dataclass(frozen=True)
class StateLayout:
    """Block layout of the stacked state vector.

    Order: agent states ``x_1..x_N`` (absent in generator-only mode), then
    observer states ``xi_1..xi_N`` (output feedback only), then generator
    states ``w_1..w_N``.
    """

    agent_dims: tuple
    pattern_dim: int
    n_generators: int
    has_observer: bool

    @property
    def nx(self) -> int:
        return sum(self.agent_dims)

    @property
    def total_dim(self) -> int:
        return self.nx * (2 if self.has_observer else 1) \
            + self.n_generators * self.pattern_dim

    def x_slice(self, i: int) -> slice:
        off = sum(self.agent_dims[:i])
        return slice(off, off + self.agent_dims[i])

    def xi_slice(self, i: int) -> slice:
        if not self.has_observer:
            raise InvariantViolation("layout has no observer block")
        off = self.nx + sum(self.agent_dims[:i])
        return slice(off, off + self.agent_dims[i])

    def w_slice(self, i: int) -> slice:
        base = self.nx * (2 if self.has_observer else 1)
        off = base + i * self.pattern_dim
        return slice(off, off + self.pattern_dim)


@dataclass
class ClosedLoopSystem:
    """A piecewise-LTI stacked system ready for integration."""

    mode: str
    pattern: PatternModel
    schedule: SwitchingSchedule
    disturbance: DisturbanceSignal
    mu: float
    layout: StateLayout
    initial_state: np.ndarray
    agents: tuple = ()
    gains: Optional[GainSet] = None
    _drift_cache: dict = field(default_factory=dict, repr=False)

    def drift_matrix(self, graph_index: int) -> np.ndarray:
        """Constant drift matrix while ``graph_index`` is active (cached)."""
        if graph_index not in self._drift_cache:
            self._drift_cache[graph_index] = self._build_drift(graph_index)
        return self._drift_cache[graph_index]

    def _build_drift(self, graph_index: int) -> np.ndarray:
        from .topology import laplacian

        lay = self.layout
        n0 = lay.pattern_dim
        N = lay.n_generators
        M = np.zeros((lay.total_dim, lay.total_dim))
        L = laplacian(self.schedule.graphs[graph_index])
        wbase = lay.w_slice(0).start
        M[wbase:, wbase:] = np.kron(np.eye(N), self.pattern.A0) \
            - self.mu * np.kron(L, np.eye(n0))
        if self.mode == "generator_only":
            return M
        for i, agent in enumerate(self.agents):
            g = self.gains.agents[i]
            xs = lay.x_slice(i)
            ws = lay.w_slice(i)
            BK1 = agent.B @ g.K1
            BK2 = agent.B @ g.K2
            if self.mode == "state_feedback":
                M[xs, xs] += agent.A + BK1
                M[xs, ws] += BK2
            else:
                xis = lay.xi_slice(i)
                K3C = g.K3 @ agent.C
                M[xs, xs] += agent.A
                M[xs, xis] += BK1
                M[xs, ws] += BK2
                M[xis, xs] += K3C
                M[xis, xis] += agent.A - K3C + BK1
                M[xis, ws] += BK2
        return M

    def input_matrix(self) -> np.ndarray:
        """Stacked disturbance input matrix (zero rows outside agent states)."""
        lay = self.layout
        q = max(self.disturbance.dim, 1)
        E = np.zeros((lay.total_dim, q))
        if self.mode != "generator_only":
            for i, agent in enumerate(self.agents):
                E[lay.x_slice(i), :] = agent.D
        return E


def _check_nonneg(vec, name, slack):
    v = linalg.as_vector(vec, name)
    if v.size and v.min() < -slack:
        raise NonnegativityViolation(f"{name} has entry {v.min():.3e} < 0")
    return v


def build_generator(pattern: PatternModel, schedule: SwitchingSchedule,
                    mu: float, w0,
                    tol: ToleranceConfig = DEFAULT_TOL) -> ClosedLoopSystem:
    """Coupled reference generators alone, from nonnegative initial states.

    ``w0`` is one vector of length ``pattern.dim`` per graph node.
    """
    if mu <= 0:
        raise InvariantViolation("mu must be > 0")
    N = schedule.graphs[0].n
    if len(w0) != N:
        raise DimensionMismatch(f"need {N} initial generator states, got {len(w0)}")
    parts = [_check_nonneg(w, f"w0[{i}]", tol.positivity_slack)
             for i, w in enumerate(w0)]
    for i, p in enumerate(parts):
        if p.size != pattern.dim:
            raise DimensionMismatch(f"w0[{i}] has dim {p.size} != {pattern.dim}")
    layout = StateLayout(agent_dims=(), pattern_dim=pattern.dim,
                         n_generators=N, has_observer=False)
    return ClosedLoopSystem(
        mode="generator_only", pattern=pattern, schedule=schedule,
        disturbance=DisturbanceSignal.zero(1), mu=float(mu), layout=layout,
        initial_state=np.concatenate(parts))


def build_closed_loop(agents, gains: GainSet, pattern: PatternModel,
                      schedule: SwitchingSchedule,
                      disturbance: DisturbanceSignal, mode: Optional[str],
                      x0, w0=None, xi0=None,
                      tol: ToleranceConfig = DEFAULT_TOL) -> ClosedLoopSystem:
    """Assemble the tracking closed loop.

    ``mode`` may be None to follow the gain set (``relaxed`` gains drive the
    state-feedback dynamics). Output feedback defaults the generators to
    zero initial state; overriding that is allowed but warned about, since
    the positivity certificate for output feedback is stated for ``w0 = 0``
    together with ``x0 - xi0 >= 0``.
    """
    if mode is None:
        mode = "state_feedback" if gains.mode == "relaxed" else gains.mode
    if mode not in ("state_feedback", "output_feedback"):
        raise InvariantViolation(f"unknown closed-loop mode {mode!r}")
    if mode == "output_feedback" and any(g.K3 is None for g in gains.agents):
        raise InvariantViolation("output feedback requires K3 for every agent")
    N = len(agents)
    if schedule.graphs[0].n != N:
        raise DimensionMismatch(
            f"{schedule.graphs[0].n} graph nodes vs {N} agents")
    if len(gains.agents) != N:
        raise DimensionMismatch("one gain entry per agent required")
    if disturbance.dim != agents[0].disturbance_dim:
        raise DimensionMismatch(
            f"disturbance dim {disturbance.dim} vs agent D cols "
            f"{agents[0].disturbance_dim}")
    slack = tol.positivity_slack
    x_parts = []
    for i, agent in enumerate(agents):
        xi = _check_nonneg(x0[i], f"x0[{i}]", slack)
        if xi.size != agent.state_dim:
            raise DimensionMismatch(f"x0[{i}] has dim {xi.size}")
        x_parts.append(xi)
    n0 = pattern.dim
    if w0 is None:
        if mode == "state_feedback":
            raise DimensionMismatch("state feedback requires explicit w0")
        w_parts = [np.zeros(n0) for _ in range(N)]
    else:
        w_parts = [_check_nonneg(w, f"w0[{i}]", slack) for i, w in enumerate(w0)]
        if mode == "output_feedback" and any(p.max(initial=0.0) > 0 for p in w_parts):
            warnings.warn("output feedback with nonzero generator initial "
                          "state departs from the certified w0 = 0 setup",
                          stacklevel=2)
    for i, p in enumerate(w_parts):
        if p.size != n0:
            raise DimensionMismatch(f"w0[{i}] has dim {p.size} != {n0}")
    parts = list(x_parts)
    if mode == "output_feedback":
        xi_parts = []
        for i, agent in enumerate(agents):
            v = (np.zeros(agent.state_dim) if xi0 is None
                 else linalg.as_vector(xi0[i], f"xi0[{i}]"))
            if v.size != agent.state_dim:
                raise DimensionMismatch(f"xi0[{i}] has dim {v.size}")
            if (x_parts[i] - v).min(initial=0.0) < -slack:
                raise NonnegativityViolation(
                    f"x0[{i}] - xi0[{i}] must be nonnegative to certify "
                    "observer-error positivity")
            xi_parts.append(v)
        parts += xi_parts
    elif xi0 is not None:
        raise DimensionMismatch("xi0 only applies to output feedback")
    parts += w_parts
    layout = StateLayout(agent_dims=tuple(a.state_dim for a in agents),
                         pattern_dim=n0, n_generators=N,
                         has_observer=(mode == "output_feedback"))
    return ClosedLoopSystem(
        mode=mode, pattern=pattern, schedule=schedule, disturbance=disturbance,
        mu=gains.mu, layout=layout, initial_state=np.concatenate(parts),
        agents=tuple(agents), gains=gains)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run with outputs, errors, and running energies.

    ``err_energy[k, i]`` is the trapezoidal ``int_0^{t_k} ||e_i||^2`` and
    ``dist_energy[k]`` the matching disturbance energy.
    """

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    reference: np.ndarray
    errors: np.ndarray
    err_energy: np.ndarray
    dist_energy: np.ndarray
    layout: StateLayout
    mode: str
    intervals: tuple
    meta: dict

    @property
    def n_agents(self) -> int:
        return self.outputs.shape[1]

    def agent_states(self, i: int) -> np.ndarray:
        return self.states[:, self.layout.x_slice(i)]

    def observer_states(self, i: int) -> np.ndarray:
        return self.states[:, self.layout.xi_slice(i)]

    def generator_states(self, i: int) -> np.ndarray:
        return self.states[:, self.layout.w_slice(i)]

    def generator_average(self) -> np.ndarray:
        N, n0 = self.layout.n_generators, self.layout.pattern_dim
        base = self.layout.w_slice(0).start
        w = self.states[:, base:].reshape(-1, N, n0)
        return w.mean(axis=1)

    def generator_deviation(self) -> np.ndarray:
        """Stacked deviation from the generator average, shape (ns, N*n0)."""
        N, n0 = self.layout.n_generators, self.layout.pattern_dim
        base = self.layout.w_slice(0).start
        w = self.states[:, base:].reshape(-1, N, n0)
        dev = w - self.generator_average()[:, None, :]
        return dev.reshape(-1, N * n0)

    def positivity_blocks(self):
        """Named state blocks that the theory certifies nonnegative."""
        for i in range(len(self.layout.agent_dims)):
            yield f"x[{i}]", self.states[:, self.layout.x_slice(i)]
        for i in range(self.layout.n_generators):
            yield f"w[{i}]", self.states[:, self.layout.w_slice(i)]


def _plan_intervals(schedule: SwitchingSchedule, horizon: float, step: float):
    """Per-interval step counts with the step adjusted downward to fit."""
    if step <= 0:
        raise DimensionMismatch("step must be > 0")
    plan = []
    for t0, t1, idx in schedule.intervals(horizon):
        length = t1 - t0
        n = int(round(length / step))
        if n < 1 or abs(n * step - length) > 1e-9 * max(1.0, length):
            n = int(np.ceil(length / step - 1e-12))
        plan.append((t0, t1, idx, n, length / n))
    return plan


def integrate(system: ClosedLoopSystem, horizon: float, step: float,
              method: str = "rk4", guard: float = DIVERGENCE_GUARD,
              backend: Optional[str] = None) -> Trajectory:
    """Integrate a closed-loop system over ``[0, horizon]``.

    ``method="rk4"`` is the fixed-step kernel (compiled when available);
    ``method="expm"`` advances each step by the exact matrix exponential and
    is only valid with a zero disturbance (cross-validation mode).

    Raises
    ------
    NonFiniteState
        When any state entry exceeds ``guard`` or turns non-finite.
    """
    if method not in ("rk4", "expm"):
        raise InvariantViolation(f"unknown method {method!r}")
    if method == "expm" and not system.disturbance.is_zero:
        raise InvariantViolation("expm method requires a zero disturbance")
    span = kernel.rk4_span if backend is None else kernel.get_backend(backend)
    plan = _plan_intervals(system.schedule, horizon, step)
    dim = system.layout.total_dim
    n_samples = 1 + sum(n for (_, _, _, n, _) in plan)
    states = np.empty((n_samples, dim))
    times = np.empty(n_samples)
    E = np.ascontiguousarray(system.input_matrix())
    z = np.ascontiguousarray(system.initial_state, dtype=float)
    states[0] = z
    times[0] = 0.0
    pos = 0
    for (t0, t1, idx, n, h) in plan:
        M = np.ascontiguousarray(system.drift_matrix(idx))
        block = np.empty((n + 1, dim))
        if method == "rk4":
            half_times = t0 + 0.5 * h * np.arange(2 * n + 1)
            d = np.ascontiguousarray(system.disturbance.sample(half_times))
            bad = span(M, E, d, z, h, guard, block)
            if bad >= 0:
                raise NonFiniteState(
                    f"state exceeded {guard:.1e} at t = {t0 + bad * h:.6g}",
                    time=t0 + bad * h)
        else:
            phi = linalg.expm(M, h)
            block[0] = z
            for k in range(n):
                block[k + 1] = phi @ block[k]
            if not np.all(np.abs(block) <= guard):
                raise NonFiniteState("state exceeded guard during exact flow")
        states[pos + 1: pos + n + 1] = block[1:]
        times[pos + 1: pos + n + 1] = t0 + h * np.arange(1, n + 1)
        z = np.ascontiguousarray(block[n])
        pos += n
    return _postprocess(system, times, states, plan, method, backend)


def _postprocess(system, times, states, plan, method, backend) -> Trajectory:
    lay = system.layout
    pattern = system.pattern
    N = lay.n_generators if system.mode == "generator_only" else len(system.agents)
    l = pattern.output_dim
    ns = times.size

    # reference y0(t) = C0 expm(A0 t) w_av(0), advanced stepwise per interval
    base = lay.w_slice(0).start
    w_av0 = states[0, base:].reshape(lay.n_generators, lay.pattern_dim).mean(axis=0)
    x0ref = np.empty((ns, lay.pattern_dim))
    x0ref[0] = w_av0
    pos = 0
    cur = w_av0.copy()
    for (_, _, _, n, h) in plan:
        phi = linalg.expm(pattern.A0, h)
        for k in range(n):
            cur = phi @ cur
            x0ref[pos + k + 1] = cur
        pos += n
    reference = x0ref @ pattern.C0.T

    outputs = np.empty((ns, N, l))
    if system.mode == "generator_only":
        for i in range(N):
            outputs[:, i, :] = states[:, lay.w_slice(i)] @ pattern.C0.T
    else:
        for i, agent in enumerate(system.agents):
            outputs[:, i, :] = states[:, lay.x_slice(i)] @ agent.C.T
    errors = outputs - reference[:, None, :]

    e2 = np.einsum("kil,kil->ki", errors, errors)
    err_energy = scipy.integrate.cumulative_trapezoid(e2, x=times, axis=0, initial=0.0)
    d_samples = system.disturbance.sample(times)
    d2 = np.einsum("kq,kq->k", d_samples, d_samples)
    dist_energy = scipy.integrate.cumulative_trapezoid(d2, x=times, initial=0.0)

    return Trajectory(
        times=times, states=states, outputs=outputs, reference=reference,
        errors=errors, err_energy=err_energy, dist_energy=dist_energy,
        layout=lay, mode=system.mode, intervals=tuple(plan),
        meta={"method": method,
              "backend": backend or kernel.BACKEND,
              "mu": system.mu})


def reference_trajectory(pattern: PatternModel, w0_all):
    """The pattern solution all outputs converge to, as a callable.

    ``w0_all`` is the list of generator initial states; the reference starts
    from their average. The returned function maps a scalar or array of
    times to outputs of shape ``(l,)`` or ``(m, l)``.
    """
    w_av0 = np.mean([linalg.as_vector(w) for w in w0_all], axis=0)

    def y0(t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t_arr.size, pattern.output_dim))
        for k, tk in enumerate(t_arr):
            out[k] = pattern.C0 @ (linalg.expm(pattern.A0, tk) @ w_av0)
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out

    return y0
