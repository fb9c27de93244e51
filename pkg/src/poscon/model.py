"""Agent, pattern, and disturbance models plus positivity predicates.

A positive agent has a Metzler drift matrix and nonnegative input, output,
and disturbance matrices; the consensus pattern is an autonomous Metzler
system whose eigenvalues all have nonnegative real part. Validation here is
deliberately non-throwing: model objects can be constructed freely and the
checkers report every violation with its location, which is what the CLI
``check`` command prints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, topology
from .errors import DimensionMismatch, UnsupportedDimension


@dataclass(frozen=True)
class ToleranceConfig:
    """Global numerical tolerances, threaded through every comparison."""

    zero_tol: float = 1e-9
    definiteness_margin: float = 1e-7
    positivity_slack: float = 1e-8
    regulator_residual_tol: float = 1e-8

    def __post_init__(self):
        for name in ("zero_tol", "definiteness_margin", "positivity_slack",
                     "regulator_residual_tol"):
            if getattr(self, name) <= 0:
                raise DimensionMismatch(f"{name} must be strictly positive")


DEFAULT_TOL = ToleranceConfig()


def is_metzler(A, tol: float = DEFAULT_TOL.zero_tol) -> bool:
    """True iff every off-diagonal entry of square ``A`` is >= -tol."""
    A = linalg.as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    off = A - np.diag(np.diag(A))
    return bool(off.min(initial=0.0) >= -tol)


def is_nonnegative(M, tol: float = DEFAULT_TOL.zero_tol) -> bool:
    """True iff every entry of ``M`` is >= -tol."""
    M = np.asarray(M, dtype=float)
    return bool(M.size == 0 or M.min() >= -tol)


def is_positive(M, tol: float = DEFAULT_TOL.zero_tol) -> bool:
    """Entrywise nonnegative with at least one entry strictly above ``tol``."""
    M = np.asarray(M, dtype=float)
    return bool(M.size and M.min() >= -tol and M.max() > tol)


@dataclass(frozen=True)
class AgentModel:
    """One heterogeneous agent ``x' = A x + B u + D d``, ``y = C x``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    label: str = ""

    def __post_init__(self):
        A = linalg.as_matrix(self.A, "A")
        B = linalg.as_matrix(self.B, "B")
        C = linalg.as_matrix(self.C, "C")
        D = linalg.as_matrix(self.D, "D")
        n = A.shape[0]
        if A.shape[1] != n:
            raise DimensionMismatch(f"agent {self.label}: A must be square")
        if B.shape[0] != n or C.shape[1] != n or D.shape[0] != n:
            raise DimensionMismatch(
                f"agent {self.label}: B/C/D incompatible with state dim {n}"
            )
        for name, m in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, m)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]

    @property
    def output_dim(self) -> int:
        return self.C.shape[0]

    @property
    def disturbance_dim(self) -> int:
        return self.D.shape[1]


@dataclass(frozen=True)
class PatternModel:
    """Consensus pattern exosystem ``x0' = A0 x0``, ``y0 = C0 x0``."""

    A0: np.ndarray
    C0: np.ndarray

    def __post_init__(self):
        A0 = linalg.as_matrix(self.A0, "A0")
        C0 = linalg.as_matrix(self.C0, "C0")
        if A0.shape[0] != A0.shape[1]:
            raise DimensionMismatch("A0 must be square")
        if C0.shape[1] != A0.shape[0]:
            raise DimensionMismatch("C0 columns must match A0 dimension")
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "C0", C0)

    @property
    def dim(self) -> int:
        return self.A0.shape[0]

    @property
    def output_dim(self) -> int:
        return self.C0.shape[0]


@dataclass(frozen=True)
class DisturbanceSignal:
    """Time signal ``d(t) >= 0`` feeding every agent's disturbance channel.

    ``kind`` is one of ``zero``, ``constant``, ``abs_sine``, ``table``:

    - ``zero``: identically zero.
    - ``constant``: a fixed nonnegative vector.
    - ``abs_sine``: ``amplitude * |sin(frequency * t)|`` per component.
    - ``table``: linear interpolation of nonnegative samples, held constant
      beyond the last breakpoint.
    """

    kind: str
    dim: int
    amplitude: np.ndarray = None
    frequency: float = 0.0
    times: np.ndarray = None
    values: np.ndarray = None

    @staticmethod
    def zero(dim: int = 1) -> "DisturbanceSignal":
        return DisturbanceSignal(kind="zero", dim=dim)

    @staticmethod
    def abs_sine(amplitude, frequency: float, dim=None) -> "DisturbanceSignal":
        amp = linalg.as_vector(amplitude, "amplitude")
        if not is_nonnegative(amp, 0.0):
            raise DimensionMismatch("abs_sine amplitude must be nonnegative")
        return DisturbanceSignal(kind="abs_sine", dim=dim or amp.size,
                                 amplitude=amp, frequency=float(frequency))

    @staticmethod
    def constant(value) -> "DisturbanceSignal":
        v = linalg.as_vector(value, "value")
        if not is_nonnegative(v, 0.0):
            raise DimensionMismatch("constant disturbance must be nonnegative")
        return DisturbanceSignal(kind="constant", dim=v.size, amplitude=v)

    @staticmethod
    def table(times, values) -> "DisturbanceSignal":
        t = linalg.as_vector(times, "times")
        v = np.atleast_2d(np.asarray(values, dtype=float))
        if v.shape[0] != t.size:
            v = v.T
        if v.shape[0] != t.size:
            raise DimensionMismatch("table needs one value row per breakpoint")
        if np.any(np.diff(t) <= 0):
            raise DimensionMismatch("table times must be strictly increasing")
        if not is_nonnegative(v, 0.0):
            raise DimensionMismatch("table values must be nonnegative")
        return DisturbanceSignal(kind="table", dim=v.shape[1], times=t, values=v)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def sample(self, t) -> np.ndarray:
        """Evaluate at times ``t`` (array of shape (m,)), returning (m, dim)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "zero":
            return np.zeros((t.size, self.dim))
        if self.kind == "constant":
            return np.tile(self.amplitude, (t.size, 1))
        if self.kind == "abs_sine":
            base = np.abs(np.sin(self.frequency * t))
            return np.outer(base, self.amplitude)
        if self.kind == "table":
            out = np.empty((t.size, self.dim))
            for j in range(self.dim):
                out[:, j] = np.interp(t, self.times, self.values[:, j])
            return out
        raise DimensionMismatch(f"unknown disturbance kind {self.kind!r}")


# ---------------------------------------------------------------------------
# Eigenvalues of small nonsymmetric matrices (n <= 4).
#
# The pattern matrices in scope are low-order, so the real parts needed by
# the pattern-eigenvalue check are obtained from the characteristic
# polynomial: Faddeev-LeVerrier coefficients, a bisection bracket for the
# guaranteed real root of odd-degree factors, and closed-form quadratics.
# ---------------------------------------------------------------------------


def _char_poly(A: np.ndarray) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first."""
    n = A.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def _bisect_real_root(coeffs: np.ndarray, lo=None) -> float:
    """One real root of an odd-degree monic polynomial by bisection.

    The Cauchy bound guarantees a sign change over ``[-R, R]``; callers may
    tighten the lower end (the quartic resolvent needs the root in [0, R]).
    """
    p = np.poly1d(coeffs)
    R = 1.0 + np.abs(coeffs[1:]).max(initial=0.0)
    lo, hi = (-R if lo is None else lo), R
    flo = p(lo)
    if flo == 0.0:
        return lo
    if p(hi) == 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = p(mid)
        if fm == 0.0 or hi - lo < 1e-15 * max(1.0, R):
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _quadratic_roots(b: float, c: float):
    """Roots of ``x^2 + b x + c`` as a complex pair, numerically stable."""
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        s = math.sqrt(disc)
        r1 = (-b - s) / 2.0 if b >= 0 else (-b + s) / 2.0
        r2 = c / r1 if r1 != 0.0 else (-b - r1)
        return complex(r1), complex(r2)
    s = math.sqrt(-disc)
    return complex(-b / 2.0, s / 2.0), complex(-b / 2.0, -s / 2.0)


def _poly_roots(coeffs: np.ndarray):
    """All complex roots of a monic polynomial of degree <= 4."""
    deg = len(coeffs) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [complex(-coeffs[1])]
    if deg == 2:
        return list(_quadratic_roots(coeffs[1], coeffs[2]))
    if deg == 3:
        r = _bisect_real_root(coeffs)
        r = _polish_root(coeffs, r)
        # deflate (x - r)
        b = coeffs[1] + r
        c = coeffs[2] + r * b
        return [complex(r)] + list(_quadratic_roots(b, c))
    if deg == 4:
        return _quartic_roots(coeffs)
    raise UnsupportedDimension(f"polynomial degree {deg} > 4")


def _polish_root(coeffs: np.ndarray, r: float) -> float:
    p = np.poly1d(coeffs)
    dp = p.deriv()
    for _ in range(4):
        d = dp(r)
        if d == 0.0:
            break
        r = r - p(r) / d
    return r


def _quartic_roots(coeffs: np.ndarray):
    """Ferrari resolution of a monic quartic into two quadratics."""
    _, a, b, c, d = (float(v) for v in coeffs)
    # depressed form y^4 + p y^2 + q y + r with x = y - a/4
    sh = a / 4.0
    p = b - 3.0 * a * a / 8.0
    q = c - a * b / 2.0 + a ** 3 / 8.0
    r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a ** 4 / 256.0
    if abs(q) < 1e-13 * (1.0 + abs(p) + abs(r)):
        # biquadratic: solve z^2 + p z + r = 0, then y = +-sqrt(z)
        roots = []
        for z in _quadratic_roots(p, r):
            s = np.sqrt(complex(z))
            roots.extend([s - sh, -s - sh])
        return roots
    # resolvent cubic y^3 + 2p y^2 + (p^2 - 4r) y - q^2 has a root y = alpha^2 > 0
    res = np.array([1.0, 2.0 * p, p * p - 4.0 * r, -q * q])
    y = _polish_root(res, _bisect_real_root(res, lo=0.0))
    y = max(y, 0.0)
    alpha = math.sqrt(y)
    beta = 0.5 * (p + y - q / alpha)
    gamma = 0.5 * (p + y + q / alpha)
    # (y^2 + alpha y + beta)(y^2 - alpha y + gamma)
    roots = list(_quadratic_roots(alpha, beta)) + list(_quadratic_roots(-alpha, gamma))
    return [z - sh for z in roots]


def eigenvalues_small(A) -> np.ndarray:
    """Eigenvalues of a real square matrix of dimension <= 4.

    Uses characteristic polynomial factorization instead of a general
    nonsymmetric eigensolver; intended for the low-order pattern matrices.

    Raises
    ------
    UnsupportedDimension
        For matrices larger than 4x4.
    """
    A = linalg.as_matrix(A, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionMismatch("A must be square")
    if n > 4:
        raise UnsupportedDimension(f"eigenvalues_small supports n <= 4, got {n}")
    roots = _poly_roots(_char_poly(A))
    return np.sort_complex(np.array(roots, dtype=complex))


# ---------------------------------------------------------------------------
# Assumption checks and scenario validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    """Outcome of a single validation predicate."""

    location: str
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_rows(self):
        return [(c.location, c.name, "pass" if c.passed else "FAIL", c.detail)
                for c in self.checks]


def check_assumption1(pattern: PatternModel,
                      tol: ToleranceConfig = DEFAULT_TOL) -> ValidationReport:
    """Pattern admissibility: A0 Metzler and no eigenvalue real part < -tol."""
    checks = []
    metzler = is_metzler(pattern.A0, tol.zero_tol)
    checks.append(Check("pattern.A0", "metzler", metzler))
    eigs = eigenvalues_small(pattern.A0)
    worst = float(eigs.real.min()) if eigs.size else 0.0
    checks.append(Check(
        "pattern.A0", "eigenvalue_real_parts_nonnegative",
        worst >= -tol.zero_tol,
        f"eigenvalues {np.round(eigs, 6)}"))
    checks.append(Check("pattern.C0", "nonnegative",
                        is_nonnegative(pattern.C0, tol.zero_tol)))
    return ValidationReport(tuple(checks))


def validate_scenario(agents, pattern: PatternModel, graphs,
                      tol: ToleranceConfig = DEFAULT_TOL) -> ValidationReport:
    """Aggregate validation of agents, pattern, and graph family.

    Covers per-agent Metzler and nonnegativity structure, the pattern
    admissibility check, connectivity of every graph in the family, and
    shared output/disturbance dimensions. Deterministic and independent of
    agent ordering: every violation is reported with its location.
    """
    checks = []
    l = pattern.output_dim
    q = agents[0].disturbance_dim if agents else 0
    for agent in agents:
        loc = f"agent[{agent.label}]"
        checks.append(Check(loc + ".A", "metzler", is_metzler(agent.A, tol.zero_tol)))
        for nm in ("B", "C", "D"):
            checks.append(Check(loc + "." + nm, "nonnegative",
                                is_nonnegative(getattr(agent, nm), tol.zero_tol)))
        checks.append(Check(loc + ".C", "output_dim_matches_pattern",
                            agent.output_dim == l,
                            f"rows {agent.output_dim} vs pattern {l}"))
        checks.append(Check(loc + ".D", "shared_disturbance_dim",
                            agent.disturbance_dim == q,
                            f"cols {agent.disturbance_dim} vs {q}"))
    for c in check_assumption1(pattern, tol).checks:
        checks.append(c)
    for k, g in enumerate(graphs):
        loc = f"graph[{k + 1}]"
        connected = topology.is_connected(g)
        checks.append(Check(loc, "connected", connected))
        if connected and g.n >= 2:
            checks.append(Check(loc, "lambda2_positive",
                                topology.lambda2(g) > tol.zero_tol))
        if agents and g.n != len(agents):
            checks.append(Check(loc, "node_count_matches_agents", False,
                                f"{g.n} nodes vs {len(agents)} agents"))
    return ValidationReport(tuple(checks))
