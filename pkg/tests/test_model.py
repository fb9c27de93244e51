import numpy as np
import pytest

from poscon import refcase
from poscon.errors import DimensionMismatch, UnsupportedDimension
from poscon.model import (AgentModel, DisturbanceSignal, PatternModel,
                          ToleranceConfig, check_assumption1,
                          eigenvalues_small, is_metzler, is_nonnegative,
                          is_positive, validate_scenario)
from poscon.topology import Graph


class TestPredicates:
    def test_diagonal_is_metzler(self):
        assert is_metzler(np.diag([-5.0, 3.0, 0.0]))

    def test_reference_agent_b_is_metzler(self, agent_b):
        assert is_metzler(agent_b.A)

    def test_negative_offdiagonal_is_not(self):
        assert not is_metzler(np.array([[0.0, -0.5], [0.0, 0.0]]))

    def test_zero_matrix_nonnegative(self):
        assert is_nonnegative(np.zeros((2, 3)))

    def test_reference_disturbance_matrix(self, agent_a):
        assert is_nonnegative(agent_a.D)

    def test_negative_entry(self):
        assert not is_nonnegative(np.array([[1.0, -1.0]]))

    def test_positive_needs_one_positive_entry(self):
        assert not is_positive(np.zeros((2, 2)))
        assert is_positive(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestAgentModel:
    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            AgentModel(A=np.eye(2), B=np.ones((3, 1)), C=np.ones((1, 2)),
                       D=np.ones((2, 1)))

    def test_dims(self, agent_a):
        assert agent_a.state_dim == 3
        assert agent_a.input_dim == 1
        assert agent_a.output_dim == 1
        assert agent_a.disturbance_dim == 1


class TestEigenvaluesSmall:
    def test_matches_numpy_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            n = int(rng.integers(1, 5))
            A = rng.normal(size=(n, n)) * rng.choice([0.5, 1.0, 3.0])
            mine = eigenvalues_small(A)
            ref = np.sort_complex(np.linalg.eigvals(A))
            scale = 1.0 + np.abs(A).max()
            np.testing.assert_allclose(mine, ref, atol=1e-6 * scale)

    def test_complex_pairs(self):
        A = np.array([[0.0, -1.0], [1.0, 0.0]])
        eigs = eigenvalues_small(A)
        np.testing.assert_allclose(sorted(e.imag for e in eigs), [-1.0, 1.0],
                                   atol=1e-12)

    def test_two_complex_pairs_quartic(self):
        # block diagonal rotations: eigenvalues +-i and +-2i
        A = np.zeros((4, 4))
        A[0, 1], A[1, 0] = -1.0, 1.0
        A[2, 3], A[3, 2] = -2.0, 2.0
        eigs = eigenvalues_small(A)
        ref = np.sort_complex(np.array([1j, -1j, 2j, -2j]))
        np.testing.assert_allclose(eigs, ref, atol=1e-9)

    def test_repeated_real_roots(self):
        A = np.diag([2.0, 2.0, -1.0, -1.0])
        eigs = eigenvalues_small(A)
        np.testing.assert_allclose(sorted(e.real for e in eigs),
                                   [-1.0, -1.0, 2.0, 2.0], atol=1e-7)

    def test_too_large_raises(self):
        with pytest.raises(UnsupportedDimension):
            eigenvalues_small(np.eye(5))


class TestAssumption1:
    def test_reference_pattern_passes(self, ref_pattern):
        report = check_assumption1(ref_pattern)
        assert report.passed
        # eigenvalues are {0.01, 0}
        eig_check = [c for c in report.checks
                     if c.name == "eigenvalue_real_parts_nonnegative"][0]
        assert eig_check.passed

    def test_static_pattern_passes(self):
        assert check_assumption1(PatternModel(A0=[[0.0]], C0=[[1.0]])).passed

    def test_stable_mode_fails(self):
        report = check_assumption1(PatternModel(A0=[[-1.0]], C0=[[1.0]]))
        assert not report.passed

    def test_large_pattern_unsupported(self):
        p = PatternModel(A0=np.zeros((5, 5)), C0=np.ones((1, 5)))
        with pytest.raises(UnsupportedDimension):
            check_assumption1(p)


class TestValidateScenario:
    def test_reference_scenario_passes(self, ref_agents, ref_pattern,
                                       ref_graphs):
        report = validate_scenario(ref_agents, ref_pattern, ref_graphs)
        assert report.passed, report.failures

    def test_disconnected_graph_flagged(self, ref_agents, ref_pattern,
                                        ref_graphs):
        # dropping edge (3,4) splits the tree graph
        g2 = ref_graphs[1]
        pruned = Graph(n=8, edges=tuple(e for e in g2.edges if e != (3, 4)))
        report = validate_scenario(ref_agents, ref_pattern,
                                   (ref_graphs[0], pruned))
        assert not report.passed
        assert any(c.name == "connected" and not c.passed
                   for c in report.checks)

    def test_non_metzler_agent_flagged(self, ref_pattern, ref_graphs):
        bad = AgentModel(A=[[0.0, -1.0], [0.0, 0.0]], B=[[0.0], [1.0]],
                         C=[[0.0, 1.0]], D=[[1.0], [1.0]], label="bad")
        report = validate_scenario([bad], ref_pattern,
                                   (Graph(n=1),))
        assert any(c.name == "metzler" and not c.passed for c in report.checks)

    def test_order_independent(self, ref_agents, ref_pattern, ref_graphs):
        fwd = validate_scenario(ref_agents, ref_pattern, ref_graphs)
        rev = validate_scenario(list(reversed(ref_agents)), ref_pattern,
                                ref_graphs)
        assert {(c.location, c.name, c.passed) for c in fwd.checks} == \
            {(c.location, c.name, c.passed) for c in rev.checks}


class TestDisturbance:
    def test_zero(self):
        d = DisturbanceSignal.zero(2)
        assert d.is_zero
        np.testing.assert_array_equal(d.sample([0.0, 1.0]), np.zeros((2, 2)))

    def test_abs_sine_nonnegative_and_periodic(self):
        d = DisturbanceSignal.abs_sine([1.0], 0.01)
        t = np.linspace(0.0, 700.0, 2001)
        vals = d.sample(t)
        assert vals.min() >= 0.0
        np.testing.assert_allclose(vals[:, 0], np.abs(np.sin(0.01 * t)))

    def test_constant_rejects_negative(self):
        with pytest.raises(DimensionMismatch):
            DisturbanceSignal.constant([-1.0])

    def test_table_interpolates(self):
        d = DisturbanceSignal.table([0.0, 1.0, 2.0], [[0.0], [2.0], [2.0]])
        np.testing.assert_allclose(d.sample([0.5, 1.5, 5.0]).ravel(),
                                   [1.0, 2.0, 2.0])


class TestToleranceConfig:
    def test_defaults(self):
        tol = ToleranceConfig()
        assert tol.zero_tol == 1e-9
        assert tol.definiteness_margin == 1e-7
        assert tol.positivity_slack == 1e-8
        assert tol.regulator_residual_tol == 1e-8

    def test_rejects_nonpositive(self):
        with pytest.raises(DimensionMismatch):
            ToleranceConfig(zero_tol=0.0)
