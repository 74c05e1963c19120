import numpy as np
import pytest

from app.errors import PreconditionError
from app.operators import (
    oracle_array,
    search_matrix,
    search_operator,
    step_array,
    target_columns,
    target_probability,
)
from app.search import apply_circuit_step, apply_controlled_step, apply_oracle
from app.walk import WalkState, uniform_state, vertex_superposition


def _random_vector(dimension: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vector = rng.normal(size=dimension) + 1j * rng.normal(size=dimension)
    return vector / np.linalg.norm(vector)


class TestOracle:
    """Test the target reflections O and O_delta."""

    def test_oracle_negates_target(self, k4):
        """O flips the sign of a target vertex state."""
        target = vertex_superposition(k4, 1)
        flipped = apply_oracle(k4, target, [1])
        assert np.allclose(flipped.amplitudes, -target.amplitudes)

    def test_oracle_fixes_other_vertices(self, k4):
        """O leaves non-target vertex states alone."""
        other = vertex_superposition(k4, 2)
        assert np.allclose(apply_oracle(k4, other, [1]).amplitudes, other.amplitudes)

    def test_oracle_is_involution(self, random16):
        """Applying O twice is the identity."""
        vector = _random_vector(random16.dimension, 5)
        twice = oracle_array(oracle_array(vector, random16, [0, 3]), random16, [0, 3])
        assert np.allclose(twice, vector, atol=1e-12)

    def test_oracle_rejects_ancilla_state(self, k4):
        """The plain oracle refuses states that carry the ancilla."""
        with pytest.raises(PreconditionError):
            apply_oracle(k4, uniform_state(k4).with_ancilla(), [0])

    def test_controlled_step_rejects_plain_state(self, k4):
        """The controlled step needs the ancilla."""
        with pytest.raises(PreconditionError):
            apply_controlled_step(k4, uniform_state(k4), [0], 0.3)


class TestSearchOperators:
    """Test U = WO, U_delta and their dense and LinearOperator forms."""

    def test_search_matrix_orthogonal(self, k4):
        """Dense U_delta is real orthogonal."""
        u = search_matrix(k4, [0], 0.4)
        assert np.allclose(u @ u.T, np.eye(2 * k4.dimension), atol=1e-12)

    def test_circuit_matches_controlled_step(self, random16):
        """The gate-level circuit equals the direct U_delta."""
        state = WalkState(_random_vector(2 * random16.dimension, 6), has_ancilla=True)
        direct = apply_controlled_step(random16, state, [2, 9], 0.7)
        circuit = apply_circuit_step(random16, state, [2, 9], 0.7)
        assert np.allclose(direct.amplitudes, circuit.amplitudes, atol=1e-12)

    def test_linear_operator_matvec(self, k4):
        """The LinearOperator applies the same map as the dense matrix."""
        vector = _random_vector(2 * k4.dimension, 7)
        operator = search_operator(k4, [0], 0.2)
        assert np.allclose(operator.matvec(vector), search_matrix(k4, [0], 0.2) @ vector, atol=1e-12)

    def test_linear_operator_rmatvec_is_transpose(self, random16):
        """rmatvec applies the transpose of U."""
        vector = _random_vector(random16.dimension, 8)
        operator = search_operator(random16, [1])
        assert np.allclose(operator.rmatvec(vector), search_matrix(random16, [1]).T @ vector, atol=1e-12)

    def test_zero_delta_decouples_ancilla(self, k4):
        """delta = 0 keeps the |1> ancilla branch empty."""
        start = uniform_state(k4)
        plain = step_array(start.amplitudes, k4, [0], None)
        controlled = step_array(start.with_ancilla().amplitudes, k4, [0], 0.0)
        assert np.allclose(controlled[: k4.dimension], plain)
        assert np.allclose(controlled[k4.dimension :], 0.0)


class TestTargetProbability:
    """Test p_s for the uniform start."""

    def test_uniform_start_probability(self, random16):
        """p_s of the uniform start is M/N."""
        start = uniform_state(random16).amplitudes
        assert target_probability(start, random16, [0, 5], None) == pytest.approx(2 / 16)

    def test_uniform_start_with_ancilla(self, k4):
        """The ancilla start carries the cos^2(delta) factor."""
        start = uniform_state(k4).with_ancilla().amplitudes
        assert target_probability(start, k4, [0], 0.5) == pytest.approx(np.cos(0.5) ** 2 / 4)

    def test_target_columns_orthonormal(self, k4):
        """Target columns |psi_i,delta> are orthonormal."""
        columns = target_columns(k4, [0, 2], 0.3)
        assert np.allclose(columns.T @ columns, np.eye(2))
