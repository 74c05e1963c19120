import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import PreconditionError, TooLargeError
from app.graph import build_hypercubic
from app.walk import (
    WalkState,
    apply_coin,
    apply_shift,
    apply_walk,
    bipartite_state,
    edge_components,
    edge_states,
    from_edge_components,
    require_dense,
    uniform_state,
    vertex_superposition,
    walk_matrix,
)


def _random_state(dimension: int, seed: int) -> WalkState:
    rng = np.random.default_rng(seed)
    amplitudes = rng.normal(size=dimension) + 1j * rng.normal(size=dimension)
    return WalkState(amplitudes / np.linalg.norm(amplitudes))


class TestWalkOperator:
    """Test the matrix-free flip-flop walk W = SC."""

    def test_dense_walk_is_orthogonal(self, k4):
        """The dense W is a real orthogonal matrix."""
        w = walk_matrix(k4)
        assert np.allclose(w @ w.T, np.eye(k4.dimension), atol=1e-12)

    def test_coin_is_involution(self, random16):
        """The Grover coin squares to the identity."""
        state = _random_state(random16.dimension, 1)
        twice = apply_coin(random16, apply_coin(random16, state))
        assert np.allclose(twice.amplitudes, state.amplitudes, atol=1e-12)

    def test_shift_is_involution(self, random16):
        """The flip-flop shift squares to the identity."""
        state = _random_state(random16.dimension, 2)
        twice = apply_shift(random16, apply_shift(random16, state))
        assert np.array_equal(twice.amplitudes, state.amplitudes)

    def test_uniform_state_is_fixed(self, random16):
        """The uniform edge state is a +1 eigenvector."""
        start = uniform_state(random16)
        assert np.allclose(apply_walk(random16, start).amplitudes, start.amplitudes, atol=1e-12)

    def test_bipartite_state_flips_sign(self, c4):
        """The signed bipartite state is a -1 eigenvector."""
        state = bipartite_state(c4)
        assert np.allclose(apply_walk(c4, state).amplitudes, -state.amplitudes, atol=1e-12)

    def test_bipartite_state_needs_bipartite_graph(self, k4):
        """K4 has no signed bipartite state."""
        with pytest.raises(PreconditionError):
            bipartite_state(k4)

    def test_walk_rejects_ancilla_state(self, k4):
        """W acts on the walk register only."""
        with pytest.raises(PreconditionError):
            apply_walk(k4, uniform_state(k4).with_ancilla())

    def test_matrix_matches_matrix_free(self, random16):
        """Dense and matrix-free W agree."""
        state = _random_state(random16.dimension, 3)
        dense = walk_matrix(random16) @ state.amplitudes
        assert np.allclose(dense, apply_walk(random16, state).amplitudes, atol=1e-12)


class TestStates:
    """Test distinguished states and the edge basis."""

    def test_vertex_superposition_unit(self, k4):
        """The vertex state is normalized and sits on its vertex."""
        state = vertex_superposition(k4, 2)
        assert state.norm() == pytest.approx(1.0)
        assert state.vertex_probabilities(k4.n_vertices)[2] == pytest.approx(1.0)

    def test_inner_product(self, random16):
        """<a|a> = 1 and <a|b> is the conjugate of <b|a>."""
        first = _random_state(random16.dimension, 5)
        second = _random_state(random16.dimension, 6)
        assert first.inner(first) == pytest.approx(1.0)
        assert first.inner(second) == pytest.approx(second.inner(first).conjugate())
        assert first.inner(second) == pytest.approx(np.vdot(first.amplitudes, second.amplitudes))

    def test_ancilla_embedding(self, k4):
        """Embedding fills the ancilla-0 block and is idempotent."""
        embedded = uniform_state(k4).with_ancilla()
        assert embedded.amplitudes.shape == (2 * k4.dimension,)
        assert np.allclose(embedded.block(1), 0.0)
        assert embedded.with_ancilla() is embedded

    def test_edge_states_orthonormal(self, k4):
        """The e+ and e- states form an orthonormal basis."""
        pairs = edge_states(k4)
        basis = np.column_stack([p.plus().amplitudes for p in pairs] + [p.minus().amplitudes for p in pairs])
        assert np.allclose(basis.conj().T @ basis, np.eye(k4.dimension), atol=1e-12)

    def test_edge_components_invert(self, random16):
        """Edge components rebuild the original state."""
        state = _random_state(random16.dimension, 4)
        plus, minus = edge_components(random16, state)
        rebuilt = from_edge_components(random16, plus, minus)
        assert np.allclose(rebuilt.amplitudes, state.amplitudes, atol=1e-12)

    def test_dump_csv(self, tmp_path, k3):
        """One CSV row per amplitude after the header."""
        path = tmp_path / "state.csv"
        uniform_state(k3).dump_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "index,re,im"
        assert len(lines) == k3.dimension + 1


class TestDenseCap:
    """Test the dense-size guard."""

    def test_cap_exceeded(self):
        """The error names the matrix-free fallback."""
        with pytest.raises(TooLargeError, match="matrix-free"):
            require_dense(100, "test", cap=99)

    def test_walk_matrix_respects_cap(self, k4):
        """walk_matrix refuses to build above the cap."""
        with pytest.raises(TooLargeError):
            walk_matrix(k4, cap=10)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_walk_preserves_norm(seed):
    """W is orthogonal, so every step keeps the state normalized."""
    g = build_hypercubic(3, 2)
    state = _random_state(g.dimension, seed)
    for _ in range(5):
        state = apply_walk(g, state)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
