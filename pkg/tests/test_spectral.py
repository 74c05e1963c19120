import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import PoleError, PreconditionError, SignError, SingularDenominatorError, UnsupportedSideError
from app.graph import build_complete, build_hypercubic, choose_targets, relabel_coins
from app.operators import target_columns
from app.spectral import (
    b_matrix,
    build_lifted_basis,
    construct_search_eigenvector,
    cosine_similarity,
    count_real_multiplicities,
    dense_search_eigenpair,
    eig_adjacency,
    eigenphase_report,
    eigenvector_overlaps,
    lattice_gap,
    lattice_spectrum,
    lattice_sums,
    leaking_matrix,
    lift_eigenvector_U,
    lift_eigenvector_W,
    multiplicity_report,
    normalization_factor,
    smallest_eigenphase,
    start_overlap,
    target_coefficients,
    target_overlap,
    verify_invariant_subspace,
    verify_master_equation,
    verify_search_correspondence,
    verify_walk_correspondence,
    w_vector,
    walk_eigensystem,
)
from app.walk import apply_walk

K4_ALPHA = float(np.arccos(2.0 / 3.0))
K4_X = -1j * np.sqrt(3.0) / np.sqrt(5.0)


class TestAdjacencySpectrum:
    """Test the normalized adjacency spectrum and lattice closed forms."""

    def test_complete_graph_gap(self, k4):
        """K4 has spectrum {1, -1/3 x3} and g = 4/3."""
        spec = eig_adjacency(k4)
        assert spec.eigenvalues == pytest.approx([1.0, -1 / 3, -1 / 3, -1 / 3])
        assert spec.gap == pytest.approx(4 / 3)
        assert not spec.bipartite

    def test_bipartite_detected(self, c4):
        """The 4-cycle carries the -1 eigenvalue."""
        assert eig_adjacency(c4).bipartite

    def test_principal_vector_positive(self, random16):
        """The principal eigenvector is uniform and positive."""
        spec = eig_adjacency(random16)
        assert np.allclose(spec.eigenvectors[:, 0], 1 / 4)

    def test_lattice_closed_form(self):
        """The cosine formula reproduces the dense 5^3 lattice spectrum."""
        closed = np.sort([value for _, value in lattice_spectrum(5, 3)])
        dense = np.sort(eig_adjacency(build_hypercubic(5, 3)).eigenvalues)
        assert np.allclose(closed, dense, atol=1e-12)

    def test_lattice_gap_value(self):
        """g = 1 - cos(2 pi / 5) over D = 3."""
        assert lattice_gap(5, 3) == pytest.approx(0.230328, abs=1e-5)
        assert eig_adjacency(build_hypercubic(5, 3)).gap == pytest.approx(lattice_gap(5, 3), abs=1e-12)

    def test_lattice_sum_on_cycle(self):
        """Three nonzero momenta of the 4-cycle sum to 2.5."""
        assert lattice_sums(4, 1, 1) == pytest.approx(2.5)

    def test_lattice_sum_rejects_bad_power(self):
        """Only powers 1 and 2 are supported."""
        with pytest.raises(PreconditionError):
            lattice_sums(5, 2, 0)

    def test_lattice_sum_rejects_small_side(self):
        """Sides below 3 would merge neighbors."""
        with pytest.raises(UnsupportedSideError):
            lattice_spectrum(2, 2)


class TestWalkSpectrum:
    """Test the W eigenphases against the adjacency spectrum."""

    @pytest.mark.parametrize("name", ["k3", "k4", "c4", "random16"])
    def test_correspondence(self, name, request):
        """Non-real W eigenphases are +-arccos of the adjacency eigenvalues."""
        report = verify_walk_correspondence(request.getfixturevalue(name))
        assert report.passed, report.failures()

    def test_reports_reuse_eigensystem(self, random16):
        """A precomputed W eigensystem gives the same reports as a fresh one."""
        eigensystem = walk_eigensystem(random16)
        shared = verify_walk_correspondence(random16, spec=eig_adjacency(random16), eigensystem=eigensystem)
        assert shared.to_record() == verify_walk_correspondence(random16).to_record()
        counted = multiplicity_report(random16, eigenvalues=eigensystem[0])
        assert counted.to_record() == multiplicity_report(random16).to_record()

    def test_real_multiplicities_complete(self, k4):
        """K4 has +1 four times and -1 twice."""
        assert count_real_multiplicities(k4) == (4, 2)

    def test_real_multiplicities_bipartite(self, c4):
        """The 4-cycle has +1 and -1 twice each."""
        assert count_real_multiplicities(c4) == (2, 2)

    def test_lift_is_eigenvector(self, random16):
        """The edge-basis lift of an adjacency eigenvector is a unit W eigenvector."""
        spec = eig_adjacency(random16)
        lifted = lift_eigenvector_W(random16, spec.eigenvectors[:, 1], spec.phases[1])
        image = apply_walk(random16, lifted).amplitudes
        assert lifted.norm() == pytest.approx(1.0)
        assert np.allclose(image, np.exp(1j * spec.phases[1]) * lifted.amplitudes, atol=1e-9)

    def test_lift_rejects_real_phase(self, k4):
        """phi = 0 makes the lift denominator vanish."""
        with pytest.raises(SingularDenominatorError):
            lift_eigenvector_W(k4, np.ones(4), 0.0)

    def test_lift_rejects_non_eigenvector(self, k4):
        """The input must be an adjacency eigenvector."""
        spec = eig_adjacency(k4)
        with pytest.raises(PreconditionError):
            lift_eigenvector_W(k4, np.array([1.0, 0.0, 0.0, 0.0]), spec.phases[1])


class TestSmallestEigenphase:
    """Test alpha_delta from the dense, bisection and leaking-matrix paths."""

    def test_leaking_principal_value(self, k4):
        """Ã_T on K4 with one target has top eigenvalue 2/3 and a positive eigenvector."""
        leaking = leaking_matrix(k4, [0])
        assert leaking.principal_value == pytest.approx(2 / 3)
        assert leaking.alpha == pytest.approx(K4_ALPHA)
        assert np.all(leaking.principal_vector > 0)

    @pytest.mark.parametrize("method", ["dense", "bisection", "leaking", "auto"])
    def test_methods_agree_on_complete_graph(self, k4, method):
        """Every method returns arccos(2/3) on K4."""
        assert smallest_eigenphase(k4, [0], 0.0, method=method) == pytest.approx(K4_ALPHA, abs=1e-10)

    def test_methods_agree_with_control(self, random16):
        """Bisection and the dense U_delta spectrum agree at delta = 0.4."""
        targets = choose_targets(random16, 2, 0)
        dense = smallest_eigenphase(random16, targets, 0.4, method="dense")
        bisected = smallest_eigenphase(random16, targets, 0.4, method="auto")
        assert bisected == pytest.approx(dense, abs=1e-8)

    def test_decreases_with_delta(self, random16):
        """alpha_delta falls strictly as delta rises from 0."""
        targets = choose_targets(random16, 1, 0)
        phases = [smallest_eigenphase(random16, targets, delta, method="dense") for delta in (0.0, 0.3, 0.6, 0.9, 1.2)]
        assert np.all(np.diff(phases) < 0.0)

    def test_eigenphase_report(self, random16):
        """Bisection, dense and leaking paths agree on a random graph."""
        report = eigenphase_report(random16, choose_targets(random16, 1, 0))
        assert report.passed, report.failures()

    def test_leaking_needs_zero_delta(self, k4):
        """The leaking shortcut only exists without the ancilla rotation."""
        with pytest.raises(PreconditionError):
            smallest_eigenphase(k4, [0], 0.3, method="leaking")

    def test_unknown_method(self, k4):
        """Unknown method names are rejected."""
        with pytest.raises(PreconditionError):
            smallest_eigenphase(k4, [0], method="newton")

    def test_complete_graph_closed_form(self):
        """alpha = arccos(1 - M/(N-1)) on K64 with four targets."""
        g = build_complete(64)
        alpha = smallest_eigenphase(g, [0, 1, 2, 3], method="bisection")
        assert alpha == pytest.approx(np.arccos(1 - 4 / 63), abs=1e-10)

    def test_b_matrix_singular_at_alpha(self, k4):
        """B(alpha) vanishes at the search eigenphase."""
        spec = eig_adjacency(k4)
        assert b_matrix(spec, [0], K4_ALPHA) == pytest.approx(np.zeros((1, 1)), abs=1e-12)

    def test_b_matrix_pole(self, k4):
        """alpha on a walk eigenphase is a cotangent pole."""
        spec = eig_adjacency(k4)
        with pytest.raises(PoleError):
            b_matrix(spec, [0], spec.phases[1])


class TestEigenvectors:
    """Test the search eigenvector, its coefficients and overlaps."""

    def test_coefficients_complete_graph(self, k4):
        """x = -i sqrt(3/5) on K4 and the normalization is sqrt 2."""
        spec = eig_adjacency(k4)
        x = target_coefficients(spec, [0], K4_ALPHA)
        assert x[0] == pytest.approx(K4_X, abs=1e-10)
        assert normalization_factor(spec, [0], K4_ALPHA, 0.0, x) == pytest.approx(np.sqrt(2.0))

    def test_overlaps_complete_graph(self, k4):
        """D_s = 3/4 and ||P w_t||^2 = 3/5 on K4."""
        spec = eig_adjacency(k4)
        x = target_coefficients(spec, [0], K4_ALPHA)
        assert start_overlap(spec, [0], K4_ALPHA, 0.0, x) == pytest.approx(0.75)
        assert target_overlap(spec, [0], K4_ALPHA, 0.0, x) == pytest.approx(0.6)

    def test_dense_pair_complete_graph(self, k4):
        """The dense eigenpair is phase-fixed to a negative imaginary coefficient sum."""
        pair = dense_search_eigenpair(k4, [0])
        assert pair.phase == pytest.approx(K4_ALPHA)
        assert pair.residual(k4) < 1e-10
        assert pair.coefficients.sum().imag < 0
        assert abs(pair.coefficients.sum().real) < 1e-10
        assert eigenvector_overlaps(k4, pair) == pytest.approx((0.75, 0.6))

    def test_lifted_from_leaking_walk(self, k4):
        """Lifting the leaking principal vector gives the U eigenvector with x = -i sqrt(3/5)."""
        leaking = leaking_matrix(k4, [0])
        pair = lift_eigenvector_U(k4, [0], leaking.principal_vector, leaking.alpha, leaking)
        assert pair.vector.norm() == pytest.approx(1.0)
        assert pair.residual(k4) < 1e-10
        assert pair.coefficients[0] == pytest.approx(K4_X)

    def test_lift_rejects_negative_principal_vector(self, k4):
        """The principal vector must be oriented positive."""
        leaking = leaking_matrix(k4, [0])
        with pytest.raises(SignError):
            lift_eigenvector_U(k4, [0], -leaking.principal_vector, leaking.alpha, leaking)

    @pytest.mark.parametrize("delta", [None, 0.4])
    def test_w_vector_overlaps_match_b_matrix(self, random16, delta):
        """<w_j,delta|psi_i,delta> reproduces B_delta(alpha) entry by entry."""
        targets = choose_targets(random16, 2, 0)
        spec = eig_adjacency(random16)
        basis = build_lifted_basis(random16, spec)
        alpha = spec.first_phase / 2.0
        psi = target_columns(random16, targets, delta)
        grid = np.array(
            [[np.vdot(w_vector(basis, t, alpha, delta).amplitudes, psi[:, i]) for t in targets] for i in range(len(targets))]
        )
        expected = b_matrix(spec, targets, alpha, 0.0 if delta is None else delta)
        assert np.max(np.abs(grid - expected)) < 1e-10

    def test_constructed_eigenvector(self, random16):
        """The basis construction matches the dense U_delta eigenvector up to phase."""
        targets = choose_targets(random16, 2, 1)
        spec = eig_adjacency(random16)
        alpha = smallest_eigenphase(random16, targets, 0.3, spec=spec)
        x = target_coefficients(spec, targets, alpha, 0.3)
        vector = construct_search_eigenvector(build_lifted_basis(random16, spec), targets, alpha, 0.3, x)
        dense = dense_search_eigenpair(random16, targets, 0.3)
        assert vector.norm() == pytest.approx(1.0, abs=1e-8)
        assert cosine_similarity(vector.amplitudes, dense.vector.amplitudes) == pytest.approx(1.0, abs=1e-8)


class TestReports:
    """Test the report-producing checks on small instances."""

    def test_search_correspondence(self, random16):
        """Non-real U eigenphases are +-arccos of the leaking spectrum."""
        report = verify_search_correspondence(random16, choose_targets(random16, 2, 0))
        assert report.passed, report.failures()

    @pytest.mark.parametrize("delta", [None, 0.3])
    def test_invariant_subspace(self, k4, delta):
        """U and U_delta keep the search subspace of K4."""
        report = verify_invariant_subspace(k4, [0], delta)
        assert report.passed, report.failures()

    def test_invariant_subspace_bipartite(self, c4):
        """The bipartite subspace has dimension 2N - 2 plus one trap per target."""
        report = verify_invariant_subspace(c4, [0], 0.4)
        assert report.get("dimension").measured == 2 * 4 - 2 + 1
        assert report.passed, report.failures()

    @pytest.mark.parametrize("delta", [0.0, 0.3])
    def test_master_equation(self, random16, delta):
        """The per-target and summed identities hold at the computed alpha."""
        report = verify_master_equation(random16, choose_targets(random16, 2, 3), delta)
        assert report.passed, report.failures()


@settings(max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_coin_relabeling_keeps_spectra(seed):
    """Permuting the coins at each vertex conjugates W and U by a permutation."""
    g = build_hypercubic(3, 2)
    relabeled = relabel_coins(g, seed)
    original, _ = walk_eigensystem(g)
    permuted, _ = walk_eigensystem(relabeled)
    assert np.allclose(np.sort(original.real), np.sort(permuted.real), atol=1e-8)
    assert np.allclose(np.sort(np.abs(original.imag)), np.sort(np.abs(permuted.imag)), atol=1e-8)
    alpha = smallest_eigenphase(g, [0], 0.0, method="dense")
    assert smallest_eigenphase(relabeled, [0], 0.0, method="dense") == pytest.approx(alpha, abs=1e-9)
