import pytest

from app.errors import ConnectivityError, PreconditionError
from app.graph import build_complete, choose_targets
from app.hitting import (
    CHUNK_SIZE,
    exact_hitting_time,
    hitting_stats,
    mc_hitting_time,
    verify_hitting_bounds,
    verify_principal_norms,
)
from app.instances import complete_minus_matching
from app.models import HittingRow


class TestExactHittingTime:
    """Test the linear-solve average hitting time."""

    def test_complete_graph_single_target(self, k4):
        """K4 with one target gives 9/4."""
        assert exact_hitting_time(k4, [0]) == pytest.approx(2.25)

    def test_triangle(self, k3):
        """Each non-target vertex of K3 needs two steps on average."""
        assert exact_hitting_time(k3, [0]) == pytest.approx(4 / 3)

    @pytest.mark.parametrize("n,m", [(16, 1), (16, 4), (64, 4)])
    def test_complete_graph_closed_form(self, n, m):
        """(N - M)(N - 1) / (MN) on complete graphs."""
        expected = (n - m) * (n - 1) / (m * n)
        assert exact_hitting_time(build_complete(n), range(m)) == pytest.approx(expected, rel=1e-12)

    def test_disconnected_complement(self, c4):
        """Opposite targets on the 4-cycle split the rest of the graph."""
        with pytest.raises(ConnectivityError):
            exact_hitting_time(c4, [0, 2])

    @pytest.mark.parametrize("n", [8, 16])
    def test_removing_a_matching_raises_hitting_time(self, n):
        """K_N minus a perfect matching needs exactly 1/N more steps than K_N."""
        sparse = complete_minus_matching(n)
        full = build_complete(n)
        assert sparse.degree == n - 2
        assert exact_hitting_time(sparse, [0]) == pytest.approx((n * n - 2 * n + 2) / n, rel=1e-12)
        assert exact_hitting_time(full, [0]) < exact_hitting_time(sparse, [0])


class TestMonteCarlo:
    """Test the sampled hitting time."""

    def test_too_few_trials(self, k4):
        """Fewer than 1000 trials is rejected."""
        with pytest.raises(PreconditionError):
            mc_hitting_time(k4, [0], 999, seed=0)

    def test_disconnected_complement_fails_fast(self, c4):
        """Unreachable targets raise before any walk starts."""
        with pytest.raises(ConnectivityError):
            mc_hitting_time(c4, [0, 2], 1000, seed=0)

    def test_agrees_with_exact(self, k4):
        """The estimate lands within five standard errors of 9/4."""
        estimate, stderr = mc_hitting_time(k4, [0], 200_000, seed=1)
        assert abs(estimate - 2.25) < 5 * stderr

    def test_agrees_with_exact_on_cycle(self, c4):
        """The 4-cycle estimate matches the linear solve."""
        estimate, stderr = mc_hitting_time(c4, [0], 100_000, seed=3)
        assert abs(estimate - exact_hitting_time(c4, [0])) < 5 * stderr

    def test_seed_determinism(self, random16):
        """Same seed, same estimate; another seed, another estimate."""
        first = mc_hitting_time(random16, [0], 5000, seed=9)
        assert first == mc_hitting_time(random16, [0], 5000, seed=9)
        assert first != mc_hitting_time(random16, [0], 5000, seed=10)

    def test_independent_of_jobs(self, k4):
        """Chunk streams make the estimate independent of the worker count."""
        trials = 2 * CHUNK_SIZE + 1234
        serial = mc_hitting_time(k4, [0], trials, seed=4, jobs=1)
        parallel = mc_hitting_time(k4, [0], trials, seed=4, jobs=3)
        assert serial == parallel


class TestHittingStats:
    """Test the hitting-time row and the quantum-derived bounds."""

    def test_row_columns(self, k4):
        """The CSV row has one value per declared column."""
        stats = hitting_stats(k4, [0], trials=2000, seed=0)
        row = stats.to_row()
        assert isinstance(row, HittingRow)
        assert len(row.to_row()) == len(HittingRow.COLUMNS)
        assert stats.upper_bound == pytest.approx(1 / stats.alpha**2)

    def test_product_for_complete_graph(self):
        """h_T alpha^2 is of order one on K64 and no sampling happens without trials."""
        stats = hitting_stats(build_complete(64), [0])
        assert stats.h_mc is None
        assert 1.0 < stats.product < 4.0

    def test_l1_ratio_for_complete_graph(self):
        """The principal vector is uniform over N - M vertices."""
        stats = hitting_stats(build_complete(64), [0, 1])
        assert stats.l1_over_sqrt_n == pytest.approx((1 - 2 / 64) ** 0.5, abs=1e-10)

    def test_bounds_report(self):
        """The product band holds on K64."""
        report = verify_hitting_bounds(build_complete(64), [0], cross_check=False)
        assert report.passed, report.failures()
        assert report.get("product_band").passed

    def test_bounds_report_with_cross_check(self, random16):
        """Leaking alpha matches the dense U spectrum and sampling agrees with the solve."""
        report = verify_hitting_bounds(random16, choose_targets(random16, 1, 0), trials=20_000, seed=2)
        assert report.get("leaking_alpha_matches_dense").passed
        assert report.get("mc_agreement_sigmas").passed

    def test_principal_norms(self, k4, random16):
        """Non-target weight 1/2 and the l1 identity on K4 and a random graph."""
        assert verify_principal_norms(k4, [0]).passed
        report = verify_principal_norms(random16, choose_targets(random16, 1, 0))
        assert report.passed, report.failures()
