import numpy as np
import pytest

from app.errors import PreconditionError
from app.verification import ALIASES, SUITES, loglog_slope, resolve_suite, run_suite


class TestSuiteRegistry:
    """Test suite name resolution."""

    def test_aliases_resolve(self):
        """Every alias maps to a registered suite."""
        for alias, canonical in ALIASES.items():
            assert resolve_suite(alias) == canonical
            assert canonical in SUITES

    def test_unknown_suite(self):
        """The error lists the known suites."""
        with pytest.raises(PreconditionError, match="known suites"):
            resolve_suite("nosuchsuite")

    def test_loglog_slope(self):
        """A pure power law gives its exponent."""
        x = np.array([2.0, 4.0, 8.0, 16.0])
        assert loglog_slope(x, 3.0 * x**1.5) == pytest.approx(1.5)


class TestFastSuites:
    """Suites cheap enough for every run."""

    def test_lattice_sums(self):
        """The lattice-sum suite passes through its alias."""
        (report,) = run_suite("appendixE")
        assert report.passed, report.failures()
        assert report.get("first_power_cycle").passed

    def test_multiplicities(self):
        """Eigenphase multiplicities match on every instance."""
        reports = run_suite("multiplicities")
        assert all(report.passed for report in reports)


@pytest.mark.slow
class TestScalingSuites:
    """Scaling of alpha, the overlaps and the search success on growing instances."""

    def test_eigenphase_scaling(self):
        """alpha falls like (N/g)^(-1/2) on complete and random cubic graphs."""
        reports = {report.instance: report for report in run_suite("eigenphase-scaling")}
        complete = reports["complete graphs M=1"]
        assert complete.get("slope_vs_N").passed
        assert complete.get("slope_vs_N").measured == pytest.approx(-0.5, abs=0.1)
        for report in reports.values():
            assert report.get("slope_vs_N_over_g").passed
            assert report.passed, report.failures()

    def test_overlap_bounds(self):
        """The start bound and the target floor hold under the delta policy."""
        reports = run_suite("overlap-bounds")
        assert reports
        for report in reports:
            assert report.passed, (report.instance, report.failures())

    def test_search_success(self):
        """p_s(Q) >= 0.2 on 8^3 and Q grows like sqrt(N) and shrinks like 1/sqrt(M)."""
        success, scaling = run_suite("search-success")
        assert success.get("success_at_q").passed
        assert success.get("steps_over_sqrt_n").passed
        assert scaling.get("steps_slope_vs_N_D3").measured == pytest.approx(0.5, abs=0.1)
        assert scaling.get("steps_slope_vs_M_D5").passed


@pytest.mark.slow
@pytest.mark.parametrize("suite", sorted(SUITES))
def test_suite_passes(suite):
    """Every built-in suite passes on its instance set."""
    reports = run_suite(suite)
    failed = [(report.instance, [c.check_name for c in report.failures()]) for report in reports if not report.passed]
    assert not failed
