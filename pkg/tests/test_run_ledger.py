import pytest

from app.database import reset_db
from app.models import CheckResult, SearchSummary, VerificationReport
from app.run_ledger import RunLedgerService


@pytest.fixture()
def fresh_db():
    """Provide a fresh database for each test."""
    reset_db()
    yield
    reset_db()


def _summary(n: int) -> SearchSummary:
    return SearchSummary(
        n_vertices=n,
        degree=n - 1,
        n_targets=1,
        gap=n / (n - 1),
        delta=0.0,
        alpha=0.5,
        steps=3,
        p_success=0.9,
        d_s=0.75,
        pwt2=0.6,
    )


@pytest.mark.sqlmodel
class TestRunLedgerService:
    """Test the RunLedgerService class."""

    def test_record_search(self, fresh_db):
        """Stored runs get an id and keep their config."""
        record = RunLedgerService.record_search(_summary(4), "complete(4)", {"seed": 3})
        assert record.id is not None
        assert record.config == {"seed": 3}
        assert record.p_success == 0.9

    def test_list_searches_by_graph(self, fresh_db):
        """Filtering by label and newest-first order."""
        RunLedgerService.record_search(_summary(4), "complete(4)")
        RunLedgerService.record_search(_summary(8), "complete(8)")
        RunLedgerService.record_search(_summary(4), "complete(4)")

        runs = RunLedgerService.list_searches("complete(4)")
        assert len(runs) == 2
        assert runs[0].id > runs[1].id
        assert len(RunLedgerService.list_searches(limit=1)) == 1

    def test_record_report(self, fresh_db):
        """One row per check, failures queryable."""
        report = VerificationReport(suite="walk-spectrum", instance="complete(4)")
        report.add(CheckResult.within("phase_correspondence", 0.0, 1e-8))
        report.add(CheckResult.within("overlap_projectors", 1.0, 1e-8))

        rows = RunLedgerService.record_report(report)
        assert len(rows) == 2
        assert len(RunLedgerService.list_checks("walk-spectrum")) == 2
        failed = RunLedgerService.list_checks(failed_only=True)
        assert [row.check_name for row in failed] == ["overlap_projectors"]

    def test_empty_ledger(self, fresh_db):
        """A fresh database has no runs and no checks."""
        assert RunLedgerService.list_searches() == []
        assert RunLedgerService.list_checks() == []
