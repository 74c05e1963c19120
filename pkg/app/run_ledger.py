from typing import Any, Dict, List, Optional
from sqlmodel import select, col
import logging

from app.database import get_session
from app.models import SearchRecord, SearchSummary, VerificationRecord, VerificationReport

logger = logging.getLogger(__name__)


class RunLedgerService:
    """Persistence of search summaries and verification checks."""

    @staticmethod
    def record_search(summary: SearchSummary, graph_label: str, config: Optional[Dict[str, Any]] = None) -> SearchRecord:
        """Store one search summary and return the saved row."""
        record = SearchRecord(
            graph_label=graph_label,
            n_vertices=summary.n_vertices,
            degree=summary.degree,
            n_targets=summary.n_targets,
            gap=summary.gap,
            delta=summary.delta,
            alpha=summary.alpha,
            steps=summary.steps,
            p_success=summary.p_success,
            d_s=summary.d_s,
            pwt2=summary.pwt2,
            config=config or {},
        )
        with get_session() as session:
            session.add(record)
            session.commit()
            session.refresh(record)
        logger.info(f"Recorded search run {record.id} on {graph_label}")
        return record

    @staticmethod
    def record_report(report: VerificationReport) -> List[VerificationRecord]:
        """Store every check of a report, one row each."""
        records = [
            VerificationRecord(
                suite=report.suite,
                instance=report.instance,
                check_name=check.check_name,
                passed=check.passed,
                residual=check.residual,
            )
            for check in report.checks
        ]
        with get_session() as session:
            session.add_all(records)
            session.commit()
            for record in records:
                session.refresh(record)
        return records

    @staticmethod
    def list_searches(graph_label: Optional[str] = None, limit: int = 50) -> List[SearchRecord]:
        """Most recent search runs, optionally for one graph."""
        with get_session() as session:
            stmt = select(SearchRecord)
            if graph_label is not None:
                stmt = stmt.where(SearchRecord.graph_label == graph_label)
            stmt = stmt.order_by(col(SearchRecord.id).desc()).limit(limit)
            return list(session.exec(stmt))

    @staticmethod
    def list_checks(suite: Optional[str] = None, failed_only: bool = False) -> List[VerificationRecord]:
        with get_session() as session:
            stmt = select(VerificationRecord)
            if suite is not None:
                stmt = stmt.where(VerificationRecord.suite == suite)
            if failed_only:
                stmt = stmt.where(col(VerificationRecord.passed).is_(False))
            return list(session.exec(stmt.order_by(col(VerificationRecord.id))))
