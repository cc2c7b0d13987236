"""Optional archive of tuning results and scenario runs."""

import logging
from typing import Any

from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session

from efrit_mpc.core.scenario import Report
from efrit_mpc.data.base import get_session, init_archive
from efrit_mpc.data.models import ScenarioRunRecord, TuningRecord

logger = logging.getLogger(__name__)


class RunArchive:
    """Stores scenario reports and lists them back, newest first."""

    def __init__(self, db_url: str | None = None) -> None:
        """Initialize the archive.

        Args:
            db_url: Database URL. If None, uses `archive.path` from config.
        """
        init_archive(db_url)
        self.session: Session = get_session()

    def __enter__(self) -> "RunArchive":
        """Enter the context manager."""
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        """Close the session."""
        self.session.close()

    def store(self, report: Report) -> int:
        """Archive a report and its tuning result.

        Args:
            report: Finished scenario report

        Returns:
            Id of the new scenario run row
        """
        tuning = TuningRecord(
            scenario=report.name,
            kp=report.theta.kp,
            ki=report.theta.ki,
            kd=report.theta.kd,
            tc=report.theta.tc,
            lambda_=report.lambda_,
            cost=report.j_star,
            iterations=report.tuning.iterations if report.tuning else 0,
            stalled=report.tuning.stalled if report.tuning else False,
            seed=report.seed,
        )
        run = ScenarioRunRecord(
            scenario=report.name,
            tuning=tuning,
            rmse_proposed=report.metrics.get("rmse_proposed"),
            rmse_conventional=report.metrics.get("rmse_conventional"),
            sd_proposed=report.metrics.get("sd_proposed"),
            sd_conventional=report.metrics.get("sd_conventional"),
            status=report.status,
            output_dir=str(report.output_dir),
        )
        try:
            self.session.add_all([tuning, run])
            self.session.commit()
        except SQLAlchemyError:
            self.session.rollback()
            raise
        logger.debug(f"Archived run {run.id} of '{report.name}'")
        return int(run.id)

    def history(
        self, scenario: str | None = None, limit: int = 20
    ) -> list[dict[str, Any]]:
        """Archived runs, newest first.

        Args:
            scenario: Restrict to one scenario name
            limit: Maximum number of rows

        Returns:
            One dictionary per run with its metrics and tuned parameters
        """
        query = self.session.query(ScenarioRunRecord)
        if scenario is not None:
            query = query.filter(ScenarioRunRecord.scenario == scenario)
        rows = (
            query.order_by(
                ScenarioRunRecord.created_at.desc(), ScenarioRunRecord.id.desc()
            )
            .limit(limit)
            .all()
        )
        return [
            {
                "id": row.id,
                "scenario": row.scenario,
                "created_at": row.created_at.isoformat(),
                "status": row.status,
                "rmse_proposed": row.rmse_proposed,
                "rmse_conventional": row.rmse_conventional,
                "sd_proposed": row.sd_proposed,
                "sd_conventional": row.sd_conventional,
                "theta": (
                    [row.tuning.kp, row.tuning.ki, row.tuning.kd, row.tuning.tc]
                    if row.tuning
                    else None
                ),
                "j_star": row.tuning.cost if row.tuning else None,
                "output_dir": row.output_dir,
            }
            for row in rows
        ]


def archive_report(report: Report, db_url: str | None = None) -> int | None:
    """Store a report, logging instead of raising when the archive fails."""
    try:
        with RunArchive(db_url) as archive:
            return archive.store(report)
    except (SQLAlchemyError, OSError) as e:
        logger.error(f"Could not archive run of '{report.name}': {e}")
        return None
