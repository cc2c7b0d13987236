"""Archive tables for tuning results and scenario runs."""

from datetime import datetime, timezone

from sqlalchemy import (
    Boolean,
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    String,
)
from sqlalchemy.orm import relationship

from efrit_mpc.data.base import Base


def _now() -> datetime:
    return datetime.now(timezone.utc)


class TuningRecord(Base):
    """One E-FRIT tuning result."""

    __tablename__ = "tuning_records"

    id = Column(Integer, primary_key=True)
    scenario = Column(String(100), nullable=False, index=True)
    created_at = Column(DateTime, default=_now, nullable=False)
    kp = Column(Float, nullable=False)
    ki = Column(Float, nullable=False)
    kd = Column(Float, nullable=False)
    tc = Column(Float, nullable=False)
    lambda_ = Column("lambda", Float, nullable=False)
    cost = Column(Float)
    iterations = Column(Integer)
    stalled = Column(Boolean, default=False)
    seed = Column(Integer)

    # Relationships
    runs = relationship("ScenarioRunRecord", back_populates="tuning")

    def __repr__(self) -> str:
        """Return string representation of the tuning record."""
        return f"<TuningRecord(id={self.id}, scenario='{self.scenario}')>"


class ScenarioRunRecord(Base):
    """One scenario run and its headline metrics."""

    __tablename__ = "scenario_runs"

    id = Column(Integer, primary_key=True)
    scenario = Column(String(100), nullable=False, index=True)
    created_at = Column(DateTime, default=_now, nullable=False)
    tuning_id = Column(Integer, ForeignKey("tuning_records.id"))
    rmse_proposed = Column(Float)
    rmse_conventional = Column(Float)
    sd_proposed = Column(Float)
    sd_conventional = Column(Float)
    status = Column(String(20), nullable=False, default="ok")
    output_dir = Column(String(500))

    # Relationships
    tuning = relationship("TuningRecord", back_populates="runs")

    def __repr__(self) -> str:
        """Return string representation of the scenario run."""
        return f"<ScenarioRunRecord(id={self.id}, scenario='{self.scenario}')>"
