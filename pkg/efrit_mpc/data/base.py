"""Base classes and session handling for the run archive."""

from pathlib import Path
from typing import Any

from sqlalchemy import create_engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from efrit_mpc.config import config

# Create the SQLAlchemy base class
Base = declarative_base()

# Global session factory
_SessionFactory = None


def archive_url(path: str | Path | None = None) -> str:
    """SQLite URL for an archive file (from config when path is None)."""
    if path is None:
        path = config.get("archive.path", "results/archive.db")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return f"sqlite:///{path}"


def get_engine(db_url: str | None = None) -> Any:
    """Get a SQLAlchemy engine.

    Args:
        db_url: Database URL. If None, uses the archive path from config.

    Returns:
        SQLAlchemy engine
    """
    if db_url is None:
        db_url = archive_url()
    return create_engine(db_url, echo=config.get("archive.echo", False))


def init_archive(db_url: str | None = None) -> None:
    """Bind the session factory and create missing tables.

    Args:
        db_url: Database URL. If None, uses the archive path from config.
    """
    global _SessionFactory
    engine = get_engine(db_url)
    _SessionFactory = sessionmaker(bind=engine)
    Base.metadata.create_all(engine)


def get_session() -> Session:
    """Get an archive session.

    Returns:
        SQLAlchemy session
    """
    if _SessionFactory is None:
        init_archive()
    session_factory = _SessionFactory
    if session_factory is None:
        raise RuntimeError("Session factory is not initialized")
    session: Session = session_factory()
    return session
