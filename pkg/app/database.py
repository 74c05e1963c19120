import os
from sqlalchemy.pool import StaticPool
from sqlmodel import SQLModel, create_engine, Session

# Register the ledger tables on SQLModel.metadata.
from app.models import SearchRecord, VerificationRecord  # noqa: F401

DATABASE_URL = os.environ.get("APP_DATABASE_URL", "sqlite:///flipflop_runs.db")


def _make_engine(url: str):
    if url == "sqlite://":
        # in-memory sqlite lives as long as its single shared connection
        return create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    if url.startswith("sqlite"):
        return create_engine(url, connect_args={"check_same_thread": False})
    return create_engine(url)


ENGINE = _make_engine(DATABASE_URL)


def create_tables():
    SQLModel.metadata.create_all(ENGINE)


def get_session():
    return Session(ENGINE)


def reset_db():
    """Wipe all ledger tables. Use with caution - for testing only!"""
    SQLModel.metadata.drop_all(ENGINE)
    SQLModel.metadata.create_all(ENGINE)
