"""
isoprofile - Run Ledger
SQLAlchemy models recording CLI runs and the profile samples they produced.
"""

import json
import logging
from datetime import datetime

from sqlalchemy import (
    create_engine, Column, Integer, String, Float, DateTime, Text, ForeignKey, CheckConstraint
)
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

logger = logging.getLogger(__name__)

Base = declarative_base()

STATUSES = ("ok", "failed", "error")


# ============================================================================
# MODELS
# ============================================================================

class VerificationRun(Base):
    """One CLI invocation: command, configuration, outcome and report"""
    __tablename__ = "verification_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String, nullable=False)  # profile, density-check, ...
    config_json = Column(Text, nullable=False)
    status = Column(
        String,
        CheckConstraint("status IN ('ok', 'failed', 'error')"),
        nullable=False,
        default="ok"
    )
    exit_code = Column(Integer, nullable=False, default=0)
    report_json = Column(Text)
    created_at = Column(DateTime, default=datetime.now)

    # Relationships
    samples = relationship("ProfileSample", back_populates="run", cascade="all, delete-orphan")

    def report(self):
        return json.loads(self.report_json) if self.report_json else None

    def __repr__(self):
        return f"<VerificationRun(id={self.id}, command='{self.command}', status='{self.status}')>"


class ProfileSample(Base):
    """One row of a profile table"""
    __tablename__ = "profile_samples"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("verification_runs.id"))
    K = Column(Float, nullable=False)
    N = Column(Float, nullable=False)
    D = Column(Float, nullable=False)
    v = Column(Float, nullable=False)
    a = Column(Float, nullable=False)
    I = Column(Float, nullable=False)
    I_asym = Column(Float, nullable=False)
    ratio = Column(Float, nullable=False)

    # Relationships
    run = relationship("VerificationRun", back_populates="samples")

    def __repr__(self):
        return f"<ProfileSample(K={self.K}, N={self.N}, D={self.D}, v={self.v}, I={self.I})>"


# ============================================================================
# SESSIONS
# ============================================================================

def init_db(url):
    """Create the ledger tables (if not exists) and return a session factory"""
    engine = create_engine(url, echo=False)
    Base.metadata.create_all(bind=engine)
    logger.debug("Ledger initialized at %s", url)
    return sessionmaker(bind=engine)


def get_db(session_factory):
    """Get a ledger session - use with next() or contextlib.closing"""
    db = session_factory()
    try:
        yield db
    finally:
        db.close()


# ============================================================================
# RECORDING
# ============================================================================

def record_run(db, command, config, exit_code, report=None, frame=None):
    """Store a run, and the profile rows of ``frame`` when given; returns the run"""
    status = {0: "ok", 1: "failed"}.get(exit_code, "error")
    run = VerificationRun(
        command=command,
        config_json=json.dumps(config, sort_keys=True, default=str),
        status=status,
        exit_code=exit_code,
        report_json=json.dumps(report, default=str) if report is not None else None,
    )
    db.add(run)
    if frame is not None:
        record_profile(db, frame, run)
    db.commit()
    return run


def record_profile(db, frame, run=None):
    """Add one ProfileSample per row of a profile DataFrame (caller commits)"""
    samples = [
        ProfileSample(run=run, **{key: float(value) for key, value in row.items()})
        for row in frame.to_dict(orient="records")
    ]
    db.add_all(samples)
    return samples
