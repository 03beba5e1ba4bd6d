from datetime import datetime, timezone
from flask_sqlalchemy import SQLAlchemy
from sqlalchemy import CheckConstraint, Index
from uuid import uuid4

db = SQLAlchemy()

# ======================================================
# RUN ARCHIVE
# ======================================================


class RunRecord(db.Model):
    """One archived command run: config echo, JSON payload and exit code"""

    __tablename__ = "run_records"

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.String(50), unique=True, nullable=False)
    command = db.Column(db.String(50), nullable=False)
    system_name = db.Column(db.String(200))
    version = db.Column(db.String(20), nullable=False)

    # Deterministic JSON strings (sorted keys), stored verbatim
    config_json = db.Column(db.Text, nullable=False)
    payload_json = db.Column(db.Text, nullable=False)

    exit_code = db.Column(db.Integer, nullable=False, default=0)
    warning_count = db.Column(db.Integer, nullable=False, default=0)
    elapsed_seconds = db.Column(db.Float)

    created_at = db.Column(db.DateTime, default=lambda: datetime.now(timezone.utc))

    __table_args__ = (
        CheckConstraint("exit_code IN (0, 2, 3)", name="ck_run_exit_code"),
        Index("ix_run_command_created", "command", "created_at"),
    )

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        if not self.run_id:
            self.run_id = f"R{uuid4().hex[:12]}"

    @property
    def succeeded(self):
        return self.exit_code == 0

    def __repr__(self):
        return f"<RunRecord {self.run_id} {self.command} exit={self.exit_code}>"
