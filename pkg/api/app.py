# app.py
import os

from flask import Flask
from flask.cli import FlaskGroup

# -----------------------------
# Models (must exist in models.py)
# -----------------------------
from models import (
    db,
)

# -----------------------------
# Versioned command blueprints
# -----------------------------
from v1 import bp_v1

# Set instance path for Flask (where the run archive will be stored)
basedir = os.path.abspath(os.path.dirname(__file__))
instance_path = os.path.join(basedir, "instance")


def _flag(value, default):
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


# -----------------------------
# Flask App Setup
# -----------------------------
def create_app(test_config=None):
    os.makedirs(instance_path, exist_ok=True)
    app = Flask(__name__, instance_path=instance_path)

    # Configuration
    app.config["SECRET_KEY"] = os.environ.get("SECRET_KEY", "change-this-outside-development")
    app.config["NOVIKOV_THREADS"] = max(1, int(os.environ.get("NOVIKOV_THREADS") or os.cpu_count() or 1))
    app.config["NOVIKOV_STORE_RUNS"] = _flag(os.environ.get("NOVIKOV_STORE_RUNS"), True)
    app.config["LOG_LEVEL"] = os.environ.get("NOVIKOV_LOG_LEVEL", "INFO")

    # Database configuration - use PostgreSQL if DATABASE_URL is set, otherwise SQLite
    database_url = os.environ.get("DATABASE_URL")
    if database_url:
        # Some hosts hand out postgres:// but SQLAlchemy needs postgresql://
        database_url = database_url.replace("postgres://", "postgresql://", 1)
        app.config["SQLALCHEMY_DATABASE_URI"] = database_url
    else:
        db_path = os.path.join(instance_path, "novikov.db")
        app.config["SQLALCHEMY_DATABASE_URI"] = f"sqlite:///{db_path}"
    app.config["SQLALCHEMY_TRACK_MODIFICATIONS"] = False

    if test_config:
        app.config.update(test_config)
    app.logger.setLevel(app.config["LOG_LEVEL"])

    # Initialize database (guarded so a broken store doesn't stop the numerics)
    try:
        db.init_app(app)
        with app.app_context():
            db.create_all()
    except Exception as e:
        app.logger.error("Database initialization error: %s", e)
        app.config["NOVIKOV_STORE_RUNS"] = False

    # Register versioned blueprints (commands land on app.cli)
    app.register_blueprint(bp_v1, url_prefix="/api/v1")
    app.shell_context_processor(shell_context)
    return app


def shell_context():
    from models import RunRecord

    return {"db": db, "RunRecord": RunRecord}


# The app is built when a command runs, not on import
cli = FlaskGroup(create_app=create_app, help="Morse–Novikov dynamics on flat tori.")


# =====================================
# RUN COMMAND LINE
# =====================================
if __name__ == "__main__":
    cli()
