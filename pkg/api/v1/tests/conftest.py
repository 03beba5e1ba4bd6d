"""
Pytest configuration and shared fixtures for the novikov-torus tests
Provides: app, runner, database, system-file fixtures
"""

import pytest
import os
import tempfile

# Import Flask app and models
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..")))

from app import create_app
from models import db

SYSTEMS_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", "systems"))


@pytest.fixture(scope="session")
def app():
    """Create and configure a test Flask application"""
    # Create a temporary database
    db_fd, db_path = tempfile.mkstemp()

    flask_app = create_app(
        {
            "TESTING": True,
            "SQLALCHEMY_DATABASE_URI": f"sqlite:///{db_path}",
            "SQLALCHEMY_TRACK_MODIFICATIONS": False,
            "SECRET_KEY": "test-secret-key",
            "NOVIKOV_STORE_RUNS": True,
            "NOVIKOV_THREADS": 1,
            "LOG_LEVEL": "WARNING",
        }
    )

    # Create tables
    with flask_app.app_context():
        db.create_all()

    yield flask_app

    # Cleanup
    os.close(db_fd)
    os.unlink(db_path)


@pytest.fixture(scope="function")
def runner(app):
    """Create a test CLI runner"""
    return app.test_cli_runner()


@pytest.fixture(autouse=True)
def setup_database(app):
    """Automatically setup and teardown database for each test"""
    with app.app_context():
        db.create_all()
        yield
        db.session.remove()
        db.drop_all()


# -----------------------------
# System files
# -----------------------------
def system_path(name):
    return os.path.join(SYSTEMS_DIR, f"{name}.sys")


@pytest.fixture
def gradient_system_file():
    return system_path("gradient_torus")


@pytest.fixture
def circle_orbits_file():
    return system_path("circle_orbits")


@pytest.fixture
def rotating_frame_file():
    return system_path("rotating_frame")


@pytest.fixture
def write_system(tmp_path):
    """Write system-file text to a temporary file and return its path"""

    def _write(text, name="custom.sys"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
