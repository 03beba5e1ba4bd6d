from flask import Blueprint

# =====================================
# IMPORTING COMMAND GROUPS
# =====================================
from .flow import bp as flow_bp
from .instanton import bp as instanton_bp
from .orbit import bp as orbit_bp
from .novikov import bp as novikov_bp
from .witten import bp as witten_bp
from .report import bp as report_bp

# =====================================
# Setup blueprint
# =====================================
bp_v1 = Blueprint("api_v1", __name__, cli_group=None)


# =====================================
# REGISTERING COMMAND GROUPS
# =====================================
# Each sub-blueprint uses cli_group=None, so its commands land on app.cli
bp_v1.register_blueprint(flow_bp, url_prefix="/flow/")
bp_v1.register_blueprint(instanton_bp, url_prefix="/instanton/")
bp_v1.register_blueprint(orbit_bp, url_prefix="/orbit/")
bp_v1.register_blueprint(novikov_bp, url_prefix="/novikov/")
bp_v1.register_blueprint(witten_bp, url_prefix="/witten/")
bp_v1.register_blueprint(report_bp, url_prefix="/report/")
