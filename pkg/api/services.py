# services.py - Run archive and plot-data services
# Keeps persistence and report post-processing out of the command modules

import json
import math

from models import db, RunRecord


class ReportService:
    """Service for archiving command reports as RunRecords."""

    @staticmethod
    def archive(config, report, exit_code, elapsed):
        from common import dumps

        record = RunRecord(
            command=config.command,
            system_name=config.system,
            version=report["version"],
            config_json=dumps(config.echo()),
            payload_json=dumps(report),
            exit_code=exit_code,
            warning_count=len(report.get("warnings", [])),
            elapsed_seconds=elapsed,
        )
        try:
            db.session.add(record)
            db.session.commit()
        except Exception:
            db.session.rollback()
            raise
        return record

    @staticmethod
    def recent(command=None, limit=20):
        query = RunRecord.query
        if command:
            query = query.filter_by(command=command)
        return query.order_by(RunRecord.created_at.desc(), RunRecord.id.desc()).limit(limit).all()

    @staticmethod
    def find(run_id):
        return RunRecord.query.filter_by(run_id=run_id).first()

    @staticmethod
    def load_payload(record):
        return json.loads(record.payload_json)


class PlotDataService:
    """Service turning a report-all sweep into two-column plot text."""

    # quantity -> key of each sweep entry
    SCALARS = {
        "log-vol": "log_vol",
        "zeta": "zeta",
        "log-t-an": "log_T_an",
        "log-t-sm": "log_T_sm",
        "log-t-la": "log_T_la",
        "gap-ratio": "gap_ratio",
    }
    QUANTITIES = ("small-eigenvalues",) + tuple(SCALARS)

    @staticmethod
    def _number(value):
        if value is None:
            return None
        return float(value)  # "inf" / "nan" strings parse too

    @classmethod
    def emit_plot_data(cls, report, quantity, t_range=None):
        """
        Columnar text: header lines prefixed '#', then one 'x y' row per sample.
        small-eigenvalues emits one block per tracked (degree, index) pair.
        """
        if quantity not in cls.QUANTITIES:
            raise ValueError(
                f"unknown quantity {quantity!r}; valid names: {', '.join(cls.QUANTITIES)}"
            )
        sweep = [e for e in report.get("results", {}).get("sweep", []) if not e.get("rejected")]
        if t_range is not None:
            lo, hi = t_range
            sweep = [e for e in sweep if lo - 1e-12 <= float(e["t"]) <= hi + 1e-12]
        if len(sweep) < 2:
            raise ValueError(f"{quantity} needs at least 2 sampled t values, found {len(sweep)}")
        sweep = sorted(sweep, key=lambda e: float(e["t"]))

        lines = [f"# quantity: {quantity}", "# x: t"]
        if quantity == "small-eigenvalues":
            lines.append("# y: eigenvalue")
            tracked = sorted(
                {
                    (k, i)
                    for entry in sweep
                    for k, vals in enumerate(entry["small_eigenvalues"])
                    for i in range(len(vals))
                }
            )
            for k, i in tracked:
                lines.append(f"# degree {k} eigenvalue {i}")
                for entry in sweep:
                    vals = entry["small_eigenvalues"][k]
                    if i < len(vals):
                        lines.append(f"{float(entry['t'])!r} {cls._number(vals[i])!r}")
        else:
            key = cls.SCALARS[quantity]
            lines.append(f"# y: {key}")
            for entry in sweep:
                y = cls._number(entry.get(key))
                if y is None or math.isnan(y):
                    continue
                lines.append(f"{float(entry['t'])!r} {y!r}")
        return "\n".join(lines) + "\n"
