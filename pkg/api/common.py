# Common command plumbing: run configuration, system loading, JSON reports and exit codes
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import click
import numpy as np
from flask import current_app

VERSION = "1.0.0"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3

# name -> (low, high, low inclusive)
RANGES = {
    "cutoff": (0.0, 1000.0, False),
    "grid": (8, 256, True),
    "t": (0.0, 100.0, True),
    "seed_grid": (2, 256, True),
    "t_max": (0.0, 1e4, False),
    "shots": (8, 20000, True),
    "n_quad": (16, 4096, True),
    "r_max": (0.0, 1000.0, False),
}


class ConfigError(ValueError):
    pass


class ComputationFailed(RuntimeError):
    """Raised by a command body to stop with exit 3 after filling the partial report."""


# =====================================
# RUN CONFIGURATION
# =====================================
@dataclass
class RunConfig:
    command: str
    system: str | None = None
    params: dict = field(default_factory=dict)
    output: str | None = None
    verbose: bool = False
    timing: bool = False

    def validate(self):
        for name, value in self.params.items():
            key = "t" if name in ("t_values", "t") else name
            if key not in RANGES or value is None:
                continue
            values = value if isinstance(value, (list, tuple)) else [value]
            for v in values:
                check_range(name, v)
        return self

    def echo(self):
        out = {"command": self.command, "system": self.system, "params": self.params}
        if self.output:
            out["output"] = self.output
        return out


def check_range(name, value):
    key = "t" if name == "t_values" else name
    low, high, inclusive = RANGES[key]
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be numeric, got {value!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    below = v < low if inclusive else v <= low
    if below or v > high:
        bracket = "[" if inclusive else "("
        raise ConfigError(f"{name}={value} outside {bracket}{low}, {high}]")
    return v


def parse_t_values(raw):
    """'4:20:2' (inclusive range) or a comma list '6,10,14'."""
    try:
        if ":" in raw:
            start, stop, step = (float(p) for p in raw.split(":"))
            if step <= 0:
                raise ConfigError("t-values step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(count)]
        else:
            values = [float(p) for p in raw.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot read t-values {raw!r}")
    if not values:
        raise ConfigError("t-values is empty")
    return values


def load_system(path):
    """Load a system file; parse and validation errors become ConfigError."""
    try:
        return _load_system(path)
    except (SystemFileError, ExpressionError) as e:
        raise ConfigError(f"{path}: {e}")


# =====================================
# JSON SERIALISATION
# =====================================
def _finite(value):
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, HomotopyClass):
        return list(obj.winding)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _finite(float(obj.real)), "im": _finite(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        return _finite(float(obj))
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2)


def build_report(config, results, warnings, status, elapsed=None, error=None):
    report = {
        "version": VERSION,
        "config": config.echo(),
        "status": status,
        "results": results,
        "warnings": list(warnings),
    }
    if error:
        report["error"] = error
    if config.timing and elapsed is not None:
        report["timing"] = {"elapsed_seconds": round(elapsed, 6)}
    return report


# =====================================
# COMMAND RUNNER
# =====================================
def run_command(config, body):
    """Validate, run body(results, warnings), write the report and exit 0/2/3.

    body fills the results dict as it goes so a failure still leaves a partial report.
    """
    logger = current_app.logger
    ctx = click.get_current_context()
    if config.verbose:
        logger.setLevel("DEBUG")
    try:
        config.validate()
    except ConfigError as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_CONFIG)

    logger.info("Starting %s on %s", config.command, config.system or "-")
    results, warnings = {}, []
    status, error, code = "ok", None, EXIT_OK
    started = time.perf_counter()
    try:
        body(results, warnings)
    except ConfigError as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(EXIT_CONFIG)
    except Exception as e:
        logger.exception("%s failed", config.command)
        status, error, code = "failed", f"{type(e).__name__}: {e}", EXIT_COMPUTE
    elapsed = time.perf_counter() - started

    for w in warnings:
        logger.warning("%s: %s", config.command, w)
    report = build_report(config, results, warnings, status, elapsed, error)
    text = dumps(report)
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)

    if current_app.config.get("NOVIKOV_STORE_RUNS"):
        from services import ReportService

        ReportService.archive(config, report, code, elapsed)
    logger.info("Finished %s with exit %d in %.3fs", config.command, code, elapsed)
    ctx.exit(code)


def system_argument(required=True):
    return click.argument("system", type=click.Path(exists=True, dir_okay=False), required=required)


def common_options(f):
    """--output, --verbose and --timing shared by every command."""
    f = click.option("--timing", is_flag=True, help="Include elapsed time in the report.")(f)
    f = click.option("--verbose", "-v", is_flag=True, help="Debug logging.")(f)
    f = click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout.")(f)
    return f


# Imported last: v1/__init__ loads the command modules, which use this module at import time
from v1.fieldspec_core import ExpressionError
from v1.flow_core import SystemFileError, load_system as _load_system
from v1.torus_core import HomotopyClass
