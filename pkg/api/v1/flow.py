"""
Flow commands: rest points, Lyapunov check and unstable-manifold growth

Thin command layer over flow_core.py. Loading, validation, logging and the
report envelope live in common.py; the numerics are all in flow_core.
"""

import click
from flask import Blueprint, current_app

import common
from .flow_core import (
    check_lyapunov,
    check_properties,
    estimate_growth,
    find_rest_points,
    poincare_hopf_sum,
)

bp = Blueprint("flow", __name__, cli_group=None)


def rest_point_summary(system, rest_points):
    counts = [0] * (system.dim + 1)
    for rp in rest_points:
        if rp.hyperbolic:
            counts[rp.morse_index] += 1
    return {
        "system": system.describe(),
        "rest_points": [rp.describe() for rp in rest_points],
        "counts": counts,
        "non_hyperbolic": [rp.label for rp in rest_points if not rp.hyperbolic],
        "poincare_hopf": poincare_hopf_sum(rest_points),
    }


@bp.cli.command("rest-points")
@common.system_argument()
@click.option("--seed-grid", type=int, default=None, help="Newton seeds per axis (default: system option).")
@common.common_options
def rest_points_command(system, seed_grid, output, verbose, timing):
    """Find and classify the zeros of X."""
    config = common.RunConfig("rest-points", system, {"seed_grid": seed_grid}, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        rest_points = find_rest_points(fs, seed_grid=seed_grid)
        current_app.logger.debug("found %d rest points", len(rest_points))
        results.update(rest_point_summary(fs, rest_points))
        results["properties"] = check_properties(fs, rest_points)
        if results["non_hyperbolic"]:
            warnings.append(f"non-hyperbolic rest points: {results['non_hyperbolic']}")

    common.run_command(config, body)


@bp.cli.command("lyapunov")
@common.system_argument()
@click.option("--grid", type=int, default=128, show_default=True, help="Sample points per axis.")
@common.common_options
def lyapunov_command(system, grid, output, verbose, timing):
    """Check that ω(X) <= 0 with equality only at rest points."""
    config = common.RunConfig("lyapunov", system, {"grid": grid}, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        rest_points = find_rest_points(fs)
        results["lyapunov"] = check_lyapunov(fs, grid=grid, rest_points=rest_points)
        if not results["lyapunov"]["is_lyapunov"]:
            warnings.append(
                f"ω is not Lyapunov for X: {results['lyapunov']['violation_count']} violating samples"
            )

    common.run_command(config, body)


@bp.cli.command("growth")
@common.system_argument()
@click.option("--r-max", type=float, default=5.0, show_default=True, help="Largest intrinsic radius.")
@click.option("--rest-point", "label", type=int, default=None, help="Only this rest-point label.")
@click.option("--angles", type=int, default=128, show_default=True, help="Rays on index-2 patches.")
@common.common_options
def growth_command(system, r_max, label, angles, output, verbose, timing):
    """Estimate the exponential growth rate of unstable-manifold balls."""
    config = common.RunConfig(
        "growth", system, {"r_max": r_max, "rest_point": label, "shots": angles}, output, verbose, timing
    )

    def body(results, warnings):
        fs = common.load_system(system)
        rest_points = find_rest_points(fs)
        chosen = [rp for rp in rest_points if label is None or rp.label == label]
        if label is not None and not chosen:
            raise common.ConfigError(f"no rest point with label {label}")
        results["growth"] = []
        for rp in chosen:
            if not rp.hyperbolic:
                warnings.append(f"rest point {rp.label} is not hyperbolic; skipped")
                continue
            estimate = estimate_growth(fs, rp, r_max, n_angles=angles)
            results["growth"].append(estimate)
            warnings.extend(f"rest point {rp.label}: {w}" for w in estimate["warnings"])
        results["eg_pass"] = all(g["eg_pass"] for g in results["growth"])

    common.run_command(config, body)
