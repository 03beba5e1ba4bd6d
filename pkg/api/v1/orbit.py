"""
Orbit command: closed trajectories, monodromy and the orbit counting function
"""

import click
import numpy as np
from flask import Blueprint

import common
from .novikov_core import orbit_counting
from .orbit_core import find_closed_orbits, finite_difference_monodromy

bp = Blueprint("orbit", __name__, cli_group=None)


@bp.cli.command("orbits")
@common.system_argument()
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True, help="ξ-descent cutoff R.")
@click.option("--t-max", type=float, default=None, help="Period cap (default: system option).")
@click.option("--scan-grid", type=int, default=6, show_default=True, help="Recurrence seeds per axis.")
@click.option("--fd-check", is_flag=True, help="Compare monodromies with central differences.")
@common.common_options
def orbits_command(system, cutoff, t_max, scan_grid, fd_check, output, verbose, timing):
    """Find closed trajectories and their iterates below the cutoff."""
    params = {"cutoff": cutoff, "t_max": t_max, "seed_grid": scan_grid, "fd_check": fd_check}
    config = common.RunConfig("orbits", system, params, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        search = find_closed_orbits(fs, cutoff, t_max=t_max, scan_grid=scan_grid)
        results["orbits"] = search.describe()
        results["counting"] = orbit_counting(search).describe()
        warnings.extend(search.warnings)
        if fd_check:
            errors = []
            for orbit in search.primitives:
                approx = finite_difference_monodromy(fs, orbit)
                errors.append(float(np.max(np.abs(approx - orbit.monodromy))))
            results["monodromy_fd_error"] = errors

    common.run_command(config, body)
