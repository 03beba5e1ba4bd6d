"""
Instanton command: shooting searches between rest points of adjacent index
"""

import click
from flask import Blueprint, current_app

import common
from .flow_core import find_rest_points
from .instanton_core import count_below, find_instantons, reintegrate_instanton, search_all_pairs

bp = Blueprint("instanton", __name__, cli_group=None)


def describe_searches(system, rest_points, searches, warnings):
    out = []
    worst = 0.0
    for (u, v), search in sorted(searches.items()):
        entry = search.describe()
        cuts = [search.cutoff * f for f in (0.25, 0.5, 1.0)]
        entry["count_below"] = [{"cutoff": c, "count": count_below(search.instantons, c)} for c in cuts]
        for inst in search.instantons:
            again = reintegrate_instanton(system, rest_points[u], rest_points[v], inst)
            worst = max(worst, abs(again - inst.omega_value))
        out.append(entry)
        warnings.extend(f"{u}->{v}: {w}" for w in search.warnings)
    return out, worst


@bp.cli.command("instantons")
@common.system_argument()
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True, help="Descent cutoff R.")
@click.option("--from", "source", type=int, default=None, help="Source rest-point label.")
@click.option("--to", "target", type=int, default=None, help="Target rest-point label.")
@click.option("--shots", type=int, default=720, show_default=True, help="Seeds on each unstable circle.")
@click.option("--budget", type=float, default=40.0, show_default=True, help="Flow time per seed.")
@common.common_options
def instantons_command(system, cutoff, source, target, shots, budget, output, verbose, timing):
    """Enumerate instantons with ω-descent at most R."""
    params = {"cutoff": cutoff, "from": source, "to": target, "shots": shots, "t_max": budget}
    config = common.RunConfig("instantons", system, params, output, verbose, timing)

    def body(results, warnings):
        if (source is None) != (target is None):
            raise common.ConfigError("--from and --to go together")
        fs = common.load_system(system)
        rest_points = find_rest_points(fs)
        results["rest_points"] = [rp.describe() for rp in rest_points]
        if source is not None:
            for label in (source, target):
                if not 0 <= label < len(rest_points):
                    raise common.ConfigError(f"no rest point with label {label}")
            searches = {
                (source, target): find_instantons(
                    fs, rest_points, source, target, cutoff, shots=shots, budget=budget
                )
            }
        else:
            searches = search_all_pairs(fs, rest_points, cutoff, shots=shots, budget=budget)
        current_app.logger.debug("searched %d pairs", len(searches))
        results["searches"], results["max_reintegration_error"] = describe_searches(
            fs, rest_points, searches, warnings
        )
        results["complete"] = all(s.complete for s in searches.values())

    common.run_command(config, body)
