"""
Consolidated runs and plot data

report-all chains every module on one system and writes one JSON report;
plot turns the t-sweep of such a report into two-column text; runs lists
the archive.
"""

import json
from concurrent.futures import ThreadPoolExecutor

import click
from flask import Blueprint, current_app

import common
from services import PlotDataService, ReportService
from .flow import rest_point_summary
from .flow_core import check_lyapunov, check_properties, find_rest_points
from .instanton import describe_searches
from .instanton_core import search_all_pairs
from .novikov import zeta_pipeline
from .novikov_core import (
    assemble_complex,
    check_delta_squared,
    euler_characteristic,
    instanton_counting,
    novikov_inequalities,
    twisted_betti,
)
from .witten import witten_at
from .witten_core import SplitRejectedError, build_dec, r_invariant

bp = Blueprint("report", __name__, cli_group=None)


def _sweep(system, grid, t_values, rest_points, cx, zeta, r_value, threads):
    dec = build_dec(grid)

    def one(t):
        try:
            return witten_at(system, dec, t, rest_points, cx=cx, zeta=zeta, r_value=r_value)
        except SplitRejectedError as err:
            entry = {"t": t, "rejected": True, "split": err.split.describe() if err.split else None}
            return entry, [f"t={t}: {err}"]

    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(t_values)))) as pool:
        return list(pool.map(one, t_values))


@bp.cli.command("report-all")
@common.system_argument()
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True)
@click.option("--grid", "-N", type=int, default=32, show_default=True)
@click.option("--t-values", default="10", show_default=True, help="'6,10,14' or start:stop:step.")
@click.option("--shots", type=int, default=720, show_default=True)
@click.option("--betti-t", type=float, default=5.0, show_default=True)
@common.common_options
def report_all_command(system, cutoff, grid, t_values, shots, betti_t, output, verbose, timing):
    """Run the whole chain on one system and write a consolidated report."""
    ts = common.parse_t_values(t_values)
    params = {"cutoff": cutoff, "grid": grid, "t_values": ts, "shots": shots, "betti_t": betti_t}
    config = common.RunConfig("report-all", system, params, output, verbose, timing)

    def body(results, warnings):
        logger = current_app.logger
        common.check_range("t", betti_t)
        fs = common.load_system(system)

        rest_points = find_rest_points(fs)
        results["rest_points"] = rest_point_summary(fs, rest_points)
        results["lyapunov"] = check_lyapunov(fs, rest_points=rest_points)
        logger.debug("rest points and Lyapunov check done")

        searches = search_all_pairs(fs, rest_points, cutoff, shots=shots)
        results["instantons"], results["max_reintegration_error"] = describe_searches(
            fs, rest_points, searches, warnings
        )
        cx = assemble_complex(rest_points, {p: instanton_counting(s) for p, s in searches.items()}, fs.dim)
        results["complex"] = cx.describe()
        results["euler_characteristic"] = euler_characteristic(cx)
        results["delta_squared"] = check_delta_squared(cx)

        orbit_search, zeta = zeta_pipeline(fs, cutoff)
        warnings.extend(orbit_search.warnings)
        results["orbits"] = orbit_search.describe()
        results["zeta_series"] = zeta.describe()

        results["properties"] = check_properties(
            fs, rest_points, results["lyapunov"], orbit_search, list(searches.values())
        )
        betti = twisted_betti(fs.omega.cohomology_class().tolist(), betti_t)
        results["betti"] = betti
        results["inequalities"] = novikov_inequalities(cx.counts(), betti["betti"])

        r_value = None
        if fs.dim == 2 and not rest_points:
            r_value = r_invariant(fs, rest_points=rest_points)
            results["r_invariant"] = r_value
        logger.debug("dynamics done; sweeping t over %s", ts)

        if fs.dim == 2:
            sweep = _sweep(fs, grid, ts, rest_points, cx, zeta, r_value, current_app.config["NOVIKOV_THREADS"])
            results["sweep"] = [entry for entry, _ in sweep]
            for _, notes in sweep:
                warnings.extend(notes)
        else:
            warnings.append("Witten deformation is computed on 2-tori only; sweep skipped")
            results["sweep"] = []

        accepted = [e for e in results["sweep"] if not e.get("rejected")]
        results["summary"] = {
            "counts": cx.counts(),
            "delta_squared_ok": results["delta_squared"]["ok"],
            "spectral_counts": {str(e["t"]): e["split"]["small_counts"] for e in accepted},
            "max_splitting_residual": max((e["torsion"]["splitting_residual"] for e in accepted), default=None),
            "max_identity_residual": max(
                (e["torsion"]["identity_residual"] for e in accepted if "identity_residual" in e["torsion"]),
                default=None,
            ),
            "inequalities_ok": results["inequalities"]["ok"],
        }
        if len(accepted) < len(results["sweep"]):
            raise common.ComputationFailed("spectral split rejected at some t")

    common.run_command(config, body)


@bp.cli.command("plot")
@click.argument("report", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--run-id", default=None, help="Read the report from the run archive instead.")
@click.option("--quantity", "-q", required=True, help=f"One of: {', '.join(PlotDataService.QUANTITIES)}.")
@click.option("--t-min", type=float, default=None)
@click.option("--t-max", type=float, default=None)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
def plot_command(report, run_id, quantity, t_min, t_max, output):
    """Two-column plot data from a report-all sweep."""
    ctx = click.get_current_context()
    if (report is None) == (run_id is None):
        click.echo("Error: give a report file or --run-id", err=True)
        ctx.exit(common.EXIT_CONFIG)
    if run_id is not None:
        record = ReportService.find(run_id)
        if record is None:
            click.echo(f"Error: no archived run {run_id}", err=True)
            ctx.exit(common.EXIT_CONFIG)
        payload = ReportService.load_payload(record)
    else:
        with open(report, encoding="utf-8") as fh:
            payload = json.load(fh)
    t_range = None
    if t_min is not None or t_max is not None:
        t_range = (t_min if t_min is not None else float("-inf"), t_max if t_max is not None else float("inf"))
    try:
        text = PlotDataService.emit_plot_data(payload, quantity, t_range)
    except ValueError as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(common.EXIT_CONFIG)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@bp.cli.command("runs")
@click.option("--command", "command_name", default=None, help="Only runs of this command.")
@click.option("--limit", type=int, default=20, show_default=True)
def runs_command(command_name, limit):
    """List archived runs, newest first."""
    for record in ReportService.recent(command_name, limit):
        click.echo(
            f"{record.run_id}  {record.command:<16} exit={record.exit_code}  "
            f"warnings={record.warning_count}  {record.system_name or '-'}"
        )
