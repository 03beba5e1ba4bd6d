"""
Novikov commands: counting functions, Dirichlet series, the Novikov complex,
twisted Betti numbers and the Novikov inequalities

Thin command layer over novikov_core.py; the pipelines below chain the flow,
instanton and orbit cores and are shared with the report command.
"""

import click
from flask import Blueprint, current_app

import common
from .flow_core import find_rest_points
from .instanton_core import search_all_pairs
from .novikov_core import (
    abscissa_estimate,
    assemble_complex,
    check_delta_squared,
    euler_characteristic,
    eval_series,
    instanton_counting,
    laplace,
    novikov_inequalities,
    orbit_counting,
    twisted_betti,
)
from .orbit_core import find_closed_orbits

bp = Blueprint("novikov", __name__, cli_group=None)


# =====================================
# PIPELINES
# =====================================
def complex_pipeline(system, cutoff, shots=720):
    """Rest points, every adjacent-index search and the assembled complex."""
    rest_points = find_rest_points(system)
    searches = search_all_pairs(system, rest_points, cutoff, shots=shots)
    counting = {pair: instanton_counting(s) for pair, s in searches.items()}
    cx = assemble_complex(rest_points, counting, system.dim)
    current_app.logger.debug("complex with counts %s from %d searches", cx.counts(), len(searches))
    return rest_points, searches, cx


def zeta_pipeline(system, cutoff, t_max=None):
    search = find_closed_orbits(system, cutoff, t_max=t_max)
    return search, laplace(orbit_counting(search))


def series_summary(series, points):
    out = {"series": series.describe(), "values": [], "abscissa": None}
    for z in points:
        out["values"].append({"z": z, "value": eval_series(series, z)})
    try:
        out["abscissa"] = abscissa_estimate(series)
    except ValueError as e:
        out["abscissa_note"] = str(e)
    return out


def parse_covector(raw, name="xi"):
    try:
        return [float(v) for v in raw.split(",")]
    except ValueError:
        raise common.ConfigError(f"cannot read {name} {raw!r}")


def parse_complex(raw):
    try:
        return complex(raw.replace(" ", ""))
    except ValueError:
        raise common.ConfigError(f"cannot read complex number {raw!r}")


# =====================================
# COMMANDS
# =====================================
@bp.cli.command("counting")
@common.system_argument()
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True)
@click.option("--kind", type=click.Choice(["instanton", "orbit", "all"]), default="all", show_default=True)
@click.option("--shots", type=int, default=720, show_default=True)
@common.common_options
def counting_command(system, cutoff, kind, shots, output, verbose, timing):
    """Instanton counting functions I_{x,y} and the orbit counting function."""
    params = {"cutoff": cutoff, "kind": kind, "shots": shots}
    config = common.RunConfig("counting", system, params, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        if kind in ("instanton", "all"):
            rest_points = find_rest_points(fs)
            searches = search_all_pairs(fs, rest_points, cutoff, shots=shots)
            results["instanton"] = [instanton_counting(s).describe() for _, s in sorted(searches.items())]
            for (u, v), s in sorted(searches.items()):
                warnings.extend(f"{u}->{v}: {w}" for w in s.warnings)
        if kind in ("orbit", "all"):
            search = find_closed_orbits(fs, cutoff)
            results["orbit"] = orbit_counting(search).describe()
            warnings.extend(search.warnings)

    common.run_command(config, body)


@bp.cli.command("series")
@common.system_argument()
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True)
@click.option("--kind", type=click.Choice(["orbit", "instanton"]), default="orbit", show_default=True)
@click.option("--from", "source", type=int, default=None, help="Instanton series: source label.")
@click.option("--to", "target", type=int, default=None, help="Instanton series: target label.")
@click.option("--eval", "points", multiple=True, help="Evaluate at z (repeatable, e.g. 2.0 or 1+2j).")
@click.option("--shots", type=int, default=720, show_default=True)
@common.common_options
def series_command(system, cutoff, kind, source, target, points, shots, output, verbose, timing):
    """Dirichlet series of a counting function, evaluated at the given z."""
    params = {"cutoff": cutoff, "kind": kind, "from": source, "to": target, "eval": list(points), "shots": shots}
    config = common.RunConfig("series", system, params, output, verbose, timing)

    def body(results, warnings):
        zs = [parse_complex(p) for p in points]
        fs = common.load_system(system)
        if kind == "orbit":
            search, series = zeta_pipeline(fs, cutoff)
            warnings.extend(search.warnings)
            results.update(series_summary(series, zs))
            return
        if source is None or target is None:
            raise common.ConfigError("--kind instanton needs --from and --to")
        rest_points, searches, _ = complex_pipeline(fs, cutoff, shots)
        if (source, target) not in searches:
            raise common.ConfigError(f"({source}, {target}) is not a pair of adjacent index")
        results.update(series_summary(laplace(instanton_counting(searches[(source, target)])), zs))

    common.run_command(config, body)


@bp.cli.command("complex")
@common.system_argument()
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True)
@click.option("--check-d2", is_flag=True, help="Fail (exit 3) unless δ∘δ vanishes below the cutoff.")
@click.option("--t", "t_values", type=float, multiple=True, help="Print δ(t) matrices at these t.")
@click.option("--shots", type=int, default=720, show_default=True)
@common.common_options
def complex_command(system, cutoff, check_d2, t_values, shots, output, verbose, timing):
    """Assemble the Novikov complex and test δ² = 0 class by class."""
    params = {"cutoff": cutoff, "check_d2": check_d2, "t_values": list(t_values), "shots": shots}
    config = common.RunConfig("complex", system, params, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        _, searches, cx = complex_pipeline(fs, cutoff, shots)
        for (u, v), s in sorted(searches.items()):
            warnings.extend(f"{u}->{v}: {w}" for w in s.warnings)
        results["complex"] = cx.describe()
        results["euler_characteristic"] = euler_characteristic(cx)
        results["delta_squared"] = check_delta_squared(cx)
        results["differentials"] = [
            {"t": t, "matrices": [cx.differential_at(k, t) for k in range(fs.dim)]} for t in t_values
        ]
        if check_d2 and not results["delta_squared"]["ok"]:
            raise common.ComputationFailed("δ∘δ has nonzero coefficients below the cutoff")

    common.run_command(config, body)


@bp.cli.command("betti")
@common.system_argument(required=False)
@click.option("--xi", default=None, help="Cohomology class, e.g. '1,0' (default: the system's ω).")
@click.option("--t", "t", type=float, default=5.0, show_default=True)
@click.option("--grid", type=int, default=16, show_default=True, help="Grid for the spectral cross-check.")
@common.common_options
def betti_command(system, xi, t, grid, output, verbose, timing):
    """Twisted Betti numbers: closed form, cross-checked spectrally on 2-tori."""
    params = {"xi": xi, "t": t, "grid": grid}
    config = common.RunConfig("betti", system, params, output, verbose, timing)

    def body(results, warnings):
        if xi is not None:
            covector = parse_covector(xi)
        elif system is not None:
            covector = common.load_system(system).omega.cohomology_class().tolist()
        else:
            raise common.ConfigError("give --xi or a system file")
        results.update(twisted_betti(covector, t, grid=grid))

    common.run_command(config, body)


@bp.cli.command("inequalities")
@common.system_argument()
@click.option("--t", "t", type=float, default=5.0, show_default=True)
@click.option("--grid", type=int, default=16, show_default=True)
@common.common_options
def inequalities_command(system, t, grid, output, verbose, timing):
    """Rest-point counts against the Novikov Betti numbers of the class of ω."""
    config = common.RunConfig("inequalities", system, {"t": t, "grid": grid}, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        rest_points = find_rest_points(fs)
        counts = [0] * (fs.dim + 1)
        for rp in rest_points:
            if rp.hyperbolic:
                counts[rp.morse_index] += 1
        xi = fs.omega.cohomology_class().tolist()
        novikov = twisted_betti(xi, t, grid=grid)
        results["counts"] = counts
        results["novikov"] = {"betti": novikov, "inequalities": novikov_inequalities(counts, novikov["betti"])}
        if not results["novikov"]["inequalities"]["ok"]:
            warnings.append(f"Novikov inequalities fail for counts {counts}")

    common.run_command(config, body)
