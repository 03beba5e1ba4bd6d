"""
Witten-deformation commands: spectra, the integration map, torsions and the
R-invariant

Thin command layer over witten_core.py. One evaluation at a given t is
factored into witten_at so report-all can sweep it.
"""

import click
from flask import Blueprint, current_app

import common
from .flow_core import find_rest_points
from .novikov_core import eval_series
from .witten_core import (
    SplitRejectedError,
    build_dec,
    chain_map_residual,
    integration_map,
    r_invariant,
    small_differentials,
    spectral_split,
    torsion_report,
    witten_operator,
)

bp = Blueprint("witten", __name__, cli_group=None)


def rest_point_counts(system, rest_points):
    counts = [0] * (system.dim + 1)
    for rp in rest_points:
        if rp.hyperbolic:
            counts[rp.morse_index] += 1
    return counts


def witten_at(system, dec, t, rest_points, model="gauge", cx=None, zeta=None, r_value=None, with_intmap=True):
    """Spectral split, integration map and torsions at one t.

    Returns (entry, warnings); raises SplitRejectedError with the split
    attached when no gap is found.
    """
    warnings = []
    targets = rest_point_counts(system, rest_points)
    op = witten_operator(dec, system.omega, t, model=model)
    split = spectral_split(op, targets=targets)
    warnings.extend(f"t={t}: {w}" for w in split.warnings)
    entry = {
        "t": t,
        "split": split.describe(),
        "small_eigenvalues": [list(map(float, v)) for v in split.small_values],
        "gap_ratio": split.gap_ratio,
    }
    if not split.accepted:
        raise SplitRejectedError(f"no spectral gap at t={t}", split)

    zeta_value = eval_series(zeta, t).real if zeta is not None else None
    intmap = G = delta = None
    if with_intmap and sum(targets) and split.matches_targets:
        intmap = integration_map(system, dec, split, rest_points, t)
        G = small_differentials(op, split)
        if cx is not None:
            delta = [cx.differential_at(k, t) for k in range(system.dim)]
        entry["intmap"] = intmap.describe()
        if intmap.diagnostics["unassigned_faces"]:
            warnings.append(f"t={t}: {intmap.diagnostics['unassigned_faces']} faces not assigned to a source")
    torsion = torsion_report(op, split, intmap, G, delta, zeta_value, r_value)
    warnings.extend(f"t={t}: {w}" for w in torsion.pop("warnings"))
    entry["torsion"] = torsion
    for key in ("log_T_an", "log_T_sm", "log_T_la", "log_vol"):
        entry[key] = torsion.get(key)
    entry["zeta"] = zeta_value
    return entry, warnings


def _split_failure(results, err):
    if err.split is not None:
        results["split"] = err.split.describe()


@bp.cli.command("witten-spectrum")
@common.system_argument()
@click.option("--grid", "-N", type=int, default=32, show_default=True, help="Grid cells per axis.")
@click.option("--t", "t", type=float, default=10.0, show_default=True)
@click.option("--model", type=click.Choice(["gauge", "polynomial"]), default="gauge", show_default=True)
@common.common_options
def witten_spectrum_command(system, grid, t, model, output, verbose, timing):
    """Low spectrum of the Witten Laplacians and the small/large split."""
    config = common.RunConfig("witten-spectrum", system, {"grid": grid, "t": t, "model": model}, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        rest_points = find_rest_points(fs)
        results["targets"] = rest_point_counts(fs, rest_points)
        try:
            entry, notes = witten_at(fs, build_dec(grid), t, rest_points, model=model, with_intmap=False)
        except SplitRejectedError as err:
            _split_failure(results, err)
            raise
        warnings.extend(notes)
        results["split"] = entry["split"]
        results["torsion"] = entry["torsion"]

    common.run_command(config, body)


@bp.cli.command("witten-intmap")
@common.system_argument()
@click.option("--grid", "-N", type=int, default=32, show_default=True)
@click.option("--t", "t", type=float, default=10.0, show_default=True)
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True, help="Cutoff for δ(t).")
@click.option("--shots", type=int, default=720, show_default=True)
@common.common_options
def witten_intmap_command(system, grid, t, cutoff, shots, output, verbose, timing):
    """Integration map on the small subcomplex and its chain-map residual."""
    params = {"grid": grid, "t": t, "cutoff": cutoff, "shots": shots}
    config = common.RunConfig("witten-intmap", system, params, output, verbose, timing)

    def body(results, warnings):
        from .novikov import complex_pipeline

        fs = common.load_system(system)
        rest_points, _, cx = complex_pipeline(fs, cutoff, shots)
        dec = build_dec(grid)
        op = witten_operator(dec, fs.omega, t)
        split = spectral_split(op, targets=cx.counts())
        results["split"] = split.describe()
        warnings.extend(split.warnings)
        if not split.accepted or not split.matches_targets:
            raise SplitRejectedError("small subcomplex does not match the rest points", split)
        intmap = integration_map(fs, dec, split, rest_points, t)
        results["intmap"] = intmap.describe()
        G = small_differentials(op, split)
        delta = [cx.differential_at(k, t) for k in range(fs.dim)]
        results["chain_map_residual"] = chain_map_residual(intmap, G, delta)
        current_app.logger.debug("chain-map residual %s", results["chain_map_residual"])

    common.run_command(config, body)


@bp.cli.command("torsion")
@common.system_argument()
@click.option("--grid", "-N", type=int, default=32, show_default=True)
@click.option("--t", "t", type=float, default=10.0, show_default=True)
@click.option("--cutoff", "-R", type=float, default=10.0, show_default=True)
@click.option("--shots", type=int, default=720, show_default=True)
@common.common_options
def torsion_command(system, grid, t, cutoff, shots, output, verbose, timing):
    """Analytic, small, large and dynamical torsions with the exact identities."""
    params = {"grid": grid, "t": t, "cutoff": cutoff, "shots": shots}
    config = common.RunConfig("torsion", system, params, output, verbose, timing)

    def body(results, warnings):
        from .novikov import complex_pipeline, zeta_pipeline

        fs = common.load_system(system)
        rest_points, _, cx = complex_pipeline(fs, cutoff, shots)
        search, zeta = zeta_pipeline(fs, cutoff)
        warnings.extend(search.warnings)
        r_value = r_invariant(fs, rest_points=rest_points) if not rest_points else None
        try:
            entry, notes = witten_at(fs, build_dec(grid), t, rest_points, cx=cx, zeta=zeta, r_value=r_value)
        except SplitRejectedError as err:
            _split_failure(results, err)
            raise
        warnings.extend(notes)
        results.update(entry)
        results["r_invariant"] = r_value
        if "combination" in entry["torsion"]:
            warnings.append("the combination compares discrete torsions only; it is reported, not asserted")

    common.run_command(config, body)


@bp.cli.command("rinv")
@common.system_argument()
@click.option("--n-quad", type=int, default=512, show_default=True, help="Quadrature points per axis.")
@common.common_options
def rinv_command(system, n_quad, output, verbose, timing):
    """R-invariant of a rest-point-free field."""
    config = common.RunConfig("rinv", system, {"n_quad": n_quad}, output, verbose, timing)

    def body(results, warnings):
        fs = common.load_system(system)
        results["r_invariant"] = r_invariant(fs, n_quad=n_quad)
        results["omega_class"] = fs.omega.cohomology_class().tolist()

    common.run_command(config, body)
