"""
Instantons: trajectories from a rest point of index k+1 to one of index k

Pure numpy/scipy logic with no Flask or database dependencies.

Seeds on a small sphere of the source's unstable eigenspace are flowed
forward. For k = 0 each of the two seeds either lands in the target sink or
not; hits are keyed by (winding, seed side) since both rays may reach
the same sink in the same class. For k = 1 the seeds form a circle; passes
near a lift of the target are keyed by (winding, arrival sector) and the
sign of the unstable coordinate at closest approach changes across the
target's stable manifold, so each sign change is refined by bisection on
the seed angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow_core import integrate_batch, sphere_seeds, transport_frame
from .torus_core import HomotopyClass


class NonHyperbolicError(ValueError):
    pass


class ShootingError(ValueError):
    pass


class TransversalityError(RuntimeError):
    """The sign frame of an instanton is singular or ill conditioned."""


SIGN_CONDITION_LIMIT = 1e6


@dataclass
class Instanton:
    source: int
    target: int
    winding: HomotopyClass
    omega_value: float
    sign: int
    seed_param: float
    seed: np.ndarray
    arrival: np.ndarray
    arrival_time: float
    arrival_distance: float
    sector: int  # arrival sector for k = 1, seed side for k = 0
    path: np.ndarray
    sign_condition: float = 1.0

    @property
    def descent(self):
        return -self.omega_value

    def describe(self):
        return {
            "from": self.source,
            "to": self.target,
            "winding": list(self.winding.winding),
            "omega_value": self.omega_value,
            "sign": self.sign,
            "seed_param": self.seed_param,
            "arrival_distance": self.arrival_distance,
            "arrival_time": self.arrival_time,
            "sector": self.sector,
            "path": self.path[:: max(1, len(self.path) // 64)].tolist(),
        }


@dataclass
class InstantonSearch:
    source: int
    target: int
    cutoff: float
    instantons: list
    complete: bool
    warnings: list = field(default_factory=list)

    def describe(self):
        return {
            "from": self.source,
            "to": self.target,
            "cutoff": self.cutoff,
            "complete": self.complete,
            "count": len(self.instantons),
            "instantons": [i.describe() for i in self.instantons],
            "warnings": list(self.warnings),
        }


@dataclass
class _Pass:
    miss: float
    distance: float
    sample: int


def _passes(points, target, coords_inv, unstable_dim, stable_dim, r_near):
    """First close pass per (winding, sector) of one sampled trajectory."""
    offset = points - target[None, :]
    shift = np.round(offset)
    local = offset - shift
    dist = np.linalg.norm(local, axis=1)
    near = np.flatnonzero(dist < r_near)
    found = {}
    if len(near) == 0:
        return found
    breaks = np.flatnonzero(np.diff(near) > 1) + 1
    for run in np.split(near, breaks):
        best = run[np.argmin(dist[run])]
        coords = coords_inv @ local[best]
        sector = int(np.sign(coords[unstable_dim])) if stable_dim == 1 else 0
        key = (tuple(int(v) for v in shift[best]), sector)
        if key in found:
            continue
        miss = float(coords[0]) if unstable_dim else 0.0
        found[key] = _Pass(miss, float(dist[best]), int(best))
    return found


def instanton_sign(system, source_rp, target_rp, seed, duration, o_source=1, o_target=1):
    """Orientation sign of one instanton and the condition number of the comparison.

    The source frame is transported from the seed to the arrival point q, the
    closest approach to the target; the sign is that of det [X(q) | target frame]
    written in the transported frame, scaled by the two orientation choices.
    Raises TransversalityError when the condition number reaches
    SIGN_CONDITION_LIMIT.
    """
    q, frame, _ = transport_frame(system, seed, source_rp.unstable_frame, duration)
    x_q = system.X(q)[0]
    columns = np.column_stack([x_q / np.linalg.norm(x_q), target_rp.unstable_frame])
    coeffs = frame.T @ columns
    det = float(np.linalg.det(coeffs))
    cond = float(np.linalg.cond(coeffs))
    if not np.isfinite(cond) or cond >= SIGN_CONDITION_LIMIT or det == 0.0:
        raise TransversalityError(
            f"sign frame {source_rp.label} -> {target_rp.label} has condition number {cond:.3g}"
        )
    return int(np.sign(det)) * o_source * o_target, cond


def find_instantons(
    system,
    rest_points,
    source,
    target,
    cutoff,
    delta=None,
    shots=720,
    budget=40.0,
    samples_per_unit=50,
    r_near=0.1,
    max_depth=60,
):
    """All instantons source -> target with descent at most cutoff."""
    x, y = rest_points[source], rest_points[target]
    if not (x.hyperbolic and y.hyperbolic):
        raise NonHyperbolicError("instanton search needs hyperbolic endpoints")
    if x.morse_index != y.morse_index + 1:
        raise ShootingError(
            f"index({source}) = {x.morse_index} is not index({target}) + 1 = {y.morse_index + 1}"
        )
    k = y.morse_index
    if k > 1:
        raise ShootingError("shooting over a sphere of dimension above 1 is not supported")
    delta = delta or system.tolerances.detection_radius
    n = system.dim
    basis = np.column_stack([y.unstable_frame, y.stable_frame])
    coords_inv = np.linalg.inv(basis)
    stable_dim = n - k
    t_eval = np.linspace(0.0, budget, int(budget * samples_per_unit) + 1)

    params, offsets = sphere_seeds(x.unstable_frame, delta, shots)
    seeds = x.position[None, :] + offsets
    batch = integrate_batch(system, seeds, budget, t_eval=t_eval)
    warnings = []

    final_speed = np.linalg.norm(system.X(batch.points[-1]), axis=1)
    descent = -batch.omega[-1]
    complete = bool(np.all((descent > cutoff) | (final_speed < 1e-8)))
    if not complete:
        warnings.append("some seeds neither exceeded the cutoff nor settled within the time budget")

    passes = [
        _passes(batch.points[:, j, :], y.position, coords_inv, k, stable_dim, r_near)
        for j in range(len(seeds))
    ]

    def shoot(angle):
        seed = x.position + delta * (np.cos(angle) * x.unstable_frame[:, 0] + np.sin(angle) * x.unstable_frame[:, 1])
        traj = integrate_batch(system, seed, budget, t_eval=t_eval)
        return seed, traj.points[:, 0, :], _passes(traj.points[:, 0, :], y.position, coords_inv, k, stable_dim, r_near)

    candidates = {}
    if k == 0:
        for j, found in enumerate(passes):
            for key, hit in found.items():
                side_key = (key[0], int(params[j, 0]))
                if hit.distance <= delta and side_key not in candidates:
                    candidates[side_key] = (float(params[j, 0]), seeds[j], batch.points[:, j, :], hit)
    else:
        for i in range(len(seeds)):
            j = (i + 1) % len(seeds)
            lo_angle = float(params[i, 0])
            hi_angle = float(params[j, 0]) + (2.0 * np.pi if j == 0 else 0.0)
            for key, p_lo in passes[i].items():
                p_hi = passes[j].get(key)
                if p_hi is None or p_lo.miss * p_hi.miss >= 0 or key in candidates:
                    continue
                lo, hi = lo_angle, hi_angle
                best = (lo, seeds[i], batch.points[:, i, :], p_lo)
                if p_hi.distance < p_lo.distance:
                    best = (hi, seeds[j], batch.points[:, j, :], p_hi)
                lo_sign = np.sign(p_lo.miss)
                broken = False
                for _ in range(max_depth):
                    if hi - lo < 1e-13:
                        break
                    mid = 0.5 * (lo + hi)
                    seed, pts, found = shoot(mid)
                    hit = found.get(key)
                    if hit is None:
                        broken = True
                        break
                    if hit.distance < best[3].distance:
                        best = (mid, seed, pts, hit)
                    if hit.distance < 1e-9:
                        break
                    if np.sign(hit.miss) == lo_sign:
                        lo = mid
                    else:
                        hi = mid
                if broken or best[3].distance > delta:
                    warnings.append(f"sign change for winding {key[0]} is not a clean crossing")
                    continue
                candidates[key] = best

    instantons = []
    for key in sorted(candidates):
        angle, seed, pts, hit = candidates[key]
        winding = HomotopyClass(key[0])
        omega_value = float(system.omega.integrate_between(x.position, y.position + winding.as_array()))
        if -omega_value > cutoff:
            continue
        arrival_time = float(t_eval[hit.sample])
        sign, cond = instanton_sign(system, x, y, seed, arrival_time, x.orientation, y.orientation)
        instantons.append(
            Instanton(
                source=x.label,
                target=y.label,
                winding=winding,
                omega_value=omega_value,
                sign=sign,
                seed_param=angle,
                seed=np.asarray(seed),
                arrival=pts[hit.sample],
                arrival_time=arrival_time,
                arrival_distance=hit.distance,
                sector=key[1],
                path=pts[: hit.sample + 1],
                sign_condition=cond,
            )
        )
    instantons.sort(key=lambda i: (i.descent, i.winding.winding, i.sector))
    return InstantonSearch(x.label, y.label, float(cutoff), instantons, complete, warnings)


def reintegrate_instanton(system, source_rp, target_rp, instanton):
    """Recompute the ω-value by flowing from the stored seed.

    Exact pieces close the gaps source -> seed and arrival -> target lift.
    """
    batch = integrate_batch(system, instanton.seed, instanton.arrival_time, samples=2)
    arrival = batch.points[-1, 0]
    target = target_rp.position + instanton.winding.as_array()
    head = system.omega.integrate_between(source_rp.position, instanton.seed)
    tail = system.omega.integrate_between(arrival, target)
    return float(head + batch.omega[-1, 0] + tail)


def count_below(instantons, cutoff):
    return sum(1 for i in instantons if i.descent <= cutoff)


def search_all_pairs(system, rest_points, cutoff, **kwargs):
    """Instanton searches for every pair of hyperbolic rest points of adjacent index."""
    searches = {}
    for x in rest_points:
        for y in rest_points:
            if x.hyperbolic and y.hyperbolic and x.morse_index == y.morse_index + 1:
                searches[(x.label, y.label)] = find_instantons(
                    system, rest_points, x.label, y.label, cutoff, **kwargs
                )
    return searches
