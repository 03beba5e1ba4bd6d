"""
Closed trajectories: recurrence scan, Newton refinement, monodromy and iterates

Pure numpy/scipy logic with no Flask or database dependencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import null_space

from .fieldspec_core import sample_grid
from .flow_core import IntegrationError, integrate_batch, state_transition
from .torus_core import HomotopyClass, pair_form_class


@dataclass
class ClosedOrbit:
    base: np.ndarray
    period: float
    winding: HomotopyClass
    monodromy: np.ndarray
    multipliers: np.ndarray
    nondegenerate: bool
    epsilon: int
    multiplicity: int
    primitive_id: int
    xi_value: float

    @property
    def descent(self):
        return -self.xi_value

    def describe(self):
        return {
            "primitive_id": self.primitive_id,
            "multiplicity": self.multiplicity,
            "base": [float(v) for v in self.base],
            "period": self.period,
            "winding": list(self.winding.winding),
            "xi_value": self.xi_value,
            "nondegenerate": self.nondegenerate,
            "epsilon": self.epsilon,
            "multipliers": [{"re": float(m.real), "im": float(m.imag)} for m in self.multipliers],
        }


@dataclass
class OrbitSearch:
    cutoff: float
    t_max: float
    orbits: list
    primitives: list
    degenerate: list
    terminated_by: str
    warnings: list = field(default_factory=list)

    def describe(self):
        return {
            "cutoff": self.cutoff,
            "t_max": self.t_max,
            "terminated_by": self.terminated_by,
            "primitive_count": len(self.primitives),
            "orbits": [o.describe() for o in self.orbits],
            "degenerate": [o.describe() for o in self.degenerate],
            "warnings": list(self.warnings),
        }


def transverse_basis(vector):
    """Orthonormal basis (n, n-1) of the complement of a nonzero vector."""
    return null_space(np.asarray(vector, dtype=float)[None, :])


def iterate_sign(monodromy, k):
    """sign det(M^k - I)."""
    m = np.linalg.matrix_power(np.asarray(monodromy, dtype=float), k)
    return int(np.sign(np.linalg.det(m - np.eye(len(m)))))


def newton_orbit(system, point, period, winding, max_iter=30, tol=1e-11):
    """Solve Phi_T(p) - p - w = 0 with the phase condition <p - p0, X(p0)> = 0.

    Returns (p, T, DPhi_T) or None if Newton fails.
    """
    p = np.asarray(point, dtype=float).copy()
    w = np.asarray(winding, dtype=float)
    normal = system.X(p)[0]
    normal = normal / np.linalg.norm(normal)
    p_ref = p.copy()
    n = len(p)
    T = float(period)
    for _ in range(max_iter):
        try:
            end, phi = state_transition(system, p, T)
        except IntegrationError:
            return None
        residual = np.concatenate([end - p - w, [np.dot(p - p_ref, normal)]])
        if np.linalg.norm(residual) < tol:
            return p, T, phi
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = phi - np.eye(n)
        jac[:n, n] = system.X(end)[0]
        jac[n, :n] = normal
        step = np.linalg.lstsq(jac, -residual, rcond=None)[0]
        p += step[:n]
        T += step[n]
        if not np.isfinite(T) or T <= 0:
            return None
    return None


def _orbit_samples(system, p, T, count=512):
    batch = integrate_batch(system, p, T, t_eval=np.linspace(0.0, T, count))
    return batch.points[:, 0, :]


def finite_difference_monodromy(system, orbit, h=1e-6):
    """Central-difference estimate of the transverse monodromy."""
    q = transverse_basis(system.X(orbit.base)[0])
    columns = []
    for j in range(q.shape[1]):
        starts = np.array([orbit.base + h * q[:, j], orbit.base - h * q[:, j]])
        batch = integrate_batch(system, starts, orbit.period * orbit.multiplicity, samples=2)
        plus, minus = batch.points[-1]
        columns.append(q.T @ (plus - minus) / (2 * h))
    return np.column_stack(columns)


def _detect_returns(system, seeds, direction, scan_time, dt, radius):
    """Near-returns mod Z^n after a transient, as (p0, period, forward winding)."""
    transient = integrate_batch(system, seeds, 0.5 * scan_time, direction=direction, samples=2)
    starts = transient.points[-1]
    moving = np.linalg.norm(system.X(starts), axis=1) > 1e-6
    starts = starts[moving]
    if len(starts) == 0:
        return []
    window = 0.5 * scan_time
    t_eval = np.arange(0.0, window + 0.5 * dt, dt)
    batch = integrate_batch(system, starts, window, direction=direction, t_eval=t_eval)
    found = []
    for j in range(len(starts)):
        offset = batch.points[:, j, :] - starts[j]
        dist = np.linalg.norm(offset - np.round(offset), axis=1)
        left = np.flatnonzero(dist > 2 * radius)
        if len(left) == 0:
            continue
        tail = np.arange(left[0], len(dist))
        close = tail[dist[tail] < radius]
        if len(close) == 0:
            continue
        i = close[0]
        while i + 1 < len(dist) and dist[i + 1] < dist[i]:
            i += 1
        shift = np.round(offset[i])
        found.append((starts[j], float(t_eval[i]), direction * shift))
    return found


def find_closed_orbits(system, cutoff, t_max=None, scan_grid=6, scan_time=40.0, dt=0.002, radius=0.05):
    """Nondegenerate closed trajectories with descent at most cutoff and period
    at most t_max, with their iterates; degenerate ones are reported apart."""
    t_max = float(t_max or system.tolerances.t_max)
    n = system.dim
    seeds = sample_grid(n, scan_grid) + 0.5 / scan_grid
    candidates = _detect_returns(system, seeds, 1, scan_time, dt, radius)
    candidates += _detect_returns(system, seeds, -1, scan_time, dt, radius)

    warnings = []
    primitives = []  # (p, T, w, samples, phi)
    for p0, period, shift in candidates:
        base = system.domain.reduce(p0)
        if any(_same_orbit(system, base, period, shift, known) for known in primitives):
            continue
        solved = newton_orbit(system, base, period, shift)
        if solved is None:
            warnings.append(f"recurrence near {np.round(base, 4).tolist()} did not refine")
            continue
        p, T, phi = solved
        p_red = system.domain.reduce(p)
        samples = _orbit_samples(system, p_red, T)
        prim = _primitive(system, p_red, T, shift, samples, warnings)
        if prim is not None:
            p_red, T, shift, phi, samples = prim
        if any(_same_orbit(system, p_red, T, shift, known, 1e-5, 1e-6) for known in primitives):
            continue
        primitives.append((p_red, T, shift, samples, phi))

    primitives.sort(key=lambda item: (item[1], tuple(item[2]), tuple(np.round(item[0], 6))))
    orbits, degenerate, prim_orbits = [], [], []
    terminated_by = "cutoff"
    for pid, (p, T, shift, _, phi) in enumerate(primitives):
        winding = HomotopyClass.from_vector(shift)
        xi = pair_form_class(system.omega, winding)
        q = transverse_basis(system.X(p)[0])
        mono = q.T @ phi @ q
        mult = np.linalg.eigvals(mono)
        nondegenerate = bool(np.all(np.abs(np.abs(mult) - 1.0) >= 1e-7))
        first = ClosedOrbit(p, T, winding, mono, mult, nondegenerate,
                            iterate_sign(mono, 1) if nondegenerate else 0, 1, pid, xi)
        prim_orbits.append(first)
        if not nondegenerate:
            degenerate.append(first)
            continue
        if xi >= 0:
            warnings.append(f"closed trajectory {pid} has nonnegative ω-period {xi:.6g}")
            terminated_by = "t_max"
        k = 1
        while k * T <= t_max + 1e-12 and (xi >= 0 or -k * xi <= cutoff + 1e-12):
            mono_k = np.linalg.matrix_power(mono, k)
            orbits.append(
                ClosedOrbit(p, k * T, winding.scale(k), mono_k, mult**k, True,
                            iterate_sign(mono, k), k, pid, k * xi)
            )
            k += 1
        if k * T > t_max and -k * xi <= cutoff:
            terminated_by = "t_max"
    if degenerate:
        warnings.append(f"{len(degenerate)} degenerate closed trajectories (NCT fails)")
    orbits.sort(key=lambda o: (o.descent, o.primitive_id, o.multiplicity))
    return OrbitSearch(float(cutoff), t_max, orbits, prim_orbits, degenerate, terminated_by, warnings)


def _same_orbit(system, p, T, shift, known, dist_tol=1e-4, period_tol=1e-2):
    _, known_T, known_shift, samples, _ = known
    if not np.array_equal(np.round(shift), np.round(known_shift)):
        return False
    if abs(T - known_T) > period_tol * known_T:
        return False
    spacing = float(np.max(np.linalg.norm(np.diff(samples, axis=0), axis=1)))
    return bool(np.min(system.domain.distance(samples, p)) < dist_tol + spacing)


def _primitive(system, p, T, shift, samples, warnings):
    """Replace a k-fold traversal by its primitive orbit when it returns early."""
    dist = system.domain.distance(samples, p)
    spacing = float(np.max(np.linalg.norm(np.diff(samples, axis=0), axis=1)))
    inner = np.arange(len(samples))[8:-8]
    if len(inner) == 0:
        return None
    close = [
        i for i in inner
        if dist[i] < spacing and dist[i] <= dist[i - 1] and dist[i] <= dist[i + 1]
    ]
    if not close:
        return None
    tau = T * close[0] / (len(samples) - 1)
    k = int(round(T / tau))
    if k < 2 or abs(T / k - tau) > 0.01 * tau or np.any(np.round(shift) % k):
        warnings.append("primitive period ambiguous for a closed trajectory")
        return None
    solved = newton_orbit(system, p, T / k, np.round(shift) / k)
    if solved is None:
        warnings.append("primitive period ambiguous for a closed trajectory")
        return None
    p1, T1, phi = solved
    p1 = system.domain.reduce(p1)
    return p1, T1, np.round(shift) / k, _orbit_samples(system, p1, T1), phi


def zeta_counting(orbits, gamma):
    """Sum of epsilon / p over nondegenerate closed trajectories in class gamma."""
    total = Fraction(0)
    for orbit in orbits:
        if orbit.nondegenerate and orbit.winding == gamma:
            total += Fraction(orbit.epsilon, orbit.multiplicity)
    return total
