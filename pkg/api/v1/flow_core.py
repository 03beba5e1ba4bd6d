"""
Vector fields on the torus: system files, integration, rest points,
invariant-manifold patches and Lyapunov / growth checks

Pure numpy/scipy logic with no Flask or database dependencies. Trajectories
are integrated in unreduced R^n coordinates, so the stored state is the lift
and the ω-integral is carried along as one extra state component.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import schur

from .fieldspec_core import (
    ExpressionError,
    jets,
    min_divisor,
    parse,
    periodicity_defect,
    sample_grid,
    to_text,
)
from .torus_core import ClosedOneForm, TorusDomain


class SystemFileError(ValueError):
    def __init__(self, message, line=None, column=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.column = column


class IntegrationError(RuntimeError):
    """The integrator gave up; last_state holds the last accepted point."""

    def __init__(self, message, last_state=None, time=None):
        super().__init__(message)
        self.last_state = last_state
        self.time = time


@dataclass(frozen=True)
class Tolerances:
    hyperbolicity: float = 1e-7
    newton: float = 1e-12
    ode_rtol: float = 1e-10
    ode_atol: float = 1e-12
    dedup_radius: float = 1e-6
    seed_grid: int = 32
    detection_radius: float = 1e-3
    recurrence_radius: float = 1e-3
    t_max: float = 200.0

    def override(self, name, raw):
        known = {f.name: f.type for f in fields(self)}
        if name not in known:
            raise KeyError(name)
        value = int(raw) if name == "seed_grid" else float(raw)
        return replace(self, **{name: value})


# ---------------------- Vector fields ----------------------
@dataclass(frozen=True, eq=False)
class ExpressionField:
    """X given component-wise by expressions."""

    components: tuple

    def values(self, points):
        points = np.atleast_2d(points)
        return np.stack([jets(c, points, order=1).value for c in self.components], axis=1)

    def jacobian(self, points):
        points = np.atleast_2d(points)
        return np.stack([jets(c, points, order=1).grad for c in self.components], axis=1)

    def describe(self):
        return [to_text(c) for c in self.components]


@dataclass(frozen=True, eq=False)
class GradientField:
    """X = -grad ω for the flat metric; the Jacobian is minus the potential's Hessian."""

    omega: ClosedOneForm

    def values(self, points):
        return -self.omega.components(np.atleast_2d(points))

    def jacobian(self, points):
        _, hess = self.omega.components(np.atleast_2d(points), order=2)
        return -hess

    def describe(self):
        return "-grad omega"


@dataclass(frozen=True, eq=False)
class ReversedField:
    inner: object

    def values(self, points):
        return -self.inner.values(points)

    def jacobian(self, points):
        return -self.inner.jacobian(points)

    def describe(self):
        inner = self.inner.describe()
        return {"reversed": inner}


@dataclass(frozen=True, eq=False)
class FieldSystem:
    domain: TorusDomain
    field: object
    omega: ClosedOneForm
    eta: ClosedOneForm | None = None
    name: str = ""
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def dim(self):
        return self.domain.dim

    def X(self, points):
        return self.field.values(points)

    def jacobian(self, points):
        return self.field.jacobian(points)

    def omega_of_X(self, points):
        points = np.atleast_2d(points)
        return np.sum(self.omega.components(points) * self.X(points), axis=1)

    def describe(self):
        out = {
            "name": self.name,
            "dim": self.dim,
            "field": self.field.describe(),
            "omega": self.omega.describe(),
        }
        if self.eta is not None:
            out["eta"] = self.eta.describe()
        return out


def reverse_field(system):
    """Same system with X replaced by -X."""
    return replace(system, field=ReversedField(system.field), name=f"{system.name} (reversed)")


# ---------------------- System files ----------------------
_LINE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9.]*)\s*=\s*(.*?)\s*$")


def _parse_covector(raw, dim, lineno):
    try:
        values = tuple(float(v) for v in raw.split(","))
    except ValueError:
        raise SystemFileError(f"malformed covector {raw!r}", lineno)
    if len(values) != dim:
        raise SystemFileError(f"expected {dim} harmonic coefficients, got {len(values)}", lineno)
    return values


def parse_system(text, name=""):
    """Build a FieldSystem from system-file text.

    Recognised keys: dim, name, field.<i> (1-based) or field = -grad omega,
    omega.harmonic, omega.potential, eta.harmonic, eta.potential and
    option.<tolerance> overrides.
    """
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0]
        if not stripped.strip():
            continue
        m = _LINE_RE.match(stripped)
        if not m:
            raise SystemFileError("expected 'key = value'", lineno)
        key, value = m.group(1), m.group(2)
        if key in entries:
            raise SystemFileError(f"duplicate key {key!r}", lineno)
        entries[key] = (value, lineno)

    if "dim" not in entries:
        raise SystemFileError("missing 'dim'")
    dim_raw, dim_line = entries.pop("dim")
    try:
        domain = TorusDomain(int(dim_raw))
    except ValueError as e:
        raise SystemFileError(str(e), dim_line)
    dim = domain.dim

    def expression(key):
        raw, lineno = entries.pop(key)
        try:
            return parse(raw, dim=dim)
        except ExpressionError as e:
            raise SystemFileError(f"{key}: {e.message}", lineno + e.line - 1, e.column)

    def form(prefix):
        harmonic_key, potential_key = f"{prefix}.harmonic", f"{prefix}.potential"
        if harmonic_key not in entries and potential_key not in entries:
            return None
        harmonic = (0.0,) * dim
        if harmonic_key in entries:
            raw, lineno = entries.pop(harmonic_key)
            harmonic = _parse_covector(raw, dim, lineno)
        if potential_key in entries:
            return ClosedOneForm(harmonic, expression(potential_key))
        return ClosedOneForm(harmonic)

    omega = form("omega")
    if omega is None:
        raise SystemFileError("missing omega.harmonic / omega.potential")
    eta = form("eta")
    label = entries.pop("name", (name, None))[0]

    if "field" in entries:
        raw, lineno = entries.pop("field")
        if raw.replace(" ", "") != "-gradomega":
            raise SystemFileError("only 'field = -grad omega' is accepted as a whole-field shorthand", lineno)
        vector_field = GradientField(omega)
    else:
        components = []
        for i in range(1, dim + 1):
            key = f"field.{i}"
            if key not in entries:
                raise SystemFileError(f"missing {key}")
            components.append(expression(key))
        vector_field = ExpressionField(tuple(components))

    tolerances = Tolerances()
    for key in sorted(k for k in entries if k.startswith("option.")):
        raw, lineno = entries.pop(key)
        try:
            tolerances = tolerances.override(key[len("option."):], raw)
        except KeyError:
            raise SystemFileError(f"unknown option {key!r}", lineno)
        except ValueError:
            raise SystemFileError(f"malformed value for {key!r}", lineno)

    if entries:
        key, (_, lineno) = sorted(entries.items(), key=lambda kv: kv[1][1])[0]
        raise SystemFileError(f"unknown key {key!r}", lineno)

    system = FieldSystem(domain, vector_field, omega, eta, label, tolerances)
    _check_system(system)
    return system


def _check_system(system):
    """Periodicity and bounded divisors on a 17^n sample grid."""
    dim = system.dim
    exprs = []
    if isinstance(system.field, ExpressionField):
        exprs += [(f"field.{i + 1}", c) for i, c in enumerate(system.field.components)]
    exprs.append(("omega.potential", system.omega.potential))
    if system.eta is not None:
        exprs.append(("eta.potential", system.eta.potential))
    grid = sample_grid(dim, 17)
    for label, expr in exprs:
        defect = periodicity_defect(expr, dim)
        if not defect <= 1e-9:
            raise SystemFileError(f"{label} is not Z^{dim}-periodic (defect {defect:.3g})")
        if min_divisor(expr, grid) < 1e-12:
            raise SystemFileError(f"{label} divides by a quantity that vanishes on the torus")


def load_system(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stem = re.sub(r"\.[^.]*$", "", path.replace("\\", "/").rsplit("/", 1)[-1])
    return parse_system(text, name=stem)


# ---------------------- Integration ----------------------
@dataclass
class Trajectory:
    times: np.ndarray
    points: np.ndarray  # (S, n) lifted
    omega: np.ndarray  # (S,) cumulative ω-integral from the start
    direction: int = 1

    @property
    def end(self):
        return self.points[-1]

    @property
    def lift_shift(self):
        return self.points[-1] - self.points[0]


@dataclass
class BatchTrajectories:
    times: np.ndarray  # (S,)
    points: np.ndarray  # (S, P, n)
    omega: np.ndarray  # (S, P)
    direction: int = 1

    def trajectory(self, j):
        return Trajectory(self.times, self.points[:, j, :], self.omega[:, j], self.direction)


def _solve(rhs, duration, y0, system, t_eval=None, dense_output=False, events=None):
    tol = system.tolerances
    sol = solve_ivp(
        rhs,
        (0.0, duration),
        y0,
        method="DOP853",
        rtol=tol.ode_rtol,
        atol=tol.ode_atol,
        t_eval=t_eval,
        dense_output=dense_output,
        events=events,
    )
    if sol.status < 0:
        last = sol.y[:, -1] if sol.y.size else y0
        raise IntegrationError(sol.message, last_state=last, time=sol.t[-1] if sol.t.size else 0.0)
    return sol


def integrate_batch(system, starts, duration, direction=1, samples=201, t_eval=None):
    """Integrate many initial points at once; returns samples at common times."""
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    count, dim = starts.shape
    if t_eval is None:
        t_eval = np.linspace(0.0, duration, samples)

    def rhs(_, y):
        pos = y[: count * dim].reshape(count, dim)
        v = direction * system.X(pos)
        w = direction * system.omega_of_X(pos)
        return np.concatenate([v.ravel(), w])

    y0 = np.concatenate([starts.ravel(), np.zeros(count)])
    sol = _solve(rhs, duration, y0, system, t_eval=t_eval)
    points = sol.y[: count * dim].T.reshape(len(sol.t), count, dim)
    omega = sol.y[count * dim :].T
    return BatchTrajectories(sol.t, points, omega, direction)


def integrate(system, start, duration, direction=1, samples=201, t_eval=None):
    """Single trajectory from start (a point of R^n, taken as its own lift)."""
    batch = integrate_batch(system, start, duration, direction, samples, t_eval)
    return batch.trajectory(0)


def state_transition(system, point, duration, direction=1):
    """Flow map and its derivative: returns (Phi(point), DPhi) with Phi in lifted coordinates."""
    point = np.asarray(point, dtype=float)
    dim = len(point)

    def rhs(_, y):
        pos = y[:dim]
        phi = y[dim:].reshape(dim, dim)
        jac = system.jacobian(pos)[0]
        return np.concatenate([direction * system.X(pos)[0], (direction * jac @ phi).ravel()])

    y0 = np.concatenate([point, np.eye(dim).ravel()])
    sol = _solve(rhs, duration, y0, system)
    end = sol.y[:, -1]
    return end[:dim], end[dim:].reshape(dim, dim)


def orient_qr(frame):
    """QR with positive diagonal in R, so span and orientation of frame are kept."""
    q, r = np.linalg.qr(frame)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :], signs[:, None] * r


def transport_frame(system, start, frame, duration, direction=1, renorm_interval=0.5):
    """Carry a tangent frame along the flow with periodic QR renormalisation.

    Returns (end point, orthonormal frame with the transported orientation,
    accumulated log of the R diagonals).
    """
    start = np.asarray(start, dtype=float)
    dim = len(start)
    frame, _ = orient_qr(np.asarray(frame, dtype=float).reshape(dim, -1))
    m = frame.shape[1]
    log_growth = np.zeros(m)

    def rhs(_, y):
        pos = y[:dim]
        f = y[dim:].reshape(dim, m)
        jac = system.jacobian(pos)[0]
        return np.concatenate([direction * system.X(pos)[0], (direction * jac @ f).ravel()])

    point, elapsed = start, 0.0
    while elapsed < duration - 1e-14:
        step = min(renorm_interval, duration - elapsed)
        sol = _solve(rhs, step, np.concatenate([point, frame.ravel()]), system)
        end = sol.y[:, -1]
        point = end[:dim]
        frame, r = orient_qr(end[dim:].reshape(dim, m))
        log_growth += np.log(np.abs(np.diag(r)))
        elapsed += step
    return point, frame, log_growth


# ---------------------- Rest points ----------------------
@dataclass
class RestPoint:
    position: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    hyperbolic: bool
    morse_index: int
    unstable_frame: np.ndarray  # (n, k)
    stable_frame: np.ndarray  # (n, n - k)
    residual: float
    label: int = -1
    orientation: int = 1  # o_x, the sign attached to the order of unstable_frame

    def describe(self):
        return {
            "label": self.label,
            "position": [float(v) for v in self.position],
            "hyperbolic": self.hyperbolic,
            "morse_index": self.morse_index,
            "eigenvalues": [
                {"re": float(v.real), "im": float(v.imag)} for v in self.eigenvalues
            ],
            "residual": float(self.residual),
            "orientation": self.orientation,
        }


def _canonical_columns(frame):
    """Flip each column so that its largest-magnitude entry is positive."""
    frame = np.array(frame, dtype=float)
    for j in range(frame.shape[1]):
        i = int(np.argmax(np.abs(frame[:, j])))
        if frame[i, j] < 0:
            frame[:, j] = -frame[:, j]
    return frame


def invariant_frames(jacobian):
    """Orthonormal bases of the unstable (Re > 0) and stable (Re < 0) subspaces
    from ordered real Schur decompositions."""
    _, q_u, k_u = schur(jacobian, output="real", sort="rhp")
    _, q_s, k_s = schur(jacobian, output="real", sort="lhp")
    return _canonical_columns(q_u[:, :k_u]), _canonical_columns(q_s[:, :k_s])


def classify_rest_point(system, position):
    jac = system.jacobian(position)[0]
    eig = np.linalg.eigvals(jac)
    hyperbolic = bool(np.min(np.abs(eig.real)) > system.tolerances.hyperbolicity)
    index = int(np.sum(eig.real > 0))
    unstable, stable = invariant_frames(jac)
    residual = float(np.linalg.norm(system.X(position)[0]))
    order = np.lexsort((eig.imag, eig.real))
    return RestPoint(position, jac, eig[order], hyperbolic, index, unstable, stable, residual)


def _newton_solve(jac, rhs):
    try:
        return np.linalg.solve(jac, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return (np.linalg.pinv(jac) @ rhs[..., None])[..., 0]


def find_rest_points(system, seed_grid=None, max_iter=100):
    """All zeros of X, found by vectorised Newton from a seed grid.

    Iteration continues past the residual tolerance until the step stalls,
    so degenerate roots are located well enough for the Jacobian test.
    """
    tol = system.tolerances
    grid = seed_grid or tol.seed_grid
    points = sample_grid(system.dim, grid) + 0.5 / grid
    active = np.ones(len(points), dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        values = system.X(points[idx])
        step = _newton_solve(system.jacobian(points[idx]), values)
        norms = np.linalg.norm(step, axis=1)
        scale = np.minimum(1.0, 0.1 / np.maximum(norms, 1e-300))
        points[idx] -= step * scale[:, None]
        done = (norms < 1e-14) | (np.linalg.norm(values, axis=1) == 0.0) | ~np.isfinite(norms)
        active[idx[done]] = False

    finite = np.all(np.isfinite(points), axis=1)
    points = system.domain.reduce(points[finite])
    residual = np.linalg.norm(system.X(points), axis=1)
    candidates = points[residual <= tol.newton]

    reps = []
    for p in candidates:
        if reps and np.min(system.domain.distance(np.array(reps), p)) < tol.dedup_radius:
            continue
        reps.append(p)

    found = []
    for p in reps:
        for _ in range(20):
            step = _newton_solve(system.jacobian(p), system.X(p))[0]
            if not np.all(np.isfinite(step)):
                break
            p = p - step
            if np.linalg.norm(step) < 1e-15:
                break
        found.append(classify_rest_point(system, system.domain.reduce(p)))

    found.sort(key=lambda r: (r.morse_index, tuple(np.round(r.position, 9))))
    for label, rp in enumerate(found):
        rp.label = label
    return found


def poincare_hopf_sum(rest_points):
    """Sum of (-1)^index over hyperbolic rest points; equals χ(T^n) = 0."""
    return int(sum((-1) ** rp.morse_index for rp in rest_points if rp.hyperbolic))


# ---------------------- Invariant manifold patches ----------------------
@dataclass
class ManifoldPatch:
    rest_point: RestPoint
    side: str
    dimension: int
    delta: float
    params: np.ndarray  # seed parameters (sign, angle or sphere point)
    seeds: np.ndarray  # (m, n) lifted seed points around the rest point's lift
    rays: BatchTrajectories | None
    warnings: list = field(default_factory=list)


def sphere_seeds(frame, delta, n_angles):
    """Seeds on the delta-sphere of span(frame); returns (params, offsets)."""
    m = frame.shape[1]
    if m == 0:
        return np.zeros((0, 1)), np.zeros((0, frame.shape[0]))
    if m == 1:
        params = np.array([[1.0], [-1.0]])
        return params, delta * params @ frame.T
    if m == 2:
        angles = 2.0 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
        unit = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return angles[:, None], delta * unit @ frame.T
    # Fibonacci points on S^2
    i = np.arange(n_angles) + 0.5
    z = 1.0 - 2.0 * i / n_angles
    phi = np.pi * (1.0 + 5**0.5) * i
    unit = np.stack([np.sqrt(1 - z**2) * np.cos(phi), np.sqrt(1 - z**2) * np.sin(phi), z], axis=1)
    return unit, delta * unit @ frame.T


def seed_invariant_manifold(system, rest_point, side="unstable", delta=None, budget=10.0, n_angles=64, samples=401):
    """Seeds on a small sphere in the unstable (or stable) eigenspace, flowed
    forward (or backward) for the time budget."""
    if side not in ("unstable", "stable"):
        raise ValueError("side must be 'unstable' or 'stable'")
    delta = delta or system.tolerances.detection_radius
    frame = rest_point.unstable_frame if side == "unstable" else rest_point.stable_frame
    params, offsets = sphere_seeds(frame, delta, n_angles)
    seeds = rest_point.position[None, :] + offsets
    if len(seeds) == 0:
        return ManifoldPatch(rest_point, side, 0, delta, params, seeds, None)
    direction = 1 if side == "unstable" else -1
    rays = integrate_batch(system, seeds, budget, direction=direction, samples=samples)
    return ManifoldPatch(rest_point, side, frame.shape[1], delta, params, seeds, rays)


# ---------------------- Lyapunov and growth checks ----------------------
def check_lyapunov(system, grid=128, rest_points=None, tol=1e-10):
    """Test ω(X) <= 0 with equality only at rest points on a grid^n grid."""
    points = sample_grid(system.dim, grid)
    values = system.omega_of_X(points)
    if rest_points is None:
        rest_points = find_rest_points(system)
    scale = max(1.0, float(np.max(np.abs(values))))
    threshold = tol * scale
    bad = values > threshold
    result = {
        "grid": grid,
        "max_omega_of_x": float(np.max(values)),
        "min_slack": float(-np.max(values)),
        "violations": [[float(v) for v in p] for p in points[bad][:20]],
        "violation_count": int(np.sum(bad)),
        "c_estimate": None,
    }
    if rest_points:
        positions = np.array([rp.position for rp in rest_points])
        diff = points[:, None, :] - positions[None, :, :]
        diff -= np.round(diff)
        dist = np.min(np.linalg.norm(diff, axis=2), axis=1)
        away = dist > 1e-3
        if away.any():
            result["c_estimate"] = float(np.min(-values[away] / dist[away] ** 2))
        strict = result["c_estimate"] is None or result["c_estimate"] > 0
    else:
        strict = result["max_omega_of_x"] < 0
    result["is_lyapunov"] = bool(not bad.any() and strict)
    return result


def _ray_growth(system, seeds, frame_offsets, budget, samples):
    """Integrate seeds with arclength and (for 2-dim patches) swept-area density."""
    count, dim = seeds.shape
    with_area = frame_offsets is not None

    def rhs(_, y):
        pos = y[: count * dim].reshape(count, dim)
        v = system.X(pos)
        out = [v.ravel(), np.linalg.norm(v, axis=1)]
        if with_area:
            jac = system.jacobian(pos)
            tangent = y[count * dim : 2 * count * dim].reshape(count, dim)
            d_tangent = np.einsum("pij,pj->pi", jac, tangent)
            if dim == 2:
                dens = np.abs(tangent[:, 0] * v[:, 1] - tangent[:, 1] * v[:, 0])
            else:
                dens = np.linalg.norm(np.cross(tangent, v), axis=1)
            out = [v.ravel(), d_tangent.ravel(), np.linalg.norm(v, axis=1), dens]
        return np.concatenate(out)

    parts = [seeds.ravel()]
    if with_area:
        parts.append(frame_offsets.ravel())
    parts.append(np.zeros(count))
    if with_area:
        parts.append(np.zeros(count))
    t_eval = np.linspace(0.0, budget, samples)
    sol = _solve(rhs, budget, np.concatenate(parts), system, t_eval=t_eval)
    offset = count * dim * (2 if with_area else 1)
    arclength = sol.y[offset : offset + count].T
    area = sol.y[offset + count :].T if with_area else None
    final_speed = np.linalg.norm(system.X(sol.y[: count * dim, -1].reshape(count, dim)), axis=1)
    return arclength, area, final_speed


def estimate_growth(system, rest_point, r_max, n_angles=128, budget=30.0, delta=None, samples=601):
    """Volume of intrinsic balls on the unstable manifold and a fitted exponential rate."""
    delta = delta or system.tolerances.detection_radius
    k = rest_point.morse_index
    radii = r_max * np.arange(1, 21) / 20.0
    result = {"rest_point": rest_point.label, "index": k, "radii": radii.tolist(), "warnings": []}
    if k == 0:
        result.update(volumes=[0.0] * len(radii), C=0.0, eg_pass=True, partial=False)
        result["warnings"].append("index 0: the unstable manifold is a point")
        return result
    if k > 2:
        result.update(volumes=None, C=None, eg_pass=True, partial=False)
        result["warnings"].append(f"index {k}: top-dimensional patch, nothing to verify")
        return result

    frame = rest_point.unstable_frame
    if k == 1:
        seeds = rest_point.position[None, :] + delta * np.array([[1.0], [-1.0]]) @ frame.T
        arclength, _, speed = _ray_growth(system, seeds, None, budget, samples)
        totals = delta + arclength[-1]
        volumes = np.array([np.sum(np.minimum(r, totals)) for r in radii])
        unfinished = (speed > 1e-6) & (totals < r_max)
    else:
        angles = 2.0 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
        unit = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        tangent_unit = np.stack([-np.sin(angles), np.cos(angles)], axis=1)
        seeds = rest_point.position[None, :] + delta * unit @ frame.T
        tangents = delta * tangent_unit @ frame.T
        arclength, area, speed = _ray_growth(system, seeds, tangents, budget, samples)
        d_angle = 2.0 * np.pi / n_angles
        volumes = []
        for r in radii:
            inner = math.pi * min(r, delta) ** 2
            swept = sum(
                np.interp(r - delta, arclength[:, j], area[:, j]) if r > delta else 0.0
                for j in range(n_angles)
            )
            volumes.append(inner + d_angle * swept)
        volumes = np.array(volumes)
        unfinished = (speed > 1e-6) & (delta + arclength[-1] < r_max)

    half = radii >= radii[len(radii) // 2]
    logs = np.log(np.maximum(volumes[half], 1e-300))
    slope, intercept = np.polyfit(radii[half], logs, 1)
    rms = float(np.sqrt(np.mean((slope * radii[half] + intercept - logs) ** 2)))
    partial = bool(np.any(unfinished))
    if partial:
        result["warnings"].append("time budget exhausted before r_max on some rays")
    result.update(
        volumes=volumes.tolist(),
        C=float(slope),
        fit_residual=rms,
        eg_pass=bool(np.isfinite(slope) and rms <= 0.5),
        partial=partial,
    )
    return result


def check_properties(system, rest_points, lyapunov=None, orbits=None, instanton_searches=None):
    """Summary of the standing hypotheses: hyperbolic rest points, Lyapunov
    form, nondegenerate closed trajectories and transversality evidence."""
    report = {"H": all(rp.hyperbolic for rp in rest_points)}
    if lyapunov is not None:
        report["L"] = lyapunov["is_lyapunov"]
    if orbits is not None:
        report["NCT"] = not orbits.degenerate
    if instanton_searches is not None:
        report["MS_evidence"] = all(s.complete and not s.warnings for s in instanton_searches)
    report["poincare_hopf"] = poincare_hopf_sum(rest_points)
    return report
