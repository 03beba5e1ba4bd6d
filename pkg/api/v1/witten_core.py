"""
Discrete Witten deformation on an N x N grid of T^2

Pure numpy/scipy logic with no Flask or database dependencies.

Cochains live on vertices, edges (x-edges then y-edges) and faces of the
uniform grid. Operators are stored in orthonormal coordinates, where the
diagonal Hodge stars (h^2, 1, h^-2) are absorbed: D_k = star^{1/2} d_k star^{-1/2}.

Two twisted coboundaries are provided:
  gauge       e^{tΩ/2} f(head) - e^{-tΩ/2} f(tail) on edges and the matching
              face rule from local potentials; d_ω(t)^2 = 0 for every t.
  polynomial  d + tW with W the edge/face-averaged wedge with ω; the
              Laplacians are exactly quadratic in t.
Edge periods Ω are exact integrals of ω, so the discrete ω is closed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .flow_core import find_rest_points, integrate_batch
from .torus_core import ClosedOneForm


class SplitRejectedError(RuntimeError):
    def __init__(self, message, split=None):
        super().__init__(message)
        self.split = split


class QuadratureTailError(RuntimeError):
    pass


class RestPointPresentError(ValueError):
    pass


DENSE_LIMIT = 6000
RESOLUTION = 1e-9
REST_FREE_GRID = 256
REST_FREE_FLOOR = 1e-6


# ---------------------- Grid complex ----------------------
@dataclass
class GridComplex:
    """Combinatorics and geometry of the N x N periodic grid."""

    N: int
    h: float
    d0: sp.csr_matrix
    d1: sp.csr_matrix
    edge_tail: np.ndarray
    edge_head: np.ndarray
    edge_start: np.ndarray  # lifted start points (E, 2)
    edge_vector: np.ndarray  # (E, 2)
    face_edges: np.ndarray  # (F, 4) bottom, right, top, left
    face_corner: np.ndarray  # (F, 2) lower-left corner

    @property
    def sizes(self):
        return (self.N * self.N, 2 * self.N * self.N, self.N * self.N)

    def vertex_points(self):
        return self.face_corner.copy()

    def face_centers(self):
        return self.face_corner + 0.5 * self.h


def build_dec(N):
    """Incidence matrices and geometry of the periodic N x N grid."""
    if N < 2:
        raise ValueError("grid needs N >= 2")
    h = 1.0 / N
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    i, j = i.ravel(), j.ravel()

    def vid(a, b):
        return (a % N) * N + (b % N)

    nv = N * N
    tail = np.concatenate([vid(i, j), vid(i, j)])
    head = np.concatenate([vid(i + 1, j), vid(i, j + 1)])
    corner = np.stack([i * h, j * h], axis=1)
    start = np.vstack([corner, corner])
    vector = np.vstack([np.tile([h, 0.0], (nv, 1)), np.tile([0.0, h], (nv, 1))])
    ne = 2 * nv
    rows = np.concatenate([np.arange(ne), np.arange(ne)])
    d0 = sp.csr_matrix(
        (np.concatenate([np.ones(ne), -np.ones(ne)]), (rows, np.concatenate([head, tail]))), shape=(ne, nv)
    )
    bottom = vid(i, j)
    right = nv + vid(i + 1, j)
    top = vid(i, j + 1)
    left = nv + vid(i, j)
    face_edges = np.stack([bottom, right, top, left], axis=1)
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    d1 = sp.csr_matrix(
        (np.tile(signs, nv), (np.repeat(np.arange(nv), 4), face_edges.ravel())), shape=(nv, ne)
    )
    return GridComplex(N, h, d0, d1, tail, head, start, vector, face_edges, corner)


def edge_periods(dec, omega):
    return omega.edge_periods(dec.edge_start, dec.edge_vector)


def _gauge_coboundaries(dec, periods, t):
    ne, nv = dec.d0.shape
    half = 0.5 * t * periods
    rows = np.concatenate([np.arange(ne), np.arange(ne)])
    cols = np.concatenate([dec.edge_head, dec.edge_tail])
    vals = np.concatenate([np.exp(half), -np.exp(-half)])
    d0 = sp.csr_matrix((vals, (rows, cols)), shape=(ne, nv))

    ob, orr, ot, ol = (periods[dec.face_edges[:, c]] for c in range(4))
    h_face = (2.0 * ob + ol + orr) / 4.0
    mids = np.stack([ob / 2, ob + orr / 2, ol + ot / 2, ol / 2], axis=1)
    coeffs = np.exp(t * (mids - h_face[:, None])) * np.array([1.0, 1.0, -1.0, -1.0])
    nf = dec.face_edges.shape[0]
    d1 = sp.csr_matrix(
        (coeffs.ravel(), (np.repeat(np.arange(nf), 4), dec.face_edges.ravel())), shape=(nf, ne)
    )
    return d0, d1


def _wedge_operators(dec, periods):
    """W0 f(e) = Ω_e (f(head) + f(tail)) / 2 and the face-averaged ω ∧ a."""
    ne, nv = dec.d0.shape
    rows = np.concatenate([np.arange(ne), np.arange(ne)])
    cols = np.concatenate([dec.edge_head, dec.edge_tail])
    w0 = sp.csr_matrix((np.concatenate([periods, periods]) / 2.0, (rows, cols)), shape=(ne, nv))
    ob, orr, ot, ol = (periods[dec.face_edges[:, c]] for c in range(4))
    wx = (ob + ot) / 2.0
    wy = (ol + orr) / 2.0
    # ω∧a = ω_x a_y - ω_y a_x with a_x = (a_b + a_t)/2, a_y = (a_l + a_r)/2
    coeffs = np.stack([-wy / 2, wx / 2, -wy / 2, wx / 2], axis=1)
    nf = dec.face_edges.shape[0]
    w1 = sp.csr_matrix((coeffs.ravel(), (np.repeat(np.arange(nf), 4), dec.face_edges.ravel())), shape=(nf, ne))
    return w0, w1


def _laplacians(D0, D1):
    return [
        (D0.T @ D0).tocsr(),
        (D0 @ D0.T + D1.T @ D1).tocsr(),
        (D1 @ D1.T).tocsr(),
    ]


@dataclass
class WittenOperator:
    t: float
    model: str
    dec: GridComplex
    omega: ClosedOneForm
    D: list  # [D0, D1] orthonormal coordinates
    laplacians: list
    A: list
    B: list

    def laplacian_at(self, s):
        """Δ(0) + sA + s²B (exact for the polynomial model)."""
        base = _laplacians(self.dec.d0 / self.dec.h, self.dec.d1 / self.dec.h)
        return [(base[k] + s * self.A[k] + s * s * self.B[k]).tocsr() for k in range(3)]


def witten_operator(dec, omega, t, model="gauge"):
    if omega.dim != 2:
        raise ValueError("the grid complex is two-dimensional")
    if model not in ("gauge", "polynomial"):
        raise ValueError(f"unknown model {model!r}")
    periods = edge_periods(dec, omega)
    h = dec.h
    D0, D1 = dec.d0 / h, dec.d1 / h
    w0, w1 = _wedge_operators(dec, periods)
    V0, V1 = w0 / h, w1 / h
    A = [
        (D0.T @ V0 + V0.T @ D0).tocsr(),
        (D0 @ V0.T + V0 @ D0.T + D1.T @ V1 + V1.T @ D1).tocsr(),
        (D1 @ V1.T + V1 @ D1.T).tocsr(),
    ]
    B = [(V0.T @ V0).tocsr(), (V0 @ V0.T + V1.T @ V1).tocsr(), (V1 @ V1.T).tocsr()]
    if model == "gauge":
        g0, g1 = _gauge_coboundaries(dec, periods, t)
        Dt = [(g0 / h).tocsr(), (g1 / h).tocsr()]
    else:
        Dt = [(D0 + t * V0).tocsr(), (D1 + t * V1).tocsr()]
    return WittenOperator(float(t), model, dec, omega, Dt, _laplacians(*Dt), A, B)


# ---------------------- Spectra ----------------------
def _degree_spectrum(matrix, count, method):
    size = matrix.shape[0]
    if method == "dense" or (method == "auto" and size <= DENSE_LIMIT) or count >= size - 1:
        vals, vecs = eigh(matrix.toarray())
        return np.maximum(vals, 0.0), vecs, True
    k = min(count, size - 2)
    ncv = None
    for _ in range(2):
        try:
            vals, vecs = eigsh(matrix, k=k, sigma=-1.0, which="LM", ncv=ncv)
            order = np.argsort(vals)
            return np.maximum(vals[order], 0.0), vecs[:, order], False
        except ArpackNoConvergence:
            ncv = min(size - 1, 4 * k + 20)
    raise RuntimeError("sparse eigensolver did not converge")


@dataclass
class SpectralSplit:
    t: float
    theta: float
    gap_ratio: float
    accepted: bool
    eigenvalues: list  # per degree, ascending (full or partial)
    small_vectors: list  # per degree, (size_k, s_k) orthonormal coordinates
    small_values: list
    small_counts: list
    complete: list  # per degree: full spectrum computed
    targets: list | None = None
    warnings: list = field(default_factory=list)

    @property
    def matches_targets(self):
        return self.targets is None or list(self.small_counts) == list(self.targets)

    def describe(self, max_values=40):
        return {
            "t": self.t,
            "theta": self.theta,
            "gap_ratio": self.gap_ratio,
            "accepted": self.accepted,
            "small_counts": list(self.small_counts),
            "targets": self.targets,
            "matches_targets": self.matches_targets,
            "small_eigenvalues": [list(map(float, v)) for v in self.small_values],
            "lowest_eigenvalues": [list(map(float, v[:max_values])) for v in self.eigenvalues],
            "warnings": list(self.warnings),
        }


def choose_split(values, t, min_ratio=10.0, resolution=RESOLUTION):
    """Largest multiplicative gap of the merged spectrum meeting [1e-6 t, 10 t]."""
    merged = np.sort(np.concatenate([np.asarray(v, dtype=float) for v in values]))
    lo = max(1e-6 * t, resolution)
    hi = max(10.0 * t, 10.0 * lo)
    best = None
    prev = 0.0
    for v in merged:
        if prev < hi and v > lo:
            ratio = v / max(prev, resolution)
            if best is None or ratio > best[0]:
                a, b = max(prev, lo), min(v, hi)
                best = (ratio, math.sqrt(a * b))
        prev = v
    if best is None:
        # whole spectrum below the window
        return math.inf, max(prev, lo) * 2.0, False
    ratio, theta = best
    return float(ratio), float(theta), ratio >= min_ratio


def spectral_split(op, targets=None, method="auto", extra=8, min_ratio=10.0, strict=False):
    """Split each Laplacian's spectrum at one common threshold θ."""
    sizes = [m.shape[0] for m in op.laplacians]
    counts = [(targets[k] if targets else 4) + extra for k in range(3)]
    while True:
        spectra = [_degree_spectrum(op.laplacians[k], counts[k], method) for k in range(3)]
        ratio, theta, accepted = choose_split([s[0] for s in spectra], op.t, min_ratio)
        short = [k for k in range(3) if not spectra[k][2] and spectra[k][0][-1] <= theta]
        if not short:
            break
        for k in short:
            counts[k] = min(sizes[k], 2 * counts[k])
    small_values, small_vectors = [], []
    for vals, vecs, _ in spectra:
        mask = vals < theta
        small_values.append(vals[mask])
        small_vectors.append(vecs[:, mask])
    split = SpectralSplit(
        t=op.t,
        theta=theta,
        gap_ratio=ratio,
        accepted=accepted,
        eigenvalues=[s[0] for s in spectra],
        small_vectors=small_vectors,
        small_values=small_values,
        small_counts=[int(v.shape[1]) for v in small_vectors],
        complete=[s[2] for s in spectra],
        targets=list(targets) if targets is not None else None,
    )
    if not accepted:
        split.warnings.append(f"no spectral gap: best ratio {ratio:.3g} < {min_ratio}")
        if strict:
            raise SplitRejectedError("no spectral gap", split)
    if not split.matches_targets:
        split.warnings.append(f"small counts {split.small_counts} differ from rest-point counts {split.targets}")
    return split


def twisted_kernel_dims(xi, t, grid=16, threshold=1e-6):
    """Near-kernel dimensions of the gauge Laplacians for the harmonic form tξ."""
    op = witten_operator(build_dec(grid), ClosedOneForm(tuple(float(v) for v in xi)), t)
    dims = []
    for lap in op.laplacians:
        vals = eigh(lap.toarray(), eigvals_only=True)
        dims.append(int(np.sum(vals < threshold)))
    return dims


# ---------------------- Whitney interpolation ----------------------
def _cell(dec, points):
    scaled = np.mod(np.asarray(points, dtype=float), 1.0) / dec.h
    idx = np.floor(scaled).astype(int) % dec.N
    frac = scaled - np.floor(scaled)
    return idx[:, 0], idx[:, 1], frac[:, 0], frac[:, 1]


def whitney_zero(dec, points):
    """Sparse (P, V) matrix: bilinear interpolation of vertex values."""
    i, j, s, r = _cell(dec, points)
    N = dec.N
    vid = lambda a, b: (a % N) * N + (b % N)
    cols = np.stack([vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)], axis=1)
    vals = np.stack([(1 - s) * (1 - r), s * (1 - r), (1 - s) * r, s * r], axis=1)
    rows = np.repeat(np.arange(len(i)), 4)
    return sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(len(i), N * N))


def whitney_one(dec, points, vectors):
    """Sparse (P, E) matrix: Whitney 1-form paired with the given vectors."""
    i, j, s, r = _cell(dec, points)
    N, h = dec.N, dec.h
    nv = N * N
    vid = lambda a, b: (a % N) * N + (b % N)
    vectors = np.asarray(vectors, dtype=float)
    cols = np.stack([vid(i, j), vid(i, j + 1), nv + vid(i, j), nv + vid(i + 1, j)], axis=1)
    vals = np.stack(
        [vectors[:, 0] * (1 - r), vectors[:, 0] * r, vectors[:, 1] * (1 - s), vectors[:, 1] * s], axis=1
    ) / h
    rows = np.repeat(np.arange(len(i)), 4)
    return sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(len(i), 2 * nv))


def cochain_scales(dec):
    """Factors taking orthonormal coordinates to cochain values per degree."""
    return (1.0 / dec.h, 1.0, dec.h)


# ---------------------- Integration map ----------------------
@dataclass
class IntegrationMap:
    t: float
    matrices: list  # per degree (n_k, s_k)
    labels: list  # per degree rest-point labels (rows)
    diagnostics: dict = field(default_factory=dict)

    def describe(self):
        return {
            "t": self.t,
            "labels": self.labels,
            "matrices": [m.tolist() for m in self.matrices],
            "diagnostics": self.diagnostics,
        }


def _ray_functional(system, dec, rest_point, direction_sign, t, weight_floor=1e-12, chunk=2.0, t_cap=200.0):
    """Row vector r with r @ c1 = ∫ e^{t h} c1(X) dτ along one unstable ray."""
    delta = system.tolerances.detection_radius
    x = rest_point.position
    u = direction_sign * rest_point.unstable_frame[:, 0]
    grid_speed = float(np.max(np.linalg.norm(system.X(dec.face_centers()), axis=1)))
    dt = dec.h / (8.0 * max(grid_speed, 1e-6))
    n_edges = dec.sizes[1]
    total = sp.csr_matrix((1, n_edges))

    # straight segment from the rest point to the seed
    s = np.linspace(0.0, 1.0, 17)
    pts = x[None, :] + s[:, None] * delta * u[None, :]
    w = np.exp(t * system.omega.integrate_between(np.repeat(x[None, :], len(pts), 0), pts))
    q = np.full(len(s), s[1] - s[0])
    q[[0, -1]] *= 0.5
    rows = whitney_one(dec, pts, np.repeat(delta * u[None, :], len(pts), 0))
    total = total + sp.csr_matrix((q * w)[None, :]) @ rows

    point = x + delta * u
    elapsed, weight, tail = 0.0, 1.0, None
    while elapsed < t_cap:
        samples = max(3, int(math.ceil(chunk / dt)) + 1)
        batch = integrate_batch(system, point, chunk, samples=samples)
        traj = batch.points[:, 0, :]
        h_vals = system.omega.integrate_between(np.repeat(x[None, :], len(traj), 0), traj)
        w = np.exp(t * h_vals)
        vel = system.X(traj)
        q = np.full(len(traj), batch.times[1] - batch.times[0])
        q[[0, -1]] *= 0.5
        total = total + sp.csr_matrix((q * w)[None, :]) @ whitney_one(dec, traj, vel)
        point = traj[-1]
        elapsed += chunk
        weight = float(w[-1])
        speed = float(np.linalg.norm(vel[-1]))
        if weight < weight_floor:
            tail = weight
            break
        if speed < 1e-10:
            tail = 0.0
            break
    if tail is None:
        raise QuadratureTailError(
            f"ray from rest point {rest_point.label} still carries weight {weight:.3g} after {t_cap}"
        )
    return direction_sign * total, tail


def _face_assignment(system, dec, sources, t_cap=100.0, chunk=5.0, radius=1e-6):
    """Backward-flow every face centre; returns (source index or -1, lifted source) per face."""
    centers = dec.face_centers()
    positions = np.array([rp.position for rp in sources])
    current = centers.copy()
    owner = np.full(len(centers), -1)
    lifted = np.zeros_like(centers)
    active = np.arange(len(centers))
    elapsed = 0.0
    while len(active) and elapsed < t_cap:
        batch = integrate_batch(system, current[active], chunk, direction=-1, samples=2)
        current[active] = batch.points[-1]
        elapsed += chunk
        diff = current[active][:, None, :] - positions[None, :, :]
        shift = np.round(diff)
        dist = np.linalg.norm(diff - shift, axis=2)
        nearest = np.argmin(dist, axis=1)
        hit = dist[np.arange(len(active)), nearest] < radius
        for a, s_idx in zip(active[hit], nearest[hit]):
            owner[a] = s_idx
            lifted[a] = positions[s_idx] + np.round(current[a] - positions[s_idx])
        active = active[~hit]
    return owner, lifted


def integration_map(system, dec, split, rest_points, t):
    """Int_k: small k-forms -> R^{X_k} by weighted integration over unstable manifolds."""
    if system.dim != 2:
        raise ValueError("the integration map is built on 2-tori")
    by_degree = [[rp for rp in rest_points if rp.hyperbolic and rp.morse_index == k] for k in range(3)]
    scales = cochain_scales(dec)
    cochains = [split.small_vectors[k] * scales[k] for k in range(3)]
    matrices = []
    diagnostics = {"ray_tail_weights": {}, "unassigned_faces": 0}

    if by_degree[0]:
        pts = np.array([rp.position for rp in by_degree[0]])
        matrices.append(np.asarray(whitney_zero(dec, pts) @ cochains[0]))
    else:
        matrices.append(np.zeros((0, cochains[0].shape[1])))

    rows = []
    for rp in by_degree[1]:
        plus, tail_p = _ray_functional(system, dec, rp, 1.0, t)
        minus, tail_m = _ray_functional(system, dec, rp, -1.0, t)
        diagnostics["ray_tail_weights"][str(rp.label)] = [tail_p, tail_m]
        rows.append(np.asarray((plus + minus) @ cochains[1]).ravel())
    matrices.append(np.array(rows).reshape(len(by_degree[1]), cochains[1].shape[1]))

    sources = by_degree[2]
    if sources:
        owner, lifted = _face_assignment(system, dec, sources)
        diagnostics["unassigned_faces"] = int(np.sum(owner < 0))
        centers = dec.face_centers()
        rows = []
        for s_idx, rp in enumerate(sources):
            mask = owner == s_idx
            h_vals = np.atleast_1d(system.omega.integrate_between(lifted[mask], centers[mask])) if mask.any() else np.zeros(0)
            sigma = np.sign(np.linalg.det(rp.unstable_frame))
            weights = sigma * np.exp(t * h_vals)
            rows.append(weights @ cochains[2][mask] if mask.any() else np.zeros(cochains[2].shape[1]))
        matrices.append(np.array(rows))
    else:
        matrices.append(np.zeros((0, cochains[2].shape[1])))

    labels = [[rp.label for rp in group] for group in by_degree]
    return IntegrationMap(float(t), matrices, labels, diagnostics)


def small_differentials(op, split):
    """G_k = E_{k+1}^T D_k(t) E_k, the twisted differential on the small subcomplex."""
    return [split.small_vectors[k + 1].T @ (op.D[k] @ split.small_vectors[k]) for k in range(2)]


def chain_map_residual(intmap, G, delta):
    """Relative ||Int G - δ Int|| per degree; delta[k] is the (n_{k+1}, n_k) matrix."""
    out = []
    for k in range(2):
        lhs = intmap.matrices[k + 1] @ G[k]
        rhs = delta[k] @ intmap.matrices[k]
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300)
        out.append(float(np.linalg.norm(lhs - rhs) / scale) if scale > 1e-300 else 0.0)
    return out


# ---------------------- Torsion ----------------------
def log_torsion(spectra, kernel_tol=1e-10):
    """½ Σ_k k (-1)^{k+1} log det' over the given eigenvalue lists;
    eigenvalues at or below kernel_tol count as kernel."""
    total = 0.0
    for k, vals in enumerate(spectra):
        vals = np.asarray(vals, dtype=float)
        if vals.size == 0:
            continue
        positive = vals[vals > kernel_tol]
        total += 0.5 * k * (-1) ** (k + 1) * float(np.sum(np.log(positive)))
    return total


def _positive_split(vals, vecs, kernel_tol):
    mask = np.asarray(vals) > kernel_tol
    return vecs[:, mask], int(np.sum(~mask))


def complex_laplacians(delta, counts):
    """Laplacians of a finite cochain complex given its differentials."""
    laps = []
    for k, n in enumerate(counts):
        lap = np.zeros((n, n))
        if k < len(delta) and delta[k].size:
            lap += delta[k].T @ delta[k]
        if k >= 1 and delta[k - 1].size:
            lap += delta[k - 1] @ delta[k - 1].T
        laps.append(lap)
    return laps


def torsion_report(op, split, intmap=None, G=None, delta_dynamic=None, zeta_value=None, r_value=None):
    """Analytic, small and large torsions; with an integration map also log Vol
    and the torsion of the transported complex, and the exact identity between them."""
    t = op.t
    large = [vals[vals >= split.theta] for vals in split.eigenvalues]
    top = max(1.0, max(float(np.max(v)) for v in split.eigenvalues if len(v)))
    kernel_tol = 1e-10 * top
    log_an = log_torsion(split.eigenvalues, kernel_tol)
    log_sm = log_torsion(split.small_values, kernel_tol)
    log_la = log_torsion(large, kernel_tol)
    report = {
        "t": t,
        "theta": split.theta,
        "log_T_an": log_an,
        "log_T_sm": log_sm,
        "log_T_la": log_la,
        "splitting_residual": abs(log_an - log_sm - log_la),
        "complete_spectrum": all(split.complete),
        "warnings": [],
    }
    if not all(split.complete):
        report["warnings"].append("analytic torsion uses a partial spectrum")
    if intmap is None:
        if zeta_value is not None:
            # rest-point-free fields: log T_an + tR - Z(t)
            report["zeta_value"] = zeta_value
            report["combination"] = log_an + t * (r_value or 0.0) - zeta_value
        return report

    counts = [m.shape[0] for m in intmap.matrices]
    if counts != split.small_counts:
        raise SplitRejectedError(f"small counts {split.small_counts} differ from rest-point counts {counts}", split)
    G = G if G is not None else small_differentials(op, split)
    transported = [
        intmap.matrices[k + 1] @ G[k] @ np.linalg.inv(intmap.matrices[k]) if counts[k] and counts[k + 1] else np.zeros((counts[k + 1], counts[k]))
        for k in range(2)
    ]
    laps_x = complex_laplacians(transported, counts)
    spectra_x, vecs_x = [], []
    for lap in laps_x:
        if lap.size:
            vals, vecs = np.linalg.eigh(lap)
        else:
            vals, vecs = np.zeros(0), np.zeros((0, 0))
        spectra_x.append(vals)
        vecs_x.append(vecs)
    log_x = log_torsion(spectra_x, kernel_tol)

    log_vol = 0.0
    kernels_v, kernels_x = [], []
    for k in range(3):
        if counts[k] == 0:
            kernels_v.append(0)
            kernels_x.append(0)
            continue
        e_plus = np.eye(counts[k])
        e_plus, ker_v = _positive_split(split.small_values[k], e_plus, kernel_tol)
        q_plus, ker_x = _positive_split(spectra_x[k], vecs_x[k], kernel_tol)
        kernels_v.append(ker_v)
        kernels_x.append(ker_x)
        if ker_v != ker_x:
            raise SplitRejectedError(f"kernel dimensions differ in degree {k}: {ker_v} vs {ker_x}", split)
        if e_plus.shape[1] == 0:
            continue
        alpha = q_plus.T @ intmap.matrices[k] @ e_plus
        log_vol += (-1) ** k * float(np.log(abs(np.linalg.det(alpha))))

    report.update(
        log_vol=log_vol,
        log_T_X=log_x,
        identity_residual=abs((log_sm - log_x) - log_vol),
        kernel_dims=kernels_v,
    )
    if delta_dynamic is not None:
        report["log_T_X_dynamic"] = log_torsion(
            [np.linalg.eigvalsh(lap) if lap.size else np.zeros(0) for lap in complex_laplacians(delta_dynamic, counts)],
            kernel_tol,
        )
        report["chain_map_residual"] = chain_map_residual(intmap, G, delta_dynamic)
    if zeta_value is not None:
        combo = log_an - log_x - zeta_value
        if r_value is not None:
            combo -= t * r_value
        report["zeta_value"] = zeta_value
        report["combination"] = combo
    return report


# ---------------------- R-invariant ----------------------
def r_invariant(system, n_quad=512, rest_points=None):
    """(1/2π) ∫ ω ∧ dθ_X with θ_X the angle of a rest-point-free field."""
    if system.dim != 2:
        raise ValueError("the R-invariant is computed on 2-tori")
    axis = np.arange(REST_FREE_GRID) / REST_FREE_GRID
    nodes = np.stack([m.ravel() for m in np.meshgrid(axis, axis, indexing="ij")], axis=1)
    smallest = float(np.min(np.linalg.norm(system.X(nodes), axis=1)))
    if smallest <= REST_FREE_FLOOR:
        raise RestPointPresentError(
            f"min |X| = {smallest:.3g} on a {REST_FREE_GRID}^2 grid; the R-invariant needs a rest-point-free field"
        )
    if rest_points is None:
        rest_points = find_rest_points(system)
    if rest_points:
        raise RestPointPresentError(
            f"X has {len(rest_points)} rest points; the R-invariant needs a rest-point-free field"
        )
    axis = (np.arange(n_quad) + 0.5) / n_quad
    pts = np.stack([m.ravel() for m in np.meshgrid(axis, axis, indexing="ij")], axis=1)
    X = system.X(pts)
    J = system.jacobian(pts)
    norm2 = np.sum(X**2, axis=1)
    # dθ_j = (X1 ∂_j X2 - X2 ∂_j X1) / |X|^2
    dtheta = (X[:, 0:1] * J[:, 1, :] - X[:, 1:2] * J[:, 0, :]) / norm2[:, None]
    w = system.omega.components(pts)
    integrand = w[:, 0] * dtheta[:, 1] - w[:, 1] * dtheta[:, 0]
    return float(np.mean(integrand) / (2.0 * math.pi))
