"""
Flat torus T^n = R^n / Z^n, closed 1-forms and homotopy classes

Pure numpy logic with no Flask or database dependencies. A closed 1-form is
stored as harmonic part (a constant covector, its cohomology class) plus an
exact part df with f a periodic expression, so its integral along any lifted
path is <a, end - start> + f(end) - f(start).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fieldspec_core import Num, jets, evaluate, to_text


class LiftAmbiguityError(ValueError):
    """A sampled path jumps by half a period or more between samples."""


@dataclass(frozen=True)
class TorusDomain:
    dim: int

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise ValueError(f"torus dimension must be 1, 2 or 3, got {self.dim}")

    def reduce(self, points):
        """Representatives in [0,1)^n."""
        reduced = np.mod(np.asarray(points, dtype=float), 1.0)
        # np.mod can return exactly 1.0 for tiny negative inputs
        reduced[reduced >= 1.0] = 0.0
        return reduced

    def reduced_difference(self, a, b):
        """a - b shifted by the nearest lattice vector."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return d - np.round(d)

    def distance(self, a, b):
        return np.linalg.norm(self.reduced_difference(a, b), axis=-1)

    @property
    def metric(self):
        return np.eye(self.dim)


@dataclass(frozen=True, order=True)
class HomotopyClass:
    """Element of pi_1(T^n) = Z^n."""

    winding: tuple[int, ...]

    @classmethod
    def from_vector(cls, vector):
        return cls(tuple(int(v) for v in np.rint(np.asarray(vector, dtype=float))))

    @classmethod
    def zero(cls, dim):
        return cls((0,) * dim)

    def __add__(self, other):
        return HomotopyClass(tuple(a + b for a, b in zip(self.winding, other.winding)))

    def __neg__(self):
        return HomotopyClass(tuple(-a for a in self.winding))

    def scale(self, k):
        return HomotopyClass(tuple(k * a for a in self.winding))

    def is_zero(self):
        return not any(self.winding)

    def as_array(self):
        return np.array(self.winding, dtype=float)


@dataclass(frozen=True, eq=False)
class ClosedOneForm:
    harmonic: tuple[float, ...]
    potential: object = field(default_factory=lambda: Num(0.0))

    @property
    def dim(self):
        return len(self.harmonic)

    def cohomology_class(self):
        return np.array(self.harmonic, dtype=float)

    def components(self, points, order=1):
        """Coefficients (P, n) of the form at the points; with order=2 also
        the Hessian (P, n, n) of the potential."""
        jet = jets(self.potential, points, order=order)
        comps = jet.grad + self.cohomology_class()[None, :]
        if order >= 2:
            return comps, jet.hess
        return comps

    def potential_values(self, points):
        return evaluate(self.potential, points)

    def integrate_between(self, start, end):
        """Integral along any path from lifted start to lifted end."""
        start = np.atleast_2d(np.asarray(start, dtype=float))
        end = np.atleast_2d(np.asarray(end, dtype=float))
        a = self.cohomology_class()
        value = (end - start) @ a + self.potential_values(end) - self.potential_values(start)
        return value if value.shape[0] > 1 else float(value[0])

    def edge_periods(self, starts, vectors):
        """Exact integrals over the straight segments starts -> starts + vectors."""
        starts = np.asarray(starts, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        return (
            vectors @ self.cohomology_class()
            + self.potential_values(starts + vectors)
            - self.potential_values(starts)
        )

    def describe(self):
        return {
            "harmonic": [float(v) for v in self.harmonic],
            "potential": to_text(self.potential),
        }


def pair_form_class(omega, gamma):
    """<[omega], gamma> for a homotopy class gamma."""
    return float(np.dot(omega.cohomology_class(), gamma.as_array()))


def unwrap_path(path):
    """Continuous lift of a path sampled in [0,1)^n."""
    path = np.asarray(path, dtype=float)
    steps = np.diff(path, axis=0)
    wrapped = steps - np.round(steps)
    if np.any(np.abs(wrapped) >= 0.5 - 1e-12):
        raise LiftAmbiguityError("consecutive samples are half a period apart")
    return np.vstack([path[:1], path[:1] + np.cumsum(wrapped, axis=0)])


def path_omega_integral(omega, path, lifted=True):
    """Integral of omega along a sampled path.

    With lifted=True the samples are points of R^n and consecutive samples
    must differ by less than 0.5 in every coordinate; otherwise the samples
    live in [0,1)^n and the lift is reconstructed.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or len(path) < 2:
        raise ValueError("path needs at least two samples")
    if lifted:
        if np.any(np.abs(np.diff(path, axis=0)) >= 0.5):
            raise LiftAmbiguityError("consecutive samples are half a period apart")
        lift = path
    else:
        lift = unwrap_path(path)
    return omega.integrate_between(lift[0], lift[-1])


def winding_of_loop(lifted_path, tol=1e-6):
    """Homotopy class of a closed lifted path."""
    lifted_path = np.asarray(lifted_path, dtype=float)
    shift = lifted_path[-1] - lifted_path[0]
    if np.max(np.abs(shift - np.round(shift))) > tol:
        raise ValueError("path does not close up on the torus")
    return HomotopyClass.from_vector(shift)
