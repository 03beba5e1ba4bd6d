"""
Counting functions, Dirichlet series and the Novikov complex

Pure Python/numpy logic with no Flask or database dependencies.

Exponents are ω-descents: an instanton class α carries λ(α) = -ω(α) >= 0 and
a closed-trajectory class γ carries λ(γ) = -ξ(γ), so every series reads
sum c exp(-z λ) and converges for large real z.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class MissingPairError(ValueError):
    pass


class BettiMismatchError(RuntimeError):
    pass


def _exponent_key(value):
    return round(float(value), 10)


# ---------------------- Counting functions ----------------------
@dataclass
class CountingFunction:
    kind: str
    values: dict
    exponents: dict
    cutoff: float
    complete: bool = True
    source: int | None = None
    target: int | None = None

    def __call__(self, gamma):
        return self.values.get(gamma, 0)

    def support(self):
        return sorted(self.values, key=lambda g: (self.exponents[g], g.winding))

    def describe(self):
        return {
            "kind": self.kind,
            "from": self.source,
            "to": self.target,
            "cutoff": self.cutoff,
            "complete": self.complete,
            "entries": [
                {"class": list(g.winding), "value": self.values[g], "exponent": self.exponents[g]}
                for g in self.support()
            ],
        }


def instanton_counting(search):
    """I_{x,y}(α): sum of signs of instantons in class α."""
    values = defaultdict(int)
    exponents = {}
    for inst in search.instantons:
        values[inst.winding] += inst.sign
        exponents[inst.winding] = inst.descent
    return CountingFunction(
        "instanton", dict(values), exponents, search.cutoff, search.complete, search.source, search.target
    )


def orbit_counting(search):
    """𝓩(γ): sum of ε/p over nondegenerate closed trajectories in class γ."""
    values = defaultdict(Fraction)
    exponents = {}
    for orbit in search.orbits:
        if not orbit.nondegenerate:
            continue
        values[orbit.winding] += Fraction(orbit.epsilon, orbit.multiplicity)
        exponents[orbit.winding] = orbit.descent
    return CountingFunction(
        "orbit", dict(values), exponents, search.cutoff, search.terminated_by == "cutoff"
    )


# ---------------------- Dirichlet series ----------------------
@dataclass
class DirichletSeries:
    """sum_k c_k exp(-z λ_k) with λ ascending; class_terms keep the classes."""

    class_terms: list
    complete_up_to: float
    finite: bool = False
    terms: list = field(init=False)

    def __post_init__(self):
        grouped = defaultdict(Fraction)
        exps = {}
        for _, lam, coeff in self.class_terms:
            key = _exponent_key(lam)
            grouped[key] += Fraction(coeff)
            exps.setdefault(key, float(lam))
        self.terms = sorted(
            ((exps[k], c) for k, c in grouped.items() if c != 0), key=lambda t: t[0]
        )

    def evaluate(self, z):
        return eval_series(self, z)

    def describe(self):
        return {
            "complete_up_to": self.complete_up_to if math.isfinite(self.complete_up_to) else "inf",
            "finite": self.finite,
            "terms": [{"exponent": lam, "coefficient": c} for lam, c in self.terms],
        }


def laplace(cf):
    """Dirichlet series of a counting function, truncated at its cutoff."""
    class_terms = [
        (g, cf.exponents[g], cf.values[g])
        for g in cf.support()
        if cf.exponents[g] <= cf.cutoff + 1e-12 and cf.values[g] != 0
    ]
    return DirichletSeries(class_terms, float(cf.cutoff))


def _fsum_complex(values):
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def eval_series(series, z):
    """Partial sum at z; terms added in ascending exponent with exact rounding."""
    z = complex(z)
    return _fsum_complex(float(c) * np.exp(-z * lam) for lam, c in series.terms)


def eval_twisted(series, xi1, z):
    """sum 𝓩(γ) exp(-ξ1(γ)) exp(-z λ(γ)) for a complex covector ξ1."""
    xi1 = np.asarray(xi1, dtype=complex)
    z = complex(z)
    ordered = sorted(series.class_terms, key=lambda t: t[1])
    return _fsum_complex(
        float(c) * np.exp(-np.dot(xi1, g.as_array()) - z * lam) for g, lam, c in ordered
    )


def abscissa_estimate(series, min_terms=8):
    """Estimate of the abscissa of absolute convergence from the known terms."""
    if series.finite:
        return -math.inf
    if len(series.terms) < min_terms:
        raise ValueError(f"abscissa estimate needs at least {min_terms} terms, got {len(series.terms)}")
    lams = np.array([lam for lam, _ in series.terms])
    sums = np.cumsum([abs(float(c)) for _, c in series.terms])
    half = len(lams) // 2
    upper = [math.log(sums[i]) / lams[i] for i in range(half, len(lams)) if lams[i] > 0 and sums[i] > 0]
    estimate = max(upper) if upper else 0.0
    if estimate > 0:
        return float(estimate)
    total = sums[-1]
    tail = [
        math.log(total - sums[i]) / lams[i]
        for i in range(half)
        if lams[i] > 0 and total - sums[i] > 0
    ]
    return float(max(tail)) if tail else float(estimate)


def convolve(first, second):
    """Product series; classes and exponents add, coefficients multiply."""
    terms = defaultdict(Fraction)
    exps = {}
    for g1, l1, c1 in first.class_terms:
        for g2, l2, c2 in second.class_terms:
            g = g1 + g2
            terms[g] += Fraction(c1) * Fraction(c2)
            exps[g] = l1 + l2
    lo1 = min((l for _, l, _ in first.class_terms), default=0.0)
    lo2 = min((l for _, l, _ in second.class_terms), default=0.0)
    complete = min(first.complete_up_to + max(lo2, 0.0), second.complete_up_to + max(lo1, 0.0))
    class_terms = [(g, exps[g], c) for g, c in sorted(terms.items(), key=lambda kv: (exps[kv[0]], kv[0].winding))]
    return DirichletSeries(class_terms, complete, first.finite and second.finite)


def gauge_shift(series, h_source, h_target):
    """Series for ω + dh: exponents shift by -(h(target) - h(source))."""
    shift = h_target - h_source
    return DirichletSeries(
        [(g, lam - shift, c) for g, lam, c in series.class_terms],
        series.complete_up_to - shift,
        series.finite,
    )


# ---------------------- Novikov complex ----------------------
@dataclass
class NovikovComplex:
    dim: int
    generators: dict  # degree -> list of rest-point labels
    entries: dict  # (u_label, v_label) -> DirichletSeries, deg u = deg v + 1
    searches: dict = field(default_factory=dict)

    def counts(self):
        return [len(self.generators.get(k, [])) for k in range(self.dim + 1)]

    def differential_at(self, k, t):
        """Matrix of δ_k(t): C^k -> C^{k+1}, shape (n_{k+1}, n_k)."""
        rows = self.generators.get(k + 1, [])
        cols = self.generators.get(k, [])
        out = np.zeros((len(rows), len(cols)))
        for i, u in enumerate(rows):
            for j, v in enumerate(cols):
                out[i, j] = eval_series(self.entries[(u, v)], t).real
        return out

    def describe(self):
        return {
            "dim": self.dim,
            "counts": self.counts(),
            "generators": {str(k): v for k, v in self.generators.items()},
            "entries": [
                {"from": u, "to": v, "series": s.describe()} for (u, v), s in sorted(self.entries.items())
            ],
        }


def assemble_complex(rest_points, searches, dim):
    """Complex over hyperbolic rest points; searches maps (u, v) labels to counting functions."""
    generators = defaultdict(list)
    for rp in rest_points:
        if rp.hyperbolic:
            generators[rp.morse_index].append(rp.label)
    entries = {}
    for k in range(dim):
        for u in generators.get(k + 1, []):
            for v in generators.get(k, []):
                if (u, v) not in searches:
                    raise MissingPairError(f"no instanton data for pair ({u}, {v})")
                entries[(u, v)] = laplace(searches[(u, v)])
    return NovikovComplex(dim, dict(generators), entries, dict(searches))


def check_delta_squared(cx):
    """Coefficients of δ∘δ, class by class, up to the guaranteed completeness."""
    worst = 0
    nonzero = []
    checked = 0
    for k in range(cx.dim - 1):
        for u in cx.generators.get(k + 2, []):
            for w in cx.generators.get(k, []):
                total = defaultdict(Fraction)
                exps = {}
                bound = math.inf
                for v in cx.generators.get(k + 1, []):
                    product = convolve(cx.entries[(u, v)], cx.entries[(v, w)])
                    bound = min(bound, product.complete_up_to)
                    for g, lam, c in product.class_terms:
                        total[g] += c
                        exps[g] = lam
                for g, c in total.items():
                    if exps[g] > bound + 1e-12:
                        continue
                    checked += 1
                    if c != 0:
                        nonzero.append({"from": u, "to": w, "class": list(g.winding), "coefficient": c})
                        worst = max(worst, abs(c))
    return {"ok": not nonzero, "checked_classes": checked, "max_abs_coefficient": worst, "nonzero": nonzero}


def rebase_complex(cx, potential=None, flips=None):
    """Complex for ω + dh and re-oriented generators.

    potential maps labels to h(label); flips maps labels to ±1. The matrices
    at t are conjugated by diag(flip(u) exp(t h(u))).
    """
    potential = potential or {}
    flips = flips or {}
    entries = {}
    for (u, v), series in cx.entries.items():
        shifted = gauge_shift(series, potential.get(u, 0.0), potential.get(v, 0.0))
        sign = flips.get(u, 1) * flips.get(v, 1)
        entries[(u, v)] = DirichletSeries(
            [(g, lam, sign * c) for g, lam, c in shifted.class_terms], shifted.complete_up_to, shifted.finite
        )
    return NovikovComplex(cx.dim, cx.generators, entries, cx.searches)


def euler_characteristic(cx):
    return sum((-1) ** k * n for k, n in enumerate(cx.counts()))


# ---------------------- Betti numbers and inequalities ----------------------
def twisted_betti_closed_form(xi, t, dim):
    """dim H^q(T^n; t ξ): binomial(n, q) for a trivial twist, else 0."""
    trivial = t == 0 or not np.any(np.asarray(xi, dtype=float))
    return [math.comb(dim, q) if trivial else 0 for q in range(dim + 1)]


def twisted_betti(xi, t, grid=16, threshold=1e-6):
    """Closed form, cross-checked against the near-kernel of the discrete
    Witten Laplacian on 2-tori."""
    xi = [float(v) for v in xi]
    dim = len(xi)
    closed = twisted_betti_closed_form(xi, t, dim)
    result = {"xi": xi, "t": float(t), "betti": closed, "spectral": None}
    if dim == 2:
        from .witten_core import twisted_kernel_dims

        spectral = twisted_kernel_dims(xi, t, grid=grid, threshold=threshold)
        result["spectral"] = spectral
        if spectral != closed:
            raise BettiMismatchError(f"closed form {closed} disagrees with spectral {spectral}")
    return result


def novikov_inequalities(counts, betti):
    """n_k >= β_k and the alternating (strong) inequalities; equality at the top degree."""
    counts = list(counts)
    betti = list(betti)
    weak = [{"k": k, "n": counts[k], "beta": betti[k], "ok": counts[k] >= betti[k]} for k in range(len(counts))]
    strong = []
    for r in range(len(counts)):
        lhs = sum((-1) ** (r - k) * counts[k] for k in range(r + 1))
        rhs = sum((-1) ** (r - k) * betti[k] for k in range(r + 1))
        ok = lhs == rhs if r == len(counts) - 1 else lhs >= rhs
        strong.append({"r": r, "lhs": lhs, "rhs": rhs, "ok": ok})
    return {
        "weak": weak,
        "strong": strong,
        "ok": all(w["ok"] for w in weak) and all(s["ok"] for s in strong),
        "note": "alternating sums are taken as sum_{k<=r} (-1)^(r-k) (n_k - beta_k) >= 0",
    }
