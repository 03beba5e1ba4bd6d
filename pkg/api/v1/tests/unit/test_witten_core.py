"""
Unit tests for witten_core.py

Grid complex, the two twisted coboundaries, spectral splitting, torsion
bookkeeping and the R-invariant.
"""

import pytest
import sys
import os
import math

import numpy as np

sys.path.insert(
    0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", ".."))
)

from v1.fieldspec_core import parse
from v1.flow_core import find_rest_points, parse_system
from v1.instanton_core import search_all_pairs
from v1.novikov_core import assemble_complex, instanton_counting
from v1.torus_core import ClosedOneForm
from v1.witten_core import (
    IntegrationMap,
    RestPointPresentError,
    build_dec,
    chain_map_residual,
    choose_split,
    cochain_scales,
    complex_laplacians,
    edge_periods,
    integration_map,
    log_torsion,
    r_invariant,
    small_differentials,
    spectral_split,
    torsion_report,
    twisted_kernel_dims,
    whitney_one,
    whitney_zero,
    witten_operator,
)

GRADIENT = """
dim = 2
field = -grad omega
omega.harmonic = 0, 0
omega.potential = cosp(x1) + cosp(x2)
"""

ROTATING = """
dim = 2
field.1 = cosp(x2)
field.2 = sinp(x2)
omega.harmonic = 0.7, 0.2
"""

TILTED = ClosedOneForm((1.0, 0.0), parse("0.25*sinp(x1) + 0.2*cosp(x2)"))

TILTED_SYSTEM = """
dim = 2
field = -grad omega
omega.harmonic = 1, 0
omega.potential = 0.25*sinp(x1) + 0.2*cosp(x2)
"""


@pytest.fixture(scope="module")
def gradient():
    return parse_system(GRADIENT, name="gradient")


@pytest.fixture(scope="module")
def gradient_rest_points(gradient):
    return find_rest_points(gradient)


def sparse_max(matrix):
    return float(abs(matrix).max()) if matrix.nnz else 0.0


class TestGridComplex:
    def test_sizes(self):
        dec = build_dec(5)
        assert dec.sizes == (25, 50, 25)
        assert dec.d0.shape == (50, 25)
        assert dec.d1.shape == (25, 50)
        assert cochain_scales(dec) == (5.0, 1.0, 0.2)

    def test_coboundary_squares_to_zero(self):
        dec = build_dec(7)
        assert sparse_max(dec.d1 @ dec.d0) == 0.0

    def test_too_small(self):
        with pytest.raises(ValueError):
            build_dec(1)

    def test_edge_periods_are_closed(self):
        """Around every face the periods add up to zero"""
        dec = build_dec(8)
        periods = edge_periods(dec, TILTED)
        assert np.max(np.abs(dec.d1 @ periods)) < 1e-14

    def test_whitney_zero_interpolates(self):
        dec = build_dec(4)
        values = np.arange(16, dtype=float)
        at_vertices = whitney_zero(dec, dec.vertex_points()) @ values
        assert np.allclose(at_vertices, values)
        rows = whitney_zero(dec, np.random.default_rng(1).random((10, 2)))
        assert np.allclose(np.asarray(rows.sum(axis=1)).ravel(), 1.0)

    def test_whitney_one_reproduces_constant_forms(self):
        dec = build_dec(6)
        cochain = edge_periods(dec, ClosedOneForm((0.3, -0.5)))
        rng = np.random.default_rng(2)
        pts, vecs = rng.random((12, 2)), rng.normal(size=(12, 2))
        paired = whitney_one(dec, pts, vecs) @ cochain
        assert np.allclose(paired, 0.3 * vecs[:, 0] - 0.5 * vecs[:, 1])


class TestWittenOperator:
    def test_gauge_model_is_a_complex(self):
        op = witten_operator(build_dec(12), TILTED, 3.0, model="gauge")
        D0, D1 = op.D
        assert sparse_max(D1 @ D0) < 1e-9 * sparse_max(D1) * sparse_max(D0)

    def test_polynomial_model_is_quadratic_in_t(self):
        t = 2.5
        op = witten_operator(build_dec(10), TILTED, t, model="polynomial")
        for k, lap in enumerate(op.laplacian_at(t)):
            assert sparse_max(lap - op.laplacians[k]) < 1e-9 * max(1.0, sparse_max(lap))

    def test_zero_t_is_the_hodge_laplacian(self):
        dec = build_dec(8)
        op = witten_operator(dec, TILTED, 0.0)
        assert sparse_max(op.laplacians[0] - (dec.d0.T @ dec.d0) / dec.h**2) < 1e-9

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            witten_operator(build_dec(4), ClosedOneForm((1.0, 0.0, 0.0)), 1.0)
        with pytest.raises(ValueError):
            witten_operator(build_dec(4), TILTED, 1.0, model="cubic")


class TestSpectralSplit:
    def test_choose_split_window(self):
        ratio, theta, accepted = choose_split([[1e-12], [1e-12, 1e-12], [1e-12, 50.0, 60.0]], 1.0)
        assert accepted is True
        assert ratio > 1e10
        assert abs(theta - math.sqrt(1e-6 * 10.0)) < 1e-15

    def test_spectrum_below_window(self):
        ratio, _, accepted = choose_split([[1e-12, 1e-11]], 1.0)
        assert ratio == math.inf
        assert accepted is False

    @pytest.mark.parametrize("t", [2.0, 4.0, 8.0])
    def test_exact_gradient_splits_like_rest_points(self, t):
        op = witten_operator(build_dec(16), ClosedOneForm((0.0, 0.0), parse("cosp(x1) + cosp(x2)")), t)
        split = spectral_split(op, targets=[1, 2, 1])
        assert split.accepted is True
        assert split.small_counts == [1, 2, 1]
        assert split.matches_targets
        assert all(split.complete)

    def test_twisted_kernels(self):
        assert twisted_kernel_dims([0.0, 0.0], 3.0, grid=8) == [1, 2, 1]
        assert twisted_kernel_dims([1.0, 0.5], 3.0, grid=8) == [0, 0, 0]


    @pytest.mark.slow
    def test_gap_ratio_grows_with_t(self):
        dec = build_dec(48)
        omega = ClosedOneForm((0.0, 0.0), parse("cosp(x1) + cosp(x2)"))
        ratios = []
        for t in (6.0, 10.0, 14.0):
            split = spectral_split(witten_operator(dec, omega, t), targets=[1, 2, 1])
            assert split.accepted is True
            assert split.small_counts == [1, 2, 1]
            assert split.gap_ratio >= 10.0
            ratios.append(split.gap_ratio)
        assert ratios[0] < ratios[1] < ratios[2]

class TestTorsion:
    def test_log_torsion(self):
        spectra = [[2.0], [2.0, 3.0], [3.0, 0.0]]
        assert abs(log_torsion(spectra) - 0.5 * math.log(2.0 / 3.0)) < 1e-14

    def test_complex_laplacians(self):
        delta = [np.array([[1.0], [2.0]]), np.array([[2.0, -1.0]])]
        laps = complex_laplacians(delta, [1, 2, 1])
        assert laps[0].tolist() == [[5.0]]
        assert np.allclose(laps[1], np.array([[1.0, 2.0], [2.0, 4.0]]) + np.array([[4.0, -2.0], [-2.0, 1.0]]))
        assert laps[2].tolist() == [[5.0]]

    def test_chain_map_residual(self):
        intmap = IntegrationMap(1.0, [np.eye(1), np.diag([2.0, 1.0]), np.eye(1)], [[0], [1, 2], [3]])
        G = [np.array([[1.0], [1.0]]), np.array([[1.0, -2.0]])]
        delta = [intmap.matrices[1] @ G[0], G[1] @ np.linalg.inv(intmap.matrices[1])]
        assert max(chain_map_residual(intmap, G, delta)) < 1e-15
        delta[0] = delta[0] * 1.5
        assert chain_map_residual(intmap, G, delta)[0] > 0.1

    def test_splitting_and_identity(self, gradient, gradient_rest_points):
        t = 2.0
        dec = build_dec(16)
        op = witten_operator(dec, gradient.omega, t)
        split = spectral_split(op, targets=[1, 2, 1])
        intmap = integration_map(gradient, dec, split, gradient_rest_points, t)
        assert [m.shape for m in intmap.matrices] == [(1, 1), (2, 2), (1, 1)]
        assert intmap.diagnostics["unassigned_faces"] == 0
        assert abs(intmap.matrices[0][0, 0]) > 0
        report = torsion_report(op, split, intmap, G=small_differentials(op, split))
        assert report["splitting_residual"] < 1e-8
        assert report["identity_residual"] < 1e-8
        assert report["kernel_dims"] == [1, 2, 1]

    @pytest.mark.slow
    def test_tilted_splitting_and_identity(self):
        system = parse_system(TILTED_SYSTEM, name="tilted_torus")
        rest_points = find_rest_points(system)
        t = 4.0
        dec = build_dec(24)
        op = witten_operator(dec, system.omega, t)
        split = spectral_split(op, targets=[1, 2, 1])
        assert split.accepted is True
        assert split.matches_targets
        intmap = integration_map(system, dec, split, rest_points, t)
        report = torsion_report(op, split, intmap, G=small_differentials(op, split))
        assert report["splitting_residual"] < 1e-8
        assert report["identity_residual"] < 1e-8
        assert report["kernel_dims"] == [0, 0, 0]

    @pytest.mark.slow
    def test_chain_map_residual_shrinks_under_refinement(self, gradient, gradient_rest_points):
        t = 10.0
        searches = search_all_pairs(gradient, gradient_rest_points, 10.0, shots=180)
        counting = {pair: instanton_counting(s) for pair, s in searches.items()}
        cx = assemble_complex(gradient_rest_points, counting, 2)
        delta = [cx.differential_at(k, t) for k in range(2)]
        residuals = []
        for N in (32, 64):
            dec = build_dec(N)
            op = witten_operator(dec, gradient.omega, t)
            split = spectral_split(op, targets=cx.counts())
            intmap = integration_map(gradient, dec, split, gradient_rest_points, t)
            residuals.append(max(chain_map_residual(intmap, small_differentials(op, split), delta)))
        assert residuals[0] / residuals[1] >= 1.8

    def test_rest_point_free_combination(self):
        t = 1.0
        op = witten_operator(build_dec(8), ClosedOneForm((0.7, 0.2)), t)
        split = spectral_split(op)
        report = torsion_report(op, split, zeta_value=0.25, r_value=0.7)
        assert abs(report["combination"] - (report["log_T_an"] + 0.7 - 0.25)) < 1e-12


class TestRInvariant:
    def test_rotating_frame(self):
        assert abs(r_invariant(parse_system(ROTATING), n_quad=128) - 0.7) < 1e-6

    def test_exact_form_gives_zero(self):
        system = parse_system(ROTATING.replace("omega.harmonic = 0.7, 0.2", "omega.harmonic = 0, 0\nomega.potential = sinp(x1)"))
        assert abs(r_invariant(system, n_quad=64)) < 1e-10

    def test_rest_points_rejected(self, gradient):
        with pytest.raises(RestPointPresentError):
            r_invariant(gradient, n_quad=16)

    def test_grid_check_runs_without_rest_point_list(self, gradient):
        with pytest.raises(RestPointPresentError, match="256"):
            r_invariant(gradient, n_quad=16, rest_points=[])
