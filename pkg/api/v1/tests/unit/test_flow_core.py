"""
Unit tests for flow_core.py

System files, integration, rest points, invariant-manifold patches and the
Lyapunov / growth checks.
"""

import pytest
import sys
import os
import math

import numpy as np

sys.path.insert(
    0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", ".."))
)

from v1.flow_core import (
    IntegrationError,
    SystemFileError,
    Tolerances,
    check_lyapunov,
    check_properties,
    estimate_growth,
    find_rest_points,
    integrate,
    integrate_batch,
    orient_qr,
    parse_system,
    poincare_hopf_sum,
    reverse_field,
    seed_invariant_manifold,
    state_transition,
    transport_frame,
)

GRADIENT = """
dim = 2
field = -grad omega
omega.harmonic = 0, 0
omega.potential = cosp(x1) + cosp(x2)
"""

CIRCLE_ORBITS = """
dim = 2
field.1 = 1
field.2 = sinp(x2)
omega.harmonic = -1, 0
"""


@pytest.fixture(scope="module")
def gradient():
    return parse_system(GRADIENT, name="gradient")


@pytest.fixture(scope="module")
def gradient_rest_points(gradient):
    return find_rest_points(gradient)


class TestParseSystem:
    """System-file reader and load-time checks"""

    def test_gradient_shorthand(self, gradient):
        assert gradient.dim == 2
        assert gradient.name == "gradient"
        assert gradient.describe()["field"] == "-grad omega"

    def test_gradient_field_values(self, gradient):
        """X = -grad(cosp(x1) + cosp(x2))"""
        p = np.array([[0.1, 0.3]])
        expected = 2 * math.pi * np.array([math.sin(2 * math.pi * 0.1), math.sin(2 * math.pi * 0.3)])
        assert np.max(np.abs(gradient.X(p)[0] - expected)) < 1e-12

    def test_component_field(self):
        system = parse_system(CIRCLE_ORBITS)
        assert system.describe()["field"] == ["1.0", "sinp(x2)"]
        assert abs(system.omega_of_X(np.array([0.2, 0.4]))[0] + 1.0) < 1e-15

    def test_comments_and_options(self):
        system = parse_system(CIRCLE_ORBITS + "option.t_max = 50  # shorter\noption.seed_grid = 8\n")
        assert system.tolerances.t_max == 50.0
        assert system.tolerances.seed_grid == 8

    def test_missing_dim(self):
        with pytest.raises(SystemFileError):
            parse_system("field.1 = 1\nomega.harmonic = 1\n")

    def test_unknown_key_reports_line(self):
        with pytest.raises(SystemFileError) as info:
            parse_system(CIRCLE_ORBITS + "colour = red\n")
        assert info.value.line == 6

    def test_duplicate_key(self):
        with pytest.raises(SystemFileError):
            parse_system(CIRCLE_ORBITS + "field.1 = 2\n")

    def test_unknown_option(self):
        with pytest.raises(SystemFileError):
            parse_system(CIRCLE_ORBITS + "option.speed = 3\n")

    def test_expression_error_position(self):
        text = "dim = 2\nfield.1 = 1 +\nfield.2 = 0\nomega.harmonic = 1, 0\n"
        with pytest.raises(SystemFileError) as info:
            parse_system(text)
        assert info.value.line == 2

    def test_non_periodic_field_rejected(self):
        text = "dim = 2\nfield.1 = x1\nfield.2 = 0\nomega.harmonic = 1, 0\n"
        with pytest.raises(SystemFileError, match="periodic"):
            parse_system(text)

    def test_vanishing_divisor_rejected(self):
        text = "dim = 1\nfield.1 = 1/sinp(x1)\nomega.harmonic = -1\n"
        with pytest.raises(SystemFileError, match="divides"):
            parse_system(text)

    def test_wrong_covector_length(self):
        with pytest.raises(SystemFileError):
            parse_system("dim = 2\nfield.1 = 1\nfield.2 = 0\nomega.harmonic = 1\n")

    def test_tolerance_override_is_typed(self):
        tol = Tolerances().override("hyperbolicity", "1e-5")
        assert tol.hyperbolicity == 1e-5
        with pytest.raises(KeyError):
            Tolerances().override("nothing", "1")


class TestIntegration:
    def test_constant_flow(self):
        system = parse_system("dim = 2\nfield.1 = 1\nfield.2 = 0\nomega.harmonic = -1, 0\n")
        traj = integrate(system, [0.2, 0.3], 2.5)
        assert np.max(np.abs(traj.end - [2.7, 0.3])) < 1e-10
        assert abs(traj.omega[-1] + 2.5) < 1e-10
        assert np.allclose(traj.lift_shift, [2.5, 0.0])

    def test_backward_direction(self):
        system = parse_system(CIRCLE_ORBITS)
        batch = integrate_batch(system, [[0.0, 0.0]], 1.5, direction=-1, samples=3)
        assert np.max(np.abs(batch.points[-1, 0] - [-1.5, 0.0])) < 1e-10
        assert abs(batch.omega[-1, 0] - 1.5) < 1e-10

    def test_forward_then_backward_returns(self):
        system = parse_system(CIRCLE_ORBITS)
        start = np.array([0.1, 0.3])
        there = integrate(system, start, 1.0)
        back = integrate(system, there.end, 1.0, direction=-1)
        assert np.max(np.abs(back.end - start)) < 1e-6
        assert abs(there.omega[-1] + back.omega[-1]) < 1e-8

    def test_omega_integral_matches_exact_form(self, gradient):
        """For an exact ω the carried integral is the potential difference"""
        traj = integrate(gradient, [0.1, 0.2], 3.0)
        exact = gradient.omega.integrate_between(traj.points[0], traj.end)
        assert abs(traj.omega[-1] - exact) < 1e-8

    def test_reverse_field(self, gradient):
        reversed_system = reverse_field(gradient)
        p = np.array([[0.2, 0.7]])
        assert np.allclose(reversed_system.X(p), -gradient.X(p))

    def test_state_transition_of_linear_direction(self):
        """Along x2 = 0 of (1, sinp(x2)) the transverse derivative grows like e^{2πT}"""
        system = parse_system(CIRCLE_ORBITS)
        end, phi = state_transition(system, np.array([0.0, 0.0]), 1.0)
        assert np.max(np.abs(end - [1.0, 0.0])) < 1e-10
        assert abs(phi[1, 1] - math.exp(2 * math.pi)) < 1e-6 * math.exp(2 * math.pi)

    def test_orient_qr_keeps_orientation(self):
        frame = np.array([[0.0, 2.0], [-3.0, 0.0]])
        q, r = orient_qr(frame)
        assert np.all(np.diag(r) > 0)
        assert np.sign(np.linalg.det(q)) == np.sign(np.linalg.det(frame))

    def test_transport_frame_growth(self):
        system = parse_system(CIRCLE_ORBITS)
        point, frame, log_growth = transport_frame(system, [0.0, 0.0], np.array([[0.0], [1.0]]), 2.0)
        assert abs(point[0] - 2.0) < 1e-9
        assert abs(log_growth[0] - 4 * math.pi) < 1e-6
        assert abs(abs(frame[1, 0]) - 1.0) < 1e-12

    def test_integration_error_carries_state(self):
        err = IntegrationError("stiff", last_state=np.zeros(2), time=1.0)
        assert err.time == 1.0
        assert isinstance(err, RuntimeError)


class TestRestPoints:
    """Classification on the exact gradient torus"""

    def test_four_hyperbolic_rest_points(self, gradient, gradient_rest_points):
        assert len(gradient_rest_points) == 4
        assert all(rp.hyperbolic for rp in gradient_rest_points)
        assert [rp.morse_index for rp in gradient_rest_points] == [0, 1, 1, 2]
        assert [rp.label for rp in gradient_rest_points] == [0, 1, 2, 3]

    def test_positions_on_half_lattice(self, gradient, gradient_rest_points):
        expected = {0: [[0.5, 0.5]], 1: [[0.0, 0.5], [0.5, 0.0]], 2: [[0.0, 0.0]]}
        for rp in gradient_rest_points:
            dists = [gradient.domain.distance(rp.position, np.array(e)) for e in expected[rp.morse_index]]
            assert min(dists) < 1e-10
            assert rp.residual < 1e-12

    def test_frames(self, gradient_rest_points):
        for rp in gradient_rest_points:
            assert rp.unstable_frame.shape == (2, rp.morse_index)
            assert rp.stable_frame.shape == (2, 2 - rp.morse_index)
            basis = np.column_stack([rp.unstable_frame, rp.stable_frame])
            assert abs(abs(np.linalg.det(basis)) - 1.0) < 1e-10

    def test_eigenvalues_of_saddle(self, gradient_rest_points):
        saddle = gradient_rest_points[1]
        values = sorted(v.real for v in saddle.eigenvalues)
        assert abs(values[0] + 4 * math.pi**2) < 1e-8
        assert abs(values[1] - 4 * math.pi**2) < 1e-8

    def test_poincare_hopf(self, gradient_rest_points):
        assert poincare_hopf_sum(gradient_rest_points) == 0

    def test_no_rest_points(self):
        assert find_rest_points(parse_system(CIRCLE_ORBITS)) == []

    def test_degenerate_rest_points_flagged(self):
        system = parse_system("dim = 2\nfield.1 = sinp(x1)^2\nfield.2 = sinp(x2)\nomega.harmonic = 0, 0\n")
        found = find_rest_points(system, seed_grid=8)
        assert found
        assert not any(rp.hyperbolic for rp in found)


class TestInvariantManifolds:
    def test_saddle_rays_reach_the_minimum(self, gradient, gradient_rest_points):
        saddle = gradient_rest_points[1]
        patch = seed_invariant_manifold(gradient, saddle, budget=10.0)
        assert patch.dimension == 1
        assert len(patch.seeds) == 2
        minimum = gradient_rest_points[0].position
        for j in range(2):
            end = patch.rays.points[-1, j]
            assert gradient.domain.distance(end, minimum) < 1e-6

    def test_stable_side_flows_backward(self, gradient, gradient_rest_points):
        saddle = gradient_rest_points[1]
        patch = seed_invariant_manifold(gradient, saddle, side="stable", budget=10.0)
        top = gradient_rest_points[3].position
        for j in range(2):
            assert gradient.domain.distance(patch.rays.points[-1, j], top) < 1e-6

    def test_bad_side(self, gradient, gradient_rest_points):
        with pytest.raises(ValueError):
            seed_invariant_manifold(gradient, gradient_rest_points[0], side="sideways")


class TestLyapunov:
    def test_gradient_is_lyapunov(self, gradient, gradient_rest_points):
        report = check_lyapunov(gradient, grid=32, rest_points=gradient_rest_points)
        assert report["is_lyapunov"] is True
        assert report["violation_count"] == 0
        assert report["c_estimate"] > 0

    def test_circle_orbits_is_lyapunov(self):
        report = check_lyapunov(parse_system(CIRCLE_ORBITS), grid=16, rest_points=[])
        assert report["is_lyapunov"] is True
        assert abs(report["max_omega_of_x"] + 1.0) < 1e-12

    def test_wrong_sign_is_reported(self):
        system = parse_system("dim = 2\nfield.1 = 1\nfield.2 = sinp(x2)\nomega.harmonic = 1, 0\n")
        report = check_lyapunov(system, grid=8, rest_points=[])
        assert report["is_lyapunov"] is False
        assert report["violation_count"] == 64
        assert len(report["violations"]) == 20


class TestGrowth:
    def test_index_zero_is_trivial(self, gradient, gradient_rest_points):
        result = estimate_growth(gradient, gradient_rest_points[0], 2.0)
        assert result["eg_pass"] is True
        assert result["volumes"] == [0.0] * 20

    def test_saddle_volume_is_bounded(self, gradient, gradient_rest_points):
        """Each unstable ray of a saddle has length 1/2 (saddle to minimum)"""
        result = estimate_growth(gradient, gradient_rest_points[1], 2.0)
        assert result["eg_pass"] is True
        assert abs(result["volumes"][-1] - 1.0) < 1e-3
        assert result["C"] < 1e-3

    def test_properties_summary(self, gradient, gradient_rest_points):
        lyap = check_lyapunov(gradient, grid=16, rest_points=gradient_rest_points)
        report = check_properties(gradient, gradient_rest_points, lyap)
        assert report == {"H": True, "L": True, "poincare_hopf": 0}
