"""
Unit tests for torus_core.py
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
from v1.torus_core import (
    ClosedOneForm,
    HomotopyClass,
    LiftAmbiguityError,
    TorusDomain,
    pair_form_class,
    path_omega_integral,
    unwrap_path,
    winding_of_loop,
)


class TestTorusDomain:
    def test_dimension_range(self):
        with pytest.raises(ValueError):
            TorusDomain(4)
        with pytest.raises(ValueError):
            TorusDomain(0)

    def test_reduce_into_unit_cube(self):
        reduced = TorusDomain(2).reduce(np.array([[1.25, -0.25], [-1e-18, 3.0]]))
        assert np.allclose(reduced, [[0.25, 0.75], [0.0, 0.0]])
        assert np.all(reduced < 1.0) and np.all(reduced >= 0.0)

    def test_distance_wraps(self):
        d = TorusDomain(2).distance(np.array([0.95, 0.5]), np.array([0.05, 0.5]))
        assert abs(d - 0.1) < 1e-12


class TestHomotopyClass:
    def test_group_operations(self):
        a = HomotopyClass((1, -2))
        b = HomotopyClass((0, 3))
        assert a + b == HomotopyClass((1, 1))
        assert (-a).winding == (-1, 2)
        assert a.scale(3) == HomotopyClass((3, -6))
        assert HomotopyClass.zero(2).is_zero()

    def test_from_vector_rounds(self):
        assert HomotopyClass.from_vector([0.9999999, -2.0000001]) == HomotopyClass((1, -2))

    def test_hashable_and_ordered(self):
        classes = {HomotopyClass((1, 0)), HomotopyClass((1, 0)), HomotopyClass((0, 1))}
        assert len(classes) == 2
        assert sorted(classes)[0] == HomotopyClass((0, 1))


class TestClosedOneForm:
    def test_pair_with_class(self):
        """<[ω], γ> only sees the harmonic part"""
        omega = ClosedOneForm((1.0, 2.0), parse("cosp(x1)"))
        assert pair_form_class(omega, HomotopyClass((1, 0))) == 1.0
        assert pair_form_class(omega, HomotopyClass((3, -1))) == 1.0

    def test_exact_form_has_zero_class(self):
        omega = ClosedOneForm((0.0, 0.0), parse("sinp(x1) + cosp(x2)"))
        assert pair_form_class(omega, HomotopyClass((5, 7))) == 0.0

    def test_integrate_between(self):
        omega = ClosedOneForm((1.0, 0.0), parse("cosp(x2)"))
        value = omega.integrate_between([0.0, 0.0], [2.0, 0.5])
        assert abs(value - (2.0 + (-1.0 - 1.0))) < 1e-14

    def test_components(self):
        omega = ClosedOneForm((1.0, -1.0), parse("sinp(x1)"))
        comps = omega.components(np.array([[0.0, 0.3]]))
        assert abs(comps[0, 0] - (1.0 + 2 * math.pi)) < 1e-12
        assert abs(comps[0, 1] + 1.0) < 1e-15

    def test_edge_periods_sum_to_class_on_loop(self):
        """Periods of the edges of a closed lattice loop add up to <[ω], γ>"""
        omega = ClosedOneForm((0.5, 0.25), parse("sinp(x1)*cosp(x2)"))
        n = 10
        starts = np.stack([np.arange(n) / n, np.full(n, 0.3)], axis=1)
        vectors = np.tile([1.0 / n, 0.0], (n, 1))
        assert abs(np.sum(omega.edge_periods(starts, vectors)) - 0.5) < 1e-13


class TestPaths:
    def test_straight_loop_integral(self):
        """∫ω over the loop x1: 0 -> 1 equals ω's period"""
        omega = ClosedOneForm((0.7, 0.2), parse("cosp(x1)"))
        path = np.stack([np.linspace(0, 1, 101), np.zeros(101)], axis=1)
        assert abs(path_omega_integral(omega, path) - 0.7) < 1e-13

    def test_reduced_path_is_unwrapped(self):
        omega = ClosedOneForm((1.0, 0.0))
        lifted = np.stack([np.linspace(0, 2, 201), np.zeros(201)], axis=1)
        reduced = np.mod(lifted, 1.0)
        assert abs(path_omega_integral(omega, reduced, lifted=False) - 2.0) < 1e-12
        assert np.allclose(unwrap_path(reduced), lifted)

    def test_lift_ambiguity(self):
        omega = ClosedOneForm((1.0,))
        with pytest.raises(LiftAmbiguityError):
            path_omega_integral(omega, np.array([[0.0], [0.6]]))

    def test_winding_of_loop(self):
        loop = np.array([[0.1, 0.2], [0.6, 0.1], [1.1, -0.8]])
        assert winding_of_loop(loop) == HomotopyClass((1, -1))
        with pytest.raises(ValueError):
            winding_of_loop(np.array([[0.0, 0.0], [0.3, 0.0]]))
