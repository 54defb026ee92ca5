#!/usr/bin/env python3
# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.

"""Unit tests for spins, configurations and multi-indices."""

import unittest
from fractions import Fraction

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from spincore import (
    CouplingVector,
    LegConfiguration,
    MultiIndex,
    NodeConvention,
    SpinValue,
    ValidationError,
    configuration_at,
    dimension,
    iter_configurations,
    iter_multi_indices,
    linear_index,
    moments,
    monomial,
    monomial_matrix,
    multi_index_at,
)
from vanderm import build_kron

HALF, ONE, THREE_HALVES = SpinValue(1), SpinValue(2), SpinValue(3)

legs_strategy = st.lists(st.integers(min_value=1, max_value=4), min_size=1, max_size=3).map(
    lambda spins: tuple(SpinValue(s) for s in spins)
)


class TestSpinValue(unittest.TestCase):
    """Unit tests for SpinValue."""

    def test_from_string(self) -> None:
        """Test parsing of integral and half-odd spins."""
        self.assertEqual(SpinValue.from_string("3/2"), THREE_HALVES)
        self.assertEqual(SpinValue.from_string("1"), ONE)
        self.assertEqual(SpinValue.from_string("3/2").spin, Fraction(3, 2))

    def test_invalid_spin(self) -> None:
        """Test that zero, negative and non half-integer spins are rejected."""
        for bad in (0, -2, True, 1.5):
            with self.assertRaises(ValidationError):
                SpinValue(bad)
        for text in ("1/3", "0", "spin", "1/0"):
            with self.assertRaises(ValidationError):
                SpinValue.from_string(text)

    def test_properties(self) -> None:
        self.assertEqual(THREE_HALVES.moment_count, 4)
        self.assertFalse(THREE_HALVES.is_integral)
        self.assertTrue(ONE.is_integral)
        self.assertEqual(str(THREE_HALVES), "3/2")


class TestMoments(unittest.TestCase):
    """Unit tests for the node conventions."""

    def test_physical_moments(self) -> None:
        self.assertEqual(
            moments(THREE_HALVES), tuple(Fraction(n, 2) for n in (-3, -1, 1, 3))
        )
        self.assertEqual(moments(ONE), (-1, 0, 1))

    def test_normalized_moments(self) -> None:
        """Test that normalized nodes span [-1, 1]."""
        self.assertEqual(moments(HALF, NodeConvention.Normalized), (-1, 1))
        self.assertEqual(
            moments(THREE_HALVES, NodeConvention.Normalized),
            (-1, Fraction(-1, 3), Fraction(1, 3), 1),
        )

    def test_unknown_convention(self) -> None:
        with self.assertRaises(ValidationError):
            moments(ONE, "ising")


class TestLinearOrder(unittest.TestCase):
    """Unit tests for the mixed-radix ordering."""

    def test_linear_index_examples(self) -> None:
        """Test that leg 1 is the most significant digit."""
        legs = (ONE, ONE)
        self.assertEqual(linear_index(MultiIndex(legs, (1, 2))), 5)
        self.assertEqual(linear_index(LegConfiguration.from_values(legs, (-1, 0))), 1)
        self.assertEqual(linear_index(LegConfiguration.from_values(legs, (1, 1))), 8)

    def test_mixed_legs(self) -> None:
        legs = (HALF, ONE, THREE_HALVES)
        self.assertEqual(dimension(legs), 24)
        self.assertEqual(linear_index(MultiIndex(legs, (1, 0, 0))), 12)
        self.assertEqual(multi_index_at(legs, 23).exponents, (1, 2, 3))

    @given(legs_strategy, st.data())
    def test_position_round_trip(self, legs, data) -> None:
        """Test that linear_index inverts multi_index_at and configuration_at."""
        position = data.draw(st.integers(min_value=0, max_value=dimension(legs) - 1))
        self.assertEqual(linear_index(multi_index_at(legs, position)), position)
        self.assertEqual(linear_index(configuration_at(legs, position)), position)

    def test_iterators_follow_linear_order(self) -> None:
        legs = (HALF, ONE, THREE_HALVES)
        self.assertEqual(
            [linear_index(c) for c in iter_configurations(legs)], list(range(24))
        )
        self.assertEqual(
            [linear_index(idx) for idx in iter_multi_indices(legs)], list(range(24))
        )

    def test_out_of_range(self) -> None:
        """Test rejection of bad digits, positions and moment values."""
        with self.assertRaises(ValidationError):
            MultiIndex((ONE,), (3,))
        with self.assertRaises(ValidationError):
            MultiIndex((ONE, ONE), (0,))
        with self.assertRaises(ValidationError):
            multi_index_at((ONE,), 3)
        with self.assertRaises(ValidationError):
            LegConfiguration.from_values((ONE,), ("1/2",))
        with self.assertRaises(ValidationError):
            MultiIndex((), ())


class TestMonomial(unittest.TestCase):
    """Unit tests for monomials."""

    def test_monomial_values(self) -> None:
        """Test exact products, including 0^0 = 1."""
        legs = (ONE, THREE_HALVES)
        config = LegConfiguration.from_values(legs, (0, "-3/2"))
        self.assertEqual(monomial(config, MultiIndex(legs, (0, 3))), Fraction(-27, 8))
        self.assertEqual(monomial(config, MultiIndex(legs, (1, 0))), 0)
        self.assertEqual(monomial(config, MultiIndex(legs, (0, 0))), 1)

    def test_normalized_monomial(self) -> None:
        config = LegConfiguration.from_values((ONE,), (1,), NodeConvention.Normalized)
        self.assertEqual(
            monomial(config, MultiIndex((ONE,), (2,)), NodeConvention.Normalized), 1
        )

    def test_monomial_matrix_matches_kron(self) -> None:
        """Test that the entry-wise table equals the Kronecker product of V^(s)."""
        for conv in NodeConvention:
            legs = (HALF, ONE, THREE_HALVES)
            np.testing.assert_array_equal(
                monomial_matrix(legs, conv), build_kron(legs, conv).to_float()
            )

    def test_monomial_matrix_is_read_only(self) -> None:
        table = monomial_matrix((ONE,))
        with self.assertRaises(ValueError):
            table[0, 0] = 2.0


class TestCouplingVector(unittest.TestCase):
    """Unit tests for CouplingVector."""

    def test_from_terms(self) -> None:
        vector = CouplingVector.from_terms((ONE, ONE), NodeConvention.Physical, {(1, 1): 0.5})
        self.assertEqual(len(vector), 9)
        self.assertEqual(vector[(1, 1)], 0.5)
        self.assertEqual(vector.entries[4], 0.5)
        self.assertEqual(
            [(idx.exponents, value) for idx, value in vector.nonzero_terms()], [((1, 1), 0.5)]
        )

    def test_zeros(self) -> None:
        vector = CouplingVector.zeros((HALF, HALF), NodeConvention.Normalized)
        np.testing.assert_array_equal(vector.as_array(), np.zeros(4))
        self.assertIs(vector.convention, NodeConvention.Normalized)

    def test_invalid_vectors(self) -> None:
        """Test rejection of a wrong length and non-finite entries."""
        with self.assertRaises(ValidationError):
            CouplingVector((ONE,), NodeConvention.Physical, (0.0, 1.0))
        with self.assertRaises(ValidationError):
            CouplingVector((HALF,), NodeConvention.Physical, (0.0, float("nan")))


if __name__ == "__main__":
    unittest.main()
