# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""Spins, leg configurations, multi-indices and coupling vectors.

Every table in the toolkit shares one ordering: a mixed-radix position with leg 1 as the
most significant digit. Configurations run over ascending moments and multi-indices over
ascending exponents, which is the row/column order of V^(s_1) ⊗ ... ⊗ V^(s_m).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)


class DecorationError(Exception):
    """Base exception for the decoration toolkit."""


class ValidationError(DecorationError, ValueError):
    """Raised when an input violates a documented precondition."""


class ComputationError(DecorationError, ArithmeticError):
    """Raised when a well-formed computation cannot be completed."""


class NodeConvention(Enum):
    """Layout of the 2s+1 magnetic moments of a spin."""

    Physical = "physical"
    Normalized = "normalized"


@dataclass(frozen=True)
class SpinValue:
    """A spin s, stored as the integer 2s so half-odd spins stay exact."""

    twice_spin: int

    def __post_init__(self):
        value = self.twice_spin
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            raise ValidationError(f"twice_spin must be a positive integer, got {value!r}.")
        object.__setattr__(self, "twice_spin", int(value))

    @classmethod
    def from_string(cls, text: str) -> "SpinValue":
        """Parse a spin written as "1/2", "1", "3/2", ..."""
        try:
            value = Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise ValidationError(f"Invalid spin: {text!r}.") from e
        if (2 * value).denominator != 1:
            raise ValidationError(f"Spin must be a multiple of 1/2, got {text!r}.")
        return cls(int(2 * value))

    @property
    def spin(self) -> Fraction:
        """Return s as an exact fraction."""
        return Fraction(self.twice_spin, 2)

    @property
    def moment_count(self) -> int:
        """Return 2s+1."""
        return self.twice_spin + 1

    @property
    def is_integral(self) -> bool:
        """Return True for integral s."""
        return self.twice_spin % 2 == 0

    def __str__(self) -> str:
        return str(self.spin)


Legs = Tuple[SpinValue, ...]


def _as_legs(legs: Sequence[SpinValue]) -> Legs:
    legs = tuple(legs)
    if not legs:
        raise ValidationError("At least one leg is required.")
    for leg in legs:
        if not isinstance(leg, SpinValue):
            raise ValidationError(f"Legs must be SpinValue instances, got {leg!r}.")
    return legs


def _as_convention(convention) -> NodeConvention:
    if isinstance(convention, NodeConvention):
        return convention
    try:
        return NodeConvention(convention)
    except ValueError as e:
        raise ValidationError(f"Unknown node convention: {convention!r}.") from e


def moments(s: SpinValue, conv: NodeConvention = NodeConvention.Physical) -> Tuple[Fraction, ...]:
    """Return the 2s+1 magnetic moments of `s` in ascending order.

    Physical nodes are x_j = -s-1+j for j = 1..2s+1. Normalized nodes are x_j/s and span
    [-1, 1]; for s = 1/2 they are the Ising values -1 and 1.
    """
    return _moments(s.twice_spin, _as_convention(conv))


@lru_cache(maxsize=None)
def _moments(twice_spin: int, conv: NodeConvention) -> Tuple[Fraction, ...]:
    nodes = tuple(Fraction(2 * j - twice_spin, 2) for j in range(twice_spin + 1))
    if conv is NodeConvention.Normalized:
        spin = Fraction(twice_spin, 2)
        nodes = tuple(node / spin for node in nodes)
    return nodes


def moment_array(s: SpinValue, conv: NodeConvention = NodeConvention.Physical) -> np.ndarray:
    """Return `moments` as a float array."""
    return np.array([float(node) for node in moments(s, conv)])


def dimension(legs: Sequence[SpinValue]) -> int:
    """Return Π (2s_i + 1), the length of every table indexed by `legs`."""
    return math.prod(leg.moment_count for leg in _as_legs(legs))


def _check_digits(legs: Legs, digits: Tuple[int, ...], what: str) -> None:
    if len(digits) != len(legs):
        raise ValidationError(f"Expected {len(legs)} {what}s, got {len(digits)}.")
    for position, (leg, digit) in enumerate(zip(legs, digits), start=1):
        if not 0 <= digit <= leg.twice_spin:
            raise ValidationError(
                f"{what} {digit} on leg {position} is outside 0..{leg.twice_spin}."
            )


@dataclass(frozen=True)
class MultiIndex:
    """Exponents n_1..n_m labelling the monomial Π σ_i^{n_i}."""

    legs: Legs
    exponents: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "legs", _as_legs(self.legs))
        object.__setattr__(self, "exponents", tuple(int(n) for n in self.exponents))
        _check_digits(self.legs, self.exponents, "exponent")


@dataclass(frozen=True)
class LegConfiguration:
    """Moments of every leg, stored as 0-based node positions in ascending order."""

    legs: Legs
    nodes: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "legs", _as_legs(self.legs))
        object.__setattr__(self, "nodes", tuple(int(j) for j in self.nodes))
        _check_digits(self.legs, self.nodes, "node")

    @classmethod
    def from_values(
        cls,
        legs: Sequence[SpinValue],
        values: Sequence[Union[Fraction, int, float, str]],
        conv: NodeConvention = NodeConvention.Physical,
    ) -> "LegConfiguration":
        """Build a configuration from moment values such as (-1, 0) or ("1/2", "-1/2")."""
        legs = _as_legs(legs)
        if len(values) != len(legs):
            raise ValidationError(f"Expected {len(legs)} moments, got {len(values)}.")
        nodes = []
        for position, (leg, value) in enumerate(zip(legs, values), start=1):
            options = moments(leg, conv)
            try:
                nodes.append(options.index(Fraction(value)))
            except ValueError as e:
                raise ValidationError(
                    f"{value!r} is not a {conv.value} moment of spin {leg} on leg {position}."
                ) from e
        return cls(legs, tuple(nodes))

    def values(self, conv: NodeConvention = NodeConvention.Physical) -> Tuple[Fraction, ...]:
        """Return the moment of every leg under `conv`."""
        return tuple(moments(leg, conv)[j] for leg, j in zip(self.legs, self.nodes))


def linear_index(idx: Union[MultiIndex, LegConfiguration]) -> int:
    """Return the mixed-radix position of `idx`, leg 1 most significant."""
    digits = idx.exponents if isinstance(idx, MultiIndex) else idx.nodes
    radices = tuple(leg.moment_count for leg in idx.legs)
    return int(np.ravel_multi_index(digits, radices))


def _unravel(legs: Legs, position: int) -> Tuple[int, ...]:
    size = dimension(legs)
    if not 0 <= position < size:
        raise ValidationError(f"Position {position} is outside 0..{size - 1}.")
    radices = tuple(leg.moment_count for leg in legs)
    return tuple(int(d) for d in np.unravel_index(position, radices))


def multi_index_at(legs: Sequence[SpinValue], position: int) -> MultiIndex:
    """Inverse of `linear_index` for multi-indices."""
    legs = _as_legs(legs)
    return MultiIndex(legs, _unravel(legs, position))


def configuration_at(legs: Sequence[SpinValue], position: int) -> LegConfiguration:
    """Inverse of `linear_index` for leg configurations."""
    legs = _as_legs(legs)
    return LegConfiguration(legs, _unravel(legs, position))


def iter_configurations(legs: Sequence[SpinValue]) -> Iterator[LegConfiguration]:
    """Yield every configuration of `legs` in linear order."""
    legs = _as_legs(legs)
    for nodes in itertools.product(*(range(leg.moment_count) for leg in legs)):
        yield LegConfiguration(legs, nodes)


def iter_multi_indices(legs: Sequence[SpinValue]) -> Iterator[MultiIndex]:
    """Yield every multi-index of `legs` in linear order."""
    legs = _as_legs(legs)
    for exponents in itertools.product(*(range(leg.moment_count) for leg in legs)):
        yield MultiIndex(legs, exponents)


def monomial(
    config: LegConfiguration, idx: MultiIndex, conv: NodeConvention = NodeConvention.Physical
) -> Fraction:
    """Return Π_i (moment_i)^{n_i} exactly, with 0^0 = 1."""
    if config.legs != idx.legs:
        raise ValidationError("Configuration and multi-index refer to different legs.")
    value = Fraction(1)
    for moment, exponent in zip(config.values(conv), idx.exponents):
        value *= moment**exponent
    return value


@lru_cache(maxsize=64)
def monomial_matrix(legs: Legs, conv: NodeConvention = NodeConvention.Physical) -> np.ndarray:
    """Return the float table monomial(config, idx), rows = configurations.

    Built entry by entry from `monomial`, independently of any Kronecker product.
    The returned array is read-only.
    """
    legs = _as_legs(legs)
    logger.debug(f"Building monomial table for legs {[str(leg) for leg in legs]}.")
    indices = list(iter_multi_indices(legs))
    table = np.array(
        [
            [float(monomial(config, idx, conv)) for idx in indices]
            for config in iter_configurations(legs)
        ]
    )
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class CouplingVector:
    """Coefficients indexed by multi-index, in units of β.

    Carries both the couplings J of a decorated cell and the effective couplings of its
    undecorated image. Entries follow `linear_index` order.
    """

    legs: Legs
    convention: NodeConvention
    entries: Tuple[float, ...]

    def __post_init__(self):
        legs = _as_legs(self.legs)
        entries = tuple(float(value) for value in self.entries)
        if len(entries) != dimension(legs):
            raise ValidationError(
                f"Coupling vector needs {dimension(legs)} entries, got {len(entries)}."
            )
        if not all(math.isfinite(value) for value in entries):
            raise ValidationError("Coupling entries must be finite.")
        object.__setattr__(self, "legs", legs)
        object.__setattr__(self, "convention", _as_convention(self.convention))
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(
        cls, legs: Sequence[SpinValue], convention: NodeConvention = NodeConvention.Physical
    ) -> "CouplingVector":
        """Return an all-zero vector."""
        return cls(tuple(legs), convention, (0.0,) * dimension(legs))

    @classmethod
    def from_terms(
        cls,
        legs: Sequence[SpinValue],
        convention: NodeConvention,
        terms: Mapping[Tuple[int, ...], float],
    ) -> "CouplingVector":
        """Build a vector from {exponents: value}; unspecified entries are zero."""
        legs = _as_legs(legs)
        values = [0.0] * dimension(legs)
        for exponents, value in terms.items():
            values[linear_index(MultiIndex(legs, tuple(exponents)))] = float(value)
        return cls(legs, convention, tuple(values))

    def __getitem__(self, exponents: Tuple[int, ...]) -> float:
        return self.entries[linear_index(MultiIndex(self.legs, tuple(exponents)))]

    def __len__(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        """Return the entries as a float array."""
        return np.array(self.entries)

    def nonzero_terms(self) -> Iterator[Tuple[MultiIndex, float]]:
        """Yield (multi-index, value) for every non-zero entry."""
        for position, value in enumerate(self.entries):
            if value != 0.0:
                yield multi_index_at(self.legs, position), value
