# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""The m-leg decoration transformation.

Tracing the central spin S0 out of a decorated cell leaves one associated Boltzmann weight
per leg configuration. Their logarithms, multiplied by the inverse Kronecker-Vandermonde
matrix, give the couplings of the effective undecorated cell.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from constants import KRON_ENTRY_CAP, LOG_FLOAT_MAX, LOG_FLOAT_MIN
from scipy.special import logsumexp
from spincore import (
    ComputationError,
    CouplingVector,
    Legs,
    NodeConvention,
    SpinValue,
    ValidationError,
    dimension,
    moment_array,
    monomial_matrix,
)
from vanderm import build_kron_float, inverse_kron_float

logger = logging.getLogger(__name__)


class WeightRangeError(ComputationError):
    """Raised when a weight leaves the range of a double."""


@dataclass(frozen=True)
class DecoratedCell:
    """A central spin S0 coupled to m peripheral legs.

    `couplings[n]` multiplies S0 * Π σ_i^{n_i}; the all-zero entry is a field on S0.
    `s0_self_energy` adds one energy per S0 moment (ascending), e.g. D * S0². The central
    moments follow `central_convention`, which defaults to the legs' convention.
    """

    central: SpinValue
    couplings: CouplingVector
    s0_self_energy: Optional[Tuple[float, ...]] = None
    central_convention: Optional[NodeConvention] = None

    def __post_init__(self):
        if not isinstance(self.central, SpinValue):
            raise ValidationError(f"Central spin must be a SpinValue, got {self.central!r}.")
        if not isinstance(self.couplings, CouplingVector):
            raise ValidationError("Cell couplings must be a CouplingVector.")
        if self.s0_self_energy is not None:
            energy = tuple(float(e) for e in self.s0_self_energy)
            if len(energy) != self.central.moment_count:
                raise ValidationError(
                    f"s0_self_energy needs {self.central.moment_count} entries for S0 = "
                    f"{self.central}, got {len(energy)}."
                )
            if not all(math.isfinite(e) for e in energy):
                raise ValidationError("s0_self_energy entries must be finite.")
            object.__setattr__(self, "s0_self_energy", energy)
        convention = self.central_convention or self.couplings.convention
        object.__setattr__(self, "central_convention", NodeConvention(convention))

    @property
    def legs(self) -> Legs:
        """Return the leg spins."""
        return self.couplings.legs

    @property
    def convention(self) -> NodeConvention:
        """Return the leg node convention."""
        return self.couplings.convention


@dataclass(frozen=True)
class WeightTable:
    """Associated Boltzmann weights, one per leg configuration in linear order."""

    legs: Legs
    convention: NodeConvention
    weights: Tuple[float, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != dimension(self.legs):
            raise ValidationError(
                f"Weight table needs {dimension(self.legs)} entries, got {len(weights)}."
            )
        if not all(math.isfinite(w) and w > 0.0 for w in weights):
            raise ValidationError("Weights must be finite and strictly positive.")
        object.__setattr__(self, "legs", tuple(self.legs))
        object.__setattr__(self, "weights", weights)

    def as_array(self) -> np.ndarray:
        """Return the weights as a float array."""
        return np.array(self.weights)


@dataclass(frozen=True)
class EffectiveCouplings:
    """Couplings J̃ of the undecorated cell; the all-zero entry is the constant term."""

    couplings: CouplingVector

    @property
    def legs(self) -> Legs:
        """Return the leg spins."""
        return self.couplings.legs

    @property
    def convention(self) -> NodeConvention:
        """Return the node convention."""
        return self.couplings.convention

    @property
    def constant(self) -> float:
        """Return J̃_{0...0}."""
        return self.couplings.entries[0]

    def without_constant(self) -> CouplingVector:
        """Return the couplings with the constant term set to zero."""
        return CouplingVector(self.legs, self.convention, (0.0,) + self.couplings.entries[1:])

    def __getitem__(self, exponents: Tuple[int, ...]) -> float:
        return self.couplings[exponents]

    def as_array(self) -> np.ndarray:
        """Return the entries as a float array."""
        return self.couplings.as_array()


def cell_energies(
    cell: DecoratedCell, field_on_s0: Optional[CouplingVector] = None
) -> np.ndarray:
    """Return H(S0, config) as a table: rows are leg configurations, columns S0 moments."""
    couplings = cell.couplings.as_array()
    if field_on_s0 is not None:
        if field_on_s0.legs != cell.legs or field_on_s0.convention != cell.convention:
            raise ValidationError("field_on_s0 must share the cell's legs and convention.")
        couplings = couplings + field_on_s0.as_array()
    contracted = build_kron_float(cell.legs, cell.convention) @ couplings
    energies = np.outer(contracted, moment_array(cell.central, cell.central_convention))
    if cell.s0_self_energy is not None:
        energies = energies + np.asarray(cell.s0_self_energy)
    return energies


def log_boltzmann_weights(
    cell: DecoratedCell, field_on_s0: Optional[CouplingVector] = None
) -> np.ndarray:
    """Return ln W(config), traced over S0 with a max-shifted exponential sum."""
    return logsumexp(cell_energies(cell, field_on_s0), axis=1)


def _check_log_range(log_weights: np.ndarray) -> None:
    high, low = float(np.max(log_weights)), float(np.min(log_weights))
    if high > LOG_FLOAT_MAX or low < LOG_FLOAT_MIN:
        raise WeightRangeError(
            f"Log weights span [{low:.6g}, {high:.6g}], outside the double range "
            f"[{LOG_FLOAT_MIN:.6g}, {LOG_FLOAT_MAX:.6g}]."
        )


def boltzmann_weights(
    cell: DecoratedCell, field_on_s0: Optional[CouplingVector] = None
) -> WeightTable:
    """Return W(config) = tr_S0 exp(H(S0, config)).

    Args:
        cell: the decorated cell.
        field_on_s0: extra couplings added to the cell's before the trace.

    Raises:
        WeightRangeError: A weight overflows or underflows a double.
    """
    log_weights = log_boltzmann_weights(cell, field_on_s0)
    _check_log_range(log_weights)
    logger.debug(
        f"Weights of a {len(cell.legs)}-leg cell span log range "
        f"[{log_weights.min():.6g}, {log_weights.max():.6g}]."
    )
    return WeightTable(cell.legs, cell.convention, tuple(np.exp(log_weights)))


def log_weight_vector(weights: WeightTable) -> np.ndarray:
    """Return R = ln W, elementwise.

    Raises:
        ValidationError: A weight is not strictly positive.
    """
    table = weights.as_array()
    if np.any(table <= 0.0):
        raise ValidationError("Log weight vector requires strictly positive weights.")
    return np.log(table)


def effective_couplings(cell: DecoratedCell, cap: int = KRON_ENTRY_CAP) -> EffectiveCouplings:
    """Return J̃ = (⊗ Ṽ^(s_i)) R for the cell.

    R is taken straight from the log-domain trace, so no weight is ever exponentiated.
    """
    log_weights = log_boltzmann_weights(cell)
    inverse = inverse_kron_float(cell.legs, cell.convention, cap)
    return EffectiveCouplings(
        CouplingVector(cell.legs, cell.convention, tuple(inverse @ log_weights))
    )


def spin_half_effective_couplings(weights: WeightTable) -> EffectiveCouplings:
    """Return J̃_n = 2^-m Σ_σ (Π σ_i^{n_i}) ln W(σ) for ±1 legs.

    Raises:
        ValidationError: A leg is not spin-1/2 or the convention is not Normalized.
    """
    if any(leg.twice_spin != 1 for leg in weights.legs):
        raise ValidationError("The spin-1/2 closed form needs every leg to be spin-1/2.")
    if weights.convention is not NodeConvention.Normalized:
        raise ValidationError("The spin-1/2 closed form needs Normalized (±1) legs.")
    signs = monomial_matrix(weights.legs, NodeConvention.Normalized)
    entries = signs.T @ log_weight_vector(weights) / 2 ** len(weights.legs)
    return EffectiveCouplings(
        CouplingVector(weights.legs, NodeConvention.Normalized, tuple(entries))
    )


def reconstruct_weights(effective: EffectiveCouplings) -> WeightTable:
    """Return W(config) = exp(Σ J̃_n Π σ_i^{n_i}).

    Raises:
        WeightRangeError: A weight overflows or underflows a double.
    """
    log_weights = build_kron_float(effective.legs, effective.convention) @ effective.as_array()
    _check_log_range(log_weights)
    return WeightTable(effective.legs, effective.convention, tuple(np.exp(log_weights)))


def partition_constant(effective: EffectiveCouplings, n_decorations: int) -> float:
    """Return N_d J̃_{0...0}, so that ln Z = N_d J̃_0 + ln Z̃."""
    if isinstance(n_decorations, bool) or not isinstance(n_decorations, int):
        raise ValidationError(f"n_decorations must be an integer, got {n_decorations!r}.")
    if n_decorations < 1:
        raise ValidationError(f"n_decorations must be positive, got {n_decorations}.")
    return n_decorations * effective.constant


def uniform_cell(
    central: SpinValue,
    legs: Sequence[SpinValue],
    coupling: float,
    convention: NodeConvention = NodeConvention.Physical,
    s0_self_energy: Optional[Sequence[float]] = None,
    central_convention: Optional[NodeConvention] = None,
) -> DecoratedCell:
    """Return a cell with `coupling` on every single-leg term S0 σ_i and nothing else."""
    legs = tuple(legs)
    terms = {
        tuple(int(i == leg) for i in range(len(legs))): coupling for leg in range(len(legs))
    }
    return DecoratedCell(
        central,
        CouplingVector.from_terms(legs, convention, terms),
        None if s0_self_energy is None else tuple(s0_self_energy),
        central_convention,
    )
