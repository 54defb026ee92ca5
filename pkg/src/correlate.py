# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""Correlation functions involving the decorated spin.

The partial trace C(config) = Σ_S0 S0 exp(H) is expanded in the monomial basis of the legs,
C = (⊗ V^(s_i)) α. The coefficients α turn a decorated correlator into a linear combination
of correlators of the undecorated model.

Two normalizations are offered. `alpha_coefficients` expands C itself; its partners are
cavity correlators, taken with the hosting cell's Boltzmann factor removed but the full
partition function kept. `conditional_alpha_coefficients` expands C/W; its partners are
ordinary expectation values of the effective model.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Mapping, Tuple, Union

import numpy as np
from constants import KRON_ENTRY_CAP, LOG_FLOAT_MAX
from scipy.special import logsumexp
from spincore import (
    ComputationError,
    Legs,
    MultiIndex,
    NodeConvention,
    ValidationError,
    dimension,
    linear_index,
    moment_array,
    multi_index_at,
)
from startransform import DecoratedCell, WeightRangeError, cell_energies, log_boltzmann_weights
from vanderm import build_kron_float, inverse_kron_float

logger = logging.getLogger(__name__)


class MissingCorrelatorError(ComputationError):
    """Raised when a non-zero coefficient has no matching effective correlator."""


@dataclass(frozen=True)
class AlphaCoefficients:
    """Expansion coefficients α indexed by multi-index, in linear order."""

    legs: Legs
    convention: NodeConvention
    entries: Tuple[float, ...]

    def __post_init__(self):
        entries = tuple(float(a) for a in self.entries)
        if len(entries) != dimension(self.legs):
            raise ValidationError(
                f"Alpha vector needs {dimension(self.legs)} entries, got {len(entries)}."
            )
        object.__setattr__(self, "legs", tuple(self.legs))
        object.__setattr__(self, "entries", entries)

    def __getitem__(self, exponents: Tuple[int, ...]) -> float:
        return self.entries[linear_index(MultiIndex(self.legs, tuple(exponents)))]

    def as_array(self) -> np.ndarray:
        """Return the entries as a float array."""
        return np.array(self.entries)

    def expand(self) -> np.ndarray:
        """Return Σ_n α_n Π σ_i^{n_i} for every configuration."""
        return build_kron_float(self.legs, self.convention) @ self.as_array()

    def terms(self) -> Iterator[Tuple[MultiIndex, float]]:
        """Yield (multi-index, α) for every entry."""
        for position, value in enumerate(self.entries):
            yield multi_index_at(self.legs, position), value


def _signed_log_trace(cell: DecoratedCell) -> Tuple[np.ndarray, np.ndarray]:
    energies = cell_energies(cell)
    mu = moment_array(cell.central, cell.central_convention)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs, sign = logsumexp(
            energies, axis=1, b=np.broadcast_to(mu, energies.shape), return_sign=True
        )
    sign = np.where(np.isfinite(log_abs), sign, 0.0)
    return log_abs, sign


def correlation_vector(cell: DecoratedCell) -> np.ndarray:
    """Return C(config) = Σ_μ μ exp(H(μ, config)) for every leg configuration.

    Raises:
        WeightRangeError: |C| overflows a double.
    """
    log_abs, sign = _signed_log_trace(cell)
    finite = np.isfinite(log_abs)
    if np.any(log_abs[finite] > LOG_FLOAT_MAX):
        raise WeightRangeError(f"Correlation vector overflows: max log |C| = {log_abs.max():.6g}.")
    return np.where(finite, sign * np.exp(np.where(finite, log_abs, 0.0)), 0.0)


def alpha_coefficients(cell: DecoratedCell, cap: int = KRON_ENTRY_CAP) -> AlphaCoefficients:
    """Return α = (⊗ Ṽ^(s_i)) C."""
    inverse = inverse_kron_float(cell.legs, cell.convention, cap)
    return AlphaCoefficients(cell.legs, cell.convention, tuple(inverse @ correlation_vector(cell)))


def conditional_alpha_coefficients(
    cell: DecoratedCell, cap: int = KRON_ENTRY_CAP
) -> AlphaCoefficients:
    """Return α' = (⊗ Ṽ^(s_i)) (C / W), the expansion of the S0 mean given the legs."""
    log_abs, sign = _signed_log_trace(cell)
    finite = np.isfinite(log_abs)
    ratio = np.where(
        finite, sign * np.exp(np.where(finite, log_abs, 0.0) - log_boltzmann_weights(cell)), 0.0
    )
    inverse = inverse_kron_float(cell.legs, cell.convention, cap)
    return AlphaCoefficients(cell.legs, cell.convention, tuple(inverse @ ratio))


def decorated_correlator(
    alpha: AlphaCoefficients,
    effective_correlators: Mapping[Union[Tuple[int, ...], MultiIndex], float],
    atol: float = 0.0,
) -> float:
    """Return ⟨S0 s_k1...s_kr⟩ = Σ_n α_n ⟨s_k1...s_kr Π s_i^{n_i}⟩.

    Args:
        alpha: coefficients of the cell hosting S0.
        effective_correlators: expectation per multi-index, keyed by exponent tuple or
            `MultiIndex`. Use cavity values with `alpha_coefficients` and ordinary values
            with `conditional_alpha_coefficients`.
        atol: coefficients with |α| <= atol may lack a correlator.

    Raises:
        MissingCorrelatorError: A coefficient above `atol` has no correlator.
    """
    supplied = {
        (key.exponents if isinstance(key, MultiIndex) else tuple(key)): float(value)
        for key, value in effective_correlators.items()
    }
    total = 0.0
    for idx, value in alpha.terms():
        if value == 0.0:
            continue
        if idx.exponents not in supplied:
            if abs(value) <= atol:
                continue
            raise MissingCorrelatorError(
                f"No effective correlator for multi-index {idx.exponents} (alpha = {value:.6g})."
            )
        total += value * supplied[idx.exponents]
    return total
