# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""Brute-force ground truth for small decorated lattices.

Every sigma configuration and every joint state of the decorated spins is summed explicitly.
Cell energies come from `spincore.monomial_matrix`, independent of the Kronecker path used
by the transformation itself.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from constants import IDENTITY_TOL, MAX_ENUMERATED_STATES
from correlate import alpha_coefficients, conditional_alpha_coefficients, decorated_correlator
from mixedlattice import MixedModelParams, mixed_cell
from scipy.special import logsumexp
from spincore import (
    ComputationError,
    CouplingVector,
    NodeConvention,
    SpinValue,
    ValidationError,
    iter_multi_indices,
    moment_array,
    monomial_matrix,
)
from startransform import DecoratedCell, EffectiveCouplings, effective_couplings

logger = logging.getLogger(__name__)


class StateSpaceError(ComputationError):
    """Raised when a lattice has too many states to enumerate."""


@dataclass(frozen=True)
class CellPlacement:
    """A decorated cell attached to sigma sites; leg i sits on `sites[i]`."""

    cell: DecoratedCell
    sites: Tuple[int, ...]

    def __post_init__(self):
        sites = tuple(int(site) for site in self.sites)
        if len(sites) != len(self.cell.legs):
            raise ValidationError(
                f"Cell has {len(self.cell.legs)} legs but is placed on {len(sites)} sites."
            )
        if len(set(sites)) != len(sites):
            raise ValidationError(f"Cell sites must be distinct, got {sites}.")
        object.__setattr__(self, "sites", sites)


@dataclass(frozen=True)
class LatticeSpec:
    """Sigma sites of one spin plus decorated cells attached to them."""

    site_spin: SpinValue
    n_sites: int
    cells: Tuple[CellPlacement, ...]
    convention: NodeConvention = NodeConvention.Physical
    max_states: int = field(default=MAX_ENUMERATED_STATES, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "convention", NodeConvention(self.convention))
        if self.n_sites < 1:
            raise ValidationError(f"A lattice needs at least one site, got {self.n_sites}.")
        if not self.cells:
            raise ValidationError("A lattice needs at least one decorated cell.")
        for number, placement in enumerate(self.cells):
            for site in placement.sites:
                if not 0 <= site < self.n_sites:
                    raise ValidationError(f"Cell {number} references missing site {site}.")
            if any(leg != self.site_spin for leg in placement.cell.legs):
                raise ValidationError(f"Cell {number} legs must all be spin {self.site_spin}.")
            if placement.cell.convention is not self.convention:
                raise ValidationError(f"Cell {number} uses a different node convention.")
        if self.state_count > self.max_states:
            raise StateSpaceError(
                f"Lattice has {self.state_count} states, above the cap of {self.max_states}."
            )

    @property
    def sigma_state_count(self) -> int:
        """Return (2s+1)^n_sites."""
        return self.site_spin.moment_count**self.n_sites

    @property
    def state_count(self) -> int:
        """Return the sigma states times the joint decorated states."""
        return self.sigma_state_count * math.prod(
            placement.cell.central.moment_count for placement in self.cells
        )


@dataclass(frozen=True)
class IdentityCheck:
    """Outcome of one identity check."""

    name: str
    residual: float
    tolerance: float
    passed: bool


def _sigma_nodes(spec: LatticeSpec) -> np.ndarray:
    radix = spec.site_spin.moment_count
    return np.array(list(itertools.product(range(radix), repeat=spec.n_sites)), dtype=int)


def _cell_positions(spec: LatticeSpec, nodes: np.ndarray) -> List[np.ndarray]:
    positions = []
    for placement in spec.cells:
        radices = tuple(leg.moment_count for leg in placement.cell.legs)
        positions.append(np.ravel_multi_index(nodes[:, list(placement.sites)].T, radices))
    return positions


def _cell_energy_table(cell: DecoratedCell) -> np.ndarray:
    contracted = monomial_matrix(cell.legs, cell.convention) @ cell.couplings.as_array()
    energies = np.outer(contracted, moment_array(cell.central, cell.central_convention))
    if cell.s0_self_energy is not None:
        energies = energies + np.asarray(cell.s0_self_energy)
    return energies


def _joint_energies(spec: LatticeSpec) -> np.ndarray:
    """Return H over (sigma state, S0 of cell 1, ..., S0 of cell C)."""
    nodes = _sigma_nodes(spec)
    positions = _cell_positions(spec, nodes)
    n_cells = len(spec.cells)
    total = np.zeros((len(nodes),) + (1,) * n_cells)
    for axis, (placement, position) in enumerate(zip(spec.cells, positions)):
        per_state = _cell_energy_table(placement.cell)[position]
        shape = [len(nodes)] + [1] * n_cells
        shape[axis + 1] = per_state.shape[1]
        total = total + per_state.reshape(shape)
    logger.debug(f"Enumerating {total.size} decorated lattice states.")
    return total


def _site_products(spec: LatticeSpec, nodes: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    values = moment_array(spec.site_spin, spec.convention)
    product = np.ones(len(nodes))
    for site in sites:
        if not 0 <= site < spec.n_sites:
            raise ValidationError(f"Site {site} is outside 0..{spec.n_sites - 1}.")
        product = product * values[nodes[:, site]]
    return product


def _signed_mean(energies: np.ndarray, observable: np.ndarray, log_z: float, axis=None):
    # An exactly cancelling sum comes back as -inf or nan depending on the scipy release.
    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs, sign = logsumexp(energies, axis=axis, b=observable, return_sign=True)
    finite = np.isfinite(log_abs)
    return np.where(finite, sign * np.exp(np.where(finite, log_abs, 0.0) - log_z), 0.0)


def enumerate_decorated_Z(spec: LatticeSpec) -> float:  # noqa: N802
    """Return ln Z of the decorated lattice by summing over every state."""
    return float(logsumexp(_joint_energies(spec)))


def _effective_list(
    spec: LatticeSpec, effective: Optional[Sequence[EffectiveCouplings]]
) -> List[EffectiveCouplings]:
    if effective is None:
        return [effective_couplings(placement.cell) for placement in spec.cells]
    effective = list(effective)
    if len(effective) != len(spec.cells):
        raise ValidationError(
            f"Expected {len(spec.cells)} effective cells, got {len(effective)}."
        )
    for placement, couplings in zip(spec.cells, effective):
        if couplings.legs != placement.cell.legs:
            raise ValidationError("Effective couplings do not match their cell's legs.")
    return effective


def _effective_energies(
    spec: LatticeSpec,
    effective: Sequence[EffectiveCouplings],
    include_constants: bool = True,
    skip: Optional[int] = None,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    nodes = _sigma_nodes(spec)
    positions = _cell_positions(spec, nodes)
    energies = np.zeros(len(nodes))
    for number, (couplings, position) in enumerate(zip(effective, positions)):
        if number == skip:
            continue
        if include_constants:
            vector = couplings.as_array()
        else:
            vector = couplings.without_constant().as_array()
        table = monomial_matrix(couplings.legs, couplings.convention) @ vector
        energies = energies + table[position]
    return energies, positions


def enumerate_effective_Z(  # noqa: N802
    spec: LatticeSpec,
    effective: Optional[Sequence[EffectiveCouplings]] = None,
    include_constants: bool = True,
) -> float:
    """Return ln Z̃ of the undecorated lattice with one effective cell per decorated cell.

    Args:
        spec: the lattice.
        effective: couplings per cell; computed with `effective_couplings` when omitted.
        include_constants: keep each cell's J̃_{0...0}.
    """
    energies, _ = _effective_energies(spec, _effective_list(spec, effective), include_constants)
    return float(logsumexp(energies))


def enumerate_correlator(
    spec: LatticeSpec, sites: Sequence[int], decorated: Sequence[int] = ()
) -> float:
    """Return ⟨Π σ_sites Π S0_cells⟩ under the full decorated distribution.

    Args:
        spec: the lattice.
        sites: sigma site ids; repeats give powers.
        decorated: cell numbers whose central spin enters the product.
    """
    energies = _joint_energies(spec)
    nodes = _sigma_nodes(spec)
    shape = [len(nodes)] + [1] * len(spec.cells)
    observable = _site_products(spec, nodes, sites).reshape(shape)
    for number in decorated:
        if not 0 <= number < len(spec.cells):
            raise ValidationError(f"Cell {number} does not exist.")
        cell = spec.cells[number].cell
        axis_shape = [1] * len(shape)
        axis_shape[number + 1] = cell.central.moment_count
        observable = observable * moment_array(cell.central, cell.central_convention).reshape(
            axis_shape
        )
    observable = np.broadcast_to(observable, energies.shape)
    return float(_signed_mean(energies, observable, float(logsumexp(energies))))


def effective_correlators(
    spec: LatticeSpec,
    cell_id: int,
    sigma_sites: Sequence[int],
    cavity: bool = True,
    effective: Optional[Sequence[EffectiveCouplings]] = None,
) -> Dict[Tuple[int, ...], float]:
    """Return ⟨Π σ_k Π s_i^{n_i}⟩ of the effective model for every multi-index of a cell.

    The s_i are the sites of cell `cell_id`. With `cavity` the cell's own effective factor
    is dropped from the weights while Z keeps it.
    """
    if not 0 <= cell_id < len(spec.cells):
        raise ValidationError(f"Cell {cell_id} does not exist.")
    effective = _effective_list(spec, effective)
    full, positions = _effective_energies(spec, effective)
    log_z = float(logsumexp(full))
    energies = _effective_energies(spec, effective, skip=cell_id)[0] if cavity else full

    nodes = _sigma_nodes(spec)
    host = spec.cells[cell_id].cell
    monomials = monomial_matrix(host.legs, host.convention)[positions[cell_id]]
    observable = _site_products(spec, nodes, sigma_sites)[:, np.newaxis] * monomials
    means = _signed_mean(
        np.broadcast_to(energies[:, np.newaxis], observable.shape), observable, log_z, axis=0
    )
    return {
        idx.exponents: float(value) for idx, value in zip(iter_multi_indices(host.legs), means)
    }


def mixed_torus_spec(
    S: SpinValue, K: float, D: float, convention: NodeConvention = NodeConvention.Physical
) -> LatticeSpec:
    """Return the 2×2 periodic mixed spin-(1/2, S) lattice.

    Site (x, y) has id 2y + x. Each of the four plaquettes holds one spin S coupled to its
    corners, listed in cyclic order, so every cell sees all four sites.
    """
    cell = mixed_cell(MixedModelParams(S, K, D), convention)
    placements = []
    for y in range(2):
        for x in range(2):
            corners = ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1))
            placements.append(
                CellPlacement(cell, tuple(2 * (cy % 2) + (cx % 2) for cx, cy in corners))
            )
    return LatticeSpec(cell.legs[0], 4, tuple(placements), convention)


def chain_spec(cells: Sequence[DecoratedCell]) -> LatticeSpec:
    """Return cells on consecutive sites; each cell's first site is the previous cell's last."""
    cells = list(cells)
    if not cells:
        raise ValidationError("A chain needs at least one cell.")
    placements = []
    start = 0
    for cell in cells:
        placements.append(CellPlacement(cell, tuple(range(start, start + len(cell.legs)))))
        start += len(cell.legs) - 1
    return LatticeSpec(cells[0].legs[0], start + 1, tuple(placements), cells[0].convention)


def _relative_gap(direct: float, expanded: float) -> float:
    return abs(direct - expanded) / max(abs(direct), 1.0)


def verify_spec(
    spec: LatticeSpec,
    correlators: Optional[Sequence[Tuple[int, Sequence[int]]]] = None,
    tol: float = IDENTITY_TOL,
    gauge_shift: float = 1.0,
) -> List[IdentityCheck]:
    """Run the partition, correlation and gauge identities on a lattice.

    Args:
        spec: the lattice.
        correlators: (cell number, sigma sites) pairs naming ⟨S0 Π σ⟩ to check. Defaults to
            one first-order and one second-order correlator of cell 0.
        tol: largest accepted residual.
        gauge_shift: constant added to cell 0 for the gauge check.

    Returns:
        One `IdentityCheck` per identity, in the order run.
    """
    effective = _effective_list(spec, None)
    checks = []

    log_z = enumerate_decorated_Z(spec)
    constants = sum(couplings.constant for couplings in effective)
    log_z_eff = enumerate_effective_Z(spec, effective, include_constants=False)
    residual = abs(log_z - (constants + log_z_eff))
    checks.append(IdentityCheck("partition", residual, tol, residual <= tol))

    if correlators is None:
        sites = spec.cells[0].sites
        correlators = [(0, sites[:1])] + ([(0, (sites[0], sites[-1]))] if len(sites) > 1 else [])
    for cell_id, sigma_sites in correlators:
        cell = spec.cells[cell_id].cell
        label = f"cell {cell_id} sites {list(sigma_sites)}"
        direct = enumerate_correlator(spec, sigma_sites, decorated=(cell_id,))
        pairs = (
            ("correlation cavity", alpha_coefficients(cell), True),
            ("correlation conditional", conditional_alpha_coefficients(cell), False),
        )
        for name, alpha, cavity in pairs:
            expanded = decorated_correlator(
                alpha, effective_correlators(spec, cell_id, sigma_sites, cavity, effective)
            )
            residual = _relative_gap(direct, expanded)
            checks.append(IdentityCheck(f"{name} {label}", residual, tol, residual <= tol))

    shifted = list(effective)
    base = shifted[0].couplings
    shifted[0] = EffectiveCouplings(
        CouplingVector(
            base.legs, base.convention, (base.entries[0] + gauge_shift,) + base.entries[1:]
        )
    )
    residual = abs(
        enumerate_effective_Z(spec, shifted) - enumerate_effective_Z(spec, effective) - gauge_shift
    )
    checks.append(IdentityCheck("gauge", residual, tol, residual <= tol))

    for check in checks:
        verdict = "PASS" if check.passed else "FAIL"
        logger.info(f"{verdict} {check.name}: residual {check.residual:.3e}")
    return checks
