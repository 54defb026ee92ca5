# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""Read cell and lattice files; render couplings, matrices and curves.

Cell file::

    {"central": 2, "legs": [1, 1], "convention": "normalized",
     "couplings": [{"index": [1, 0], "value": 1.0}],
     "s0_self_energy": [0.0, 0.0, 0.0], "central_convention": "physical"}

Spins are written as twice-spin integers. A lattice file is either
``{"builder": "mixed_torus", "S": 2, "K": 0.4, "D": -0.2}``,
``{"builder": "chain", "cells": [<cell>, ...]}`` or an explicit
``{"site_spin": 1, "n_sites": 3, "convention": ..., "cells": [<cell> + "sites"]}``,
where explicit cells take their legs from ``site_spin``. Any lattice file may add
``"correlators": [{"cell": 0, "sites": [0]}]``.
"""

import csv
import io
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from constants import FLOAT_FORMAT
from oracle import CellPlacement, LatticeSpec, chain_spec, mixed_torus_spec
from spincore import (
    CouplingVector,
    NodeConvention,
    SpinValue,
    ValidationError,
    iter_multi_indices,
)
from startransform import DecoratedCell
from vanderm import RationalMatrix

_logger = logging.getLogger(__name__)

Correlators = List[Tuple[int, Tuple[int, ...]]]


def format_float(value: float) -> str:
    """Render a float with enough digits to round-trip."""
    return format(float(value), FLOAT_FORMAT)


def format_fraction(value: Fraction) -> str:
    """Render an exact rational as "p/q", or "p" when integral."""
    return str(Fraction(value))


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        document = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise ValidationError(f"File not found: {path}.") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}.") from e
    if not isinstance(document, dict):
        raise ValidationError(f"{path} must hold a JSON object.")
    return document


def _spin(value: Any, what: str) -> SpinValue:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{what} must be a twice-spin integer, got {value!r}.")
    return SpinValue(value)


def _convention(value: Any, default: NodeConvention = NodeConvention.Physical) -> NodeConvention:
    if value is None:
        return default
    try:
        return NodeConvention(value)
    except ValueError as e:
        raise ValidationError(f"Unknown convention {value!r}.") from e


def cell_from_dict(
    document: Dict[str, Any], legs: Optional[Sequence[SpinValue]] = None
) -> DecoratedCell:
    """Build a cell from its JSON form; `legs` overrides the document's own list."""
    try:
        central = _spin(document["central"], "central")
        if legs is None:
            legs = [_spin(leg, "leg") for leg in document["legs"]]
        convention = _convention(document.get("convention"))
        terms = {
            tuple(int(n) for n in term["index"]): float(term["value"])
            for term in document.get("couplings", [])
        }
        energy = document.get("s0_self_energy")
        if energy is not None:
            energy = tuple(float(value) for value in energy)
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed cell: missing or invalid field {e}.") from e
    return DecoratedCell(
        central,
        CouplingVector.from_terms(tuple(legs), convention, terms),
        energy,
        _convention(document.get("central_convention"), convention),
    )


def load_cell(path: Path) -> DecoratedCell:
    """Read a cell file."""
    cell = cell_from_dict(_read_json(path))
    _logger.debug(f"Loaded cell with S0 = {cell.central} and {len(cell.legs)} legs from {path}.")
    return cell


def _correlators(document: Dict[str, Any]) -> Optional[Correlators]:
    if "correlators" not in document:
        return None
    try:
        return [
            (int(entry["cell"]), tuple(int(site) for site in entry.get("sites", [])))
            for entry in document["correlators"]
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed correlator entry: {e}.") from e


def spec_from_dict(document: Dict[str, Any]) -> Tuple[LatticeSpec, Optional[Correlators]]:
    """Build a lattice and its requested correlators from the JSON form."""
    builder = document.get("builder")
    try:
        if builder == "mixed_torus":
            spec = mixed_torus_spec(
                _spin(document["S"], "S"),
                float(document["K"]),
                float(document["D"]),
                _convention(document.get("convention")),
            )
        elif builder == "chain":
            spec = chain_spec([cell_from_dict(cell) for cell in document["cells"]])
        elif builder is None:
            site_spin = _spin(document["site_spin"], "site_spin")
            convention = _convention(document.get("convention"))
            placements = []
            for entry in document["cells"]:
                sites = tuple(int(site) for site in entry["sites"])
                cell = cell_from_dict(
                    {**entry, "convention": convention.value}, legs=(site_spin,) * len(sites)
                )
                placements.append(CellPlacement(cell, sites))
            spec = LatticeSpec(site_spin, int(document["n_sites"]), tuple(placements), convention)
        else:
            raise ValidationError(f"Unknown lattice builder {builder!r}.")
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed lattice: missing or invalid field {e}.") from e
    return spec, _correlators(document)


def load_spec(path: Path) -> Tuple[LatticeSpec, Optional[Correlators]]:
    """Read a lattice file."""
    spec, correlators = spec_from_dict(_read_json(path))
    _logger.debug(f"Loaded lattice with {spec.n_sites} sites and {len(spec.cells)} cells.")
    return spec, correlators


def couplings_document(
    vector: CouplingVector, constant: Optional[float] = None
) -> Dict[str, Any]:
    """Return couplings in the cell file's index/value format.

    JSON floats use the shortest repr that round-trips, so output is deterministic.
    """
    document: Dict[str, Any] = {
        "legs": [leg.twice_spin for leg in vector.legs],
        "convention": vector.convention.value,
    }
    if constant is not None:
        document["constant"] = float(constant)
    document["couplings"] = [
        {"index": list(idx.exponents), "value": value}
        for idx, value in zip(iter_multi_indices(vector.legs), vector.entries)
    ]
    return document


def to_json(document: Any) -> str:
    """Render a document as indented JSON with a trailing newline."""
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def to_csv(header: Optional[Sequence[str]], rows: Sequence[Sequence[str]]) -> str:
    """Render rows of pre-formatted cells as CSV with "\\n" line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def matrix_rows(matrix: RationalMatrix) -> List[List[str]]:
    """Return the matrix as rows of "p/q" strings."""
    return [[format_fraction(value) for value in row] for row in matrix.tolist()]


def couplings_rows(vector: CouplingVector) -> List[List[str]]:
    """Return (index, value) rows, the index written as space-separated exponents."""
    return [
        [" ".join(str(n) for n in idx.exponents), format_float(value)]
        for idx, value in zip(iter_multi_indices(vector.legs), vector.entries)
    ]
