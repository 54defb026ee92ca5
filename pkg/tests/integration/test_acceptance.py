#!/usr/bin/env python3
# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.

"""Acceptance tests for the decoration toolkit, run through the command line."""

import csv
import io
import json
import logging
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from oracle import chain_spec, mixed_torus_spec, verify_spec
from spincore import CouplingVector, NodeConvention, SpinValue, iter_multi_indices
from startransform import DecoratedCell

logger = logging.getLogger(__name__)

SPIN_HALF = SpinValue(1)


def _rows(stdout: str):
    return list(csv.reader(io.StringIO(stdout)))


def _random_cell(rng: np.random.Generator, central: SpinValue, n_legs: int) -> DecoratedCell:
    legs = (SPIN_HALF,) * n_legs
    terms = {
        idx.exponents: float(rng.uniform(-0.8, 0.8))
        for idx in iter_multi_indices(legs)
        if any(idx.exponents)
    }
    return DecoratedCell(
        central, CouplingVector.from_terms(legs, NodeConvention.Normalized, terms)
    )


@pytest.mark.order(1)
@pytest.mark.parametrize("twice_spin", [3, 4, 5, 6])
def test_published_inverses(decorate, twice_spin) -> None:
    """Test that the printed inverse times V is the identity."""
    inverse = decorate("vandermonde", "--spin", str(twice_spin), "--inverse")
    forward = decorate("vandermonde", "--spin", str(twice_spin))
    assert inverse.returncode == 0, inverse.stderr
    assert forward.returncode == 0, forward.stderr
    left = [[Fraction(x) for x in row] for row in _rows(inverse.stdout)]
    right = [[Fraction(x) for x in row] for row in _rows(forward.stdout)]
    size = twice_spin + 1
    for i in range(size):
        for j in range(size):
            entry = sum(left[i][k] * right[k][j] for k in range(size))
            assert entry == (1 if i == j else 0)
    if twice_spin == 4:
        assert left[2][2] == Fraction(-5, 4)
    if twice_spin == 6:
        assert left[2][3] == Fraction(-49, 36)


@pytest.mark.order(2)
def test_shipped_lattices_verify(decorate, spec_dir: Path) -> None:
    """Test that every lattice file passes all identity checks."""
    lattices = [
        path
        for path in sorted(spec_dir.glob("*.json"))
        if "central" not in json.loads(path.read_text())
    ]
    assert lattices
    for path in lattices:
        logger.info(f"Verifying {path.name}")
        result = decorate("verify", "--spec", str(path))
        assert result.returncode == 0, result.stderr
        rows = _rows(result.stdout)
        assert rows[0] == ["verdict", "identity", "residual", "tolerance"]
        assert all(row[0] == "PASS" for row in rows[1:]), result.stdout


@pytest.mark.order(3)
def test_strong_coupling_asymptote(decorate) -> None:
    """Test D_c at K = 15 for the spin-1 decoration."""
    result = decorate(
        "critical-curve", "--spin", "2", "--k-min", "15", "--k-max", "15", "--k-step", "1"
    )
    assert result.returncode == 0, result.stderr
    (row,) = _rows(result.stdout)[1:]
    assert float(row[1]) == pytest.approx(-30 + math.log(math.sqrt(2)), abs=1e-4)


@pytest.mark.order(4)
def test_strong_anisotropy_asymptote(decorate) -> None:
    """Test K_c(D = 20) = ln(1 + √2) / S."""
    for twice_spin, expected in ((2, 0.881374), (4, 0.440687)):
        result = decorate(
            "critical-coupling", "--spin", str(twice_spin), "--d-values", "20", "--format", "json"
        )
        assert result.returncode == 0, result.stderr
        (point,) = json.loads(result.stdout)
        assert point["K_c"] == pytest.approx(expected, abs=1e-5)


@pytest.mark.order(5)
@pytest.mark.parametrize("twice_spin", [2, 4])
def test_critical_curve(decorate, workers, twice_spin) -> None:
    """Test that every solved point lies inside the critical region."""
    result = decorate(
        "critical-curve",
        "--spin",
        str(twice_spin),
        "--k-min",
        "0.1",
        "--k-max",
        "15",
        "--k-step",
        "0.1",
        "--workers",
        str(workers),
    )
    assert result.returncode == 0, result.stderr
    rows = _rows(result.stdout)[1:]
    assert rows
    k_c = [float(row[0]) for row in rows]
    assert k_c == sorted(k_c)
    assert all(float(row[3]) < 1 for row in rows)
    if twice_spin == 2:
        assert min(k_c) > math.log(1 + math.sqrt(2))
        d_c = [float(row[1]) for row in rows]
        assert all(a > b for a, b in zip(d_c, d_c[1:]))


@pytest.mark.order(6)
@pytest.mark.slow
@pytest.mark.parametrize("twice_spin", [2, 4])
@pytest.mark.parametrize("k", [0.4, 1.0])
@pytest.mark.parametrize("d", [-0.2, 0.5])
def test_partition_identity_grid(twice_spin, k, d) -> None:
    """Test the torus identities over a grid of couplings."""
    checks = verify_spec(mixed_torus_spec(SpinValue(twice_spin), k, d))
    assert all(check.passed for check in checks), [(c.name, c.residual) for c in checks]


@pytest.mark.order(7)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_correlation_identities(seed) -> None:
    """Test α expansions on random chains and tori."""
    rng = np.random.default_rng(seed)
    chain = chain_spec([_random_cell(rng, SPIN_HALF, 3), _random_cell(rng, SpinValue(2), 3)])
    checks = verify_spec(chain, [(0, (0,)), (1, (0, 4)), (1, (2, 3))])
    assert all(check.passed for check in checks), [(c.name, c.residual) for c in checks]

    k, d = float(rng.uniform(0.1, 1.5)), float(rng.uniform(-1.0, 1.0))
    torus = mixed_torus_spec(SpinValue(2), k, d)
    checks = verify_spec(torus, [(1, (int(rng.integers(4)),)), (3, (0, 1))])
    assert all(check.passed for check in checks), [(c.name, c.residual) for c in checks]


@pytest.mark.order(8)
def test_output_is_reproducible(decorate, spec_dir: Path) -> None:
    """Test byte-identical output across runs and worker counts."""
    curve = ("critical-curve", "--spin", "2", "--k-min", "1", "--k-max", "3", "--k-step", "0.25")
    serial = decorate(*curve, "--workers", "1")
    assert serial.returncode == 0, serial.stderr
    assert decorate(*curve, "--workers", "1").stdout == serial.stdout
    assert decorate(*curve, "--workers", "2").stdout == serial.stdout

    cell = str(spec_dir / "cell_spin1_star.json")
    first = decorate("transform", "--cell", cell, "--format", "json")
    assert first.returncode == 0, first.stderr
    assert decorate("transform", "--cell", cell, "--format", "json").stdout == first.stdout
