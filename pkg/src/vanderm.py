# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""Equidistant-node Vandermonde matrices and their exact inverses.

V^(s) has entry (j, k) = x_j^(k-1) over the 2s+1 moments of spin s. Inverses are computed by
exact Gauss-Jordan elimination over the rationals; the closed form built from first-kind
Stirling numbers is provided as an independent cross-check.
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache, reduce
from typing import List, Sequence, Tuple, Union

import numpy as np
from constants import KRON_ENTRY_CAP
from spincore import (
    ComputationError,
    Legs,
    NodeConvention,
    SpinValue,
    ValidationError,
    moments,
)

logger = logging.getLogger(__name__)


class SingularMatrixError(ComputationError):
    """Raised when an exact inversion finds no non-zero pivot."""


class DimensionCapError(ComputationError):
    """Raised when a Kronecker product would exceed the configured entry cap."""


_to_int = np.frompyfunc(int, 1, 1)


class RationalMatrix:
    """Dense matrix of exact rationals.

    Stored as a matrix of Python integers over one positive common denominator, reduced so
    that the numerators and the denominator share no factor. The storage is read-only.
    """

    __slots__ = ("_numerators", "_denominator")

    def __init__(self, numerators, denominator: int = 1):
        num = np.array(numerators, dtype=object)
        if num.ndim != 2 or 0 in num.shape:
            raise ValidationError(f"RationalMatrix needs a non-empty 2-D array, got {num.shape}.")
        den = int(denominator)
        if den == 0:
            raise ValidationError("RationalMatrix denominator must be non-zero.")
        num = _to_int(num)
        if den < 0:
            num, den = -num, -den
        common = math.gcd(den, *num.flat)
        if common > 1:
            num, den = num // common, den // common
        num = np.array(num, dtype=object)
        num.setflags(write=False)
        self._numerators = num
        self._denominator = den

    @classmethod
    def from_fractions(
        cls, rows: Sequence[Sequence[Union[Fraction, int, str]]]
    ) -> "RationalMatrix":
        """Build a matrix from rows of anything `Fraction` accepts."""
        fractions = [[Fraction(value) for value in row] for row in rows]
        if not fractions or len({len(row) for row in fractions}) != 1:
            raise ValidationError("Rows must be non-empty and of equal length.")
        den = math.lcm(*(value.denominator for row in fractions for value in row))
        return cls(
            [[value.numerator * (den // value.denominator) for value in row] for row in fractions],
            den,
        )

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        """Return the n×n identity."""
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @property
    def shape(self) -> Tuple[int, int]:
        """Return (rows, cols)."""
        return self._numerators.shape

    @property
    def numerators(self) -> np.ndarray:
        """Return the read-only integer numerator matrix."""
        return self._numerators

    @property
    def denominator(self) -> int:
        """Return the common denominator."""
        return self._denominator

    def __getitem__(self, key: Tuple[int, int]) -> Fraction:
        row, col = key
        return Fraction(self._numerators[row, col], self._denominator)

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        if self.shape[1] != other.shape[0]:
            raise ValidationError(f"Cannot multiply {self.shape} by {other.shape}.")
        return RationalMatrix(
            self._numerators.dot(other._numerators), self._denominator * other._denominator
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self._denominator == other._denominator
            and bool(np.all(self._numerators == other._numerators))
        )

    __hash__ = None  # type: ignore[assignment]

    def to_float(self) -> np.ndarray:
        """Return a float copy; every entry is correctly rounded."""
        den = self._denominator
        return np.array([[n / den for n in row] for row in self._numerators.tolist()], dtype=float)

    def to_fractions(self) -> np.ndarray:
        """Return a writable object array of `Fraction` entries."""
        den = self._denominator
        return np.array(
            [[Fraction(n, den) for n in row] for row in self._numerators.tolist()], dtype=object
        )

    def tolist(self) -> List[List[Fraction]]:
        """Return the entries as nested lists of `Fraction`."""
        return self.to_fractions().tolist()

    def __repr__(self) -> str:
        return f"RationalMatrix(shape={self.shape}, denominator={self._denominator})"


def build_vandermonde(
    s: SpinValue, conv: NodeConvention = NodeConvention.Physical
) -> RationalMatrix:
    """Return V^(s): entry (j, k) = x_j^(k-1) with ascending nodes x_j."""
    return _build_vandermonde(s, conv)


@lru_cache(maxsize=None)
def _build_vandermonde(s: SpinValue, conv: NodeConvention) -> RationalMatrix:
    nodes = moments(s, conv)
    return RationalMatrix.from_fractions([[x**k for k in range(len(nodes))] for x in nodes])


def invert_exact(matrix: RationalMatrix) -> RationalMatrix:
    """Invert a square rational matrix exactly.

    Gauss-Jordan elimination with full pivoting (largest magnitude over the remaining
    block). Column swaps are undone on the rows of the result.

    Raises:
        ValidationError: The matrix is not square.
        SingularMatrixError: No non-zero pivot remains.
    """
    rows, cols = matrix.shape
    if rows != cols:
        raise ValidationError(f"Only square matrices can be inverted, got {matrix.shape}.")
    n = rows
    a = matrix.to_fractions()
    inv = RationalMatrix.identity(n).to_fractions()
    col_order = list(range(n))

    for k in range(n):
        r, c = max(
            ((i, j) for i in range(k, n) for j in range(k, n)), key=lambda ij: abs(a[ij])
        )
        if a[r, c] == 0:
            raise SingularMatrixError(f"Matrix is singular: no pivot in column block {k}.")
        if r != k:
            a[[k, r]] = a[[r, k]]
            inv[[k, r]] = inv[[r, k]]
        if c != k:
            a[:, [k, c]] = a[:, [c, k]]
            col_order[k], col_order[c] = col_order[c], col_order[k]

        pivot = a[k, k]
        a[k, :] = a[k, :] / pivot
        inv[k, :] = inv[k, :] / pivot
        for i in range(n):
            if i != k and a[i, k] != 0:
                factor = a[i, k]
                a[i, :] = a[i, :] - factor * a[k, :]
                inv[i, :] = inv[i, :] - factor * inv[k, :]

    result = np.empty((n, n), dtype=object)
    for k, original in enumerate(col_order):
        result[original, :] = inv[k, :]
    return RationalMatrix.from_fractions(result.tolist())


def vandermonde_inverse(
    s: SpinValue, conv: NodeConvention = NodeConvention.Physical
) -> RationalMatrix:
    """Return Ṽ^(s), the exact inverse of V^(s)."""
    return _vandermonde_inverse(s, conv)


@lru_cache(maxsize=None)
def _vandermonde_inverse(s: SpinValue, conv: NodeConvention) -> RationalMatrix:
    logger.debug(f"Inverting V^({s}) with {conv.value} nodes.")
    return invert_exact(build_vandermonde(s, conv))


def stirling_first_unsigned(n: int, k: int) -> int:
    """Return the unsigned Stirling number of the first kind c(n, k).

    Uses c(n+1, k) = n c(n, k) + c(n, k-1) with c(0, 0) = 1; zero when k > n.
    """
    if n < 0 or k < 0:
        raise ValidationError(f"Stirling arguments must be non-negative, got ({n}, {k}).")
    if k > n:
        return 0
    return _stirling_row(n)[k]


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> Tuple[int, ...]:
    row: Tuple[int, ...] = (1,)
    for m in range(n):
        row = tuple(
            m * (row[k] if k < len(row) else 0) + (row[k - 1] if k >= 1 else 0)
            for k in range(m + 2)
        )
    return row


def inverse_element_closed_form(
    s: SpinValue, i: int, j: int, conv: NodeConvention = NodeConvention.Physical
) -> Fraction:
    """Return entry (i, j) of Ṽ^(s) from the closed form, 1-based.

    Ṽ_ij is the coefficient of x^(i-1) in the Lagrange polynomial of node x_j:

        Ṽ_ij = (-1)^(N-j) / ((N-j)! (j-1)!) * Σ_{k=i}^{N} x_j^(k-i) p_k

    with N = 2s+1 and p_k the coefficients of Π_m (x - x_m). Substituting y = x + s + 1
    turns that product into y(y-1)...(y-N) / y, so

        p_k = Σ_{l=k}^{N} (-1)^(N-l) |s(2s+2, l+1)| C(l, k) (s+1)^(l-k).

    Since x_j = -(s+1)(1 - j/(s+1)), the inner sum is the terminating hypergeometric series in
    1 - j/(s+1). Normalized nodes scale row i by s^(i-1).
    """
    size = s.moment_count
    if not (1 <= i <= size and 1 <= j <= size):
        raise ValidationError(f"Indices ({i}, {j}) are outside 1..{size} for spin {s}.")
    shift = s.spin + 1
    node = j - shift

    def coefficient(k: int) -> Fraction:
        return sum(
            (
                (-1) ** (size - l)
                * stirling_first_unsigned(size + 1, l + 1)
                * math.comb(l, k)
                * shift ** (l - k)
                for l in range(k, size + 1)
            ),
            Fraction(0),
        )

    series = sum((node ** (k - i) * coefficient(k) for k in range(i, size + 1)), Fraction(0))
    value = Fraction((-1) ** (size - j), math.factorial(size - j) * math.factorial(j - 1)) * series
    if conv is NodeConvention.Normalized:
        value *= s.spin ** (i - 1)
    return value


MatrixLike = Union[RationalMatrix, np.ndarray]


def kron(a: MatrixLike, b: MatrixLike, cap: int = KRON_ENTRY_CAP) -> MatrixLike:
    """Return the Kronecker product a ⊗ b.

    Exact for two `RationalMatrix` operands, float otherwise.

    Raises:
        DimensionCapError: rows * cols of the product exceeds `cap`.
        ValidationError: One operand is exact and the other is not.
    """
    (ra, ca), (rb, cb) = np.shape(a), np.shape(b)
    if ra * rb * ca * cb > cap:
        raise DimensionCapError(
            f"Kronecker product of {ra}x{ca} and {rb}x{cb} exceeds the cap of {cap} entries."
        )
    exact = (isinstance(a, RationalMatrix), isinstance(b, RationalMatrix))
    if all(exact):
        return RationalMatrix(np.kron(a.numerators, b.numerators), a.denominator * b.denominator)
    if any(exact):
        raise ValidationError("Cannot mix exact and float operands in a Kronecker product.")
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def build_kron(
    legs: Sequence[SpinValue],
    conv: NodeConvention = NodeConvention.Physical,
    cap: int = KRON_ENTRY_CAP,
) -> RationalMatrix:
    """Return V^(s_1) ⊗ ... ⊗ V^(s_m)."""
    return _build_kron(tuple(legs), conv, cap)


@lru_cache(maxsize=128)
def _build_kron(legs: Legs, conv: NodeConvention, cap: int) -> RationalMatrix:
    return reduce(lambda a, b: kron(a, b, cap), (build_vandermonde(leg, conv) for leg in legs))


def inverse_kron(
    legs: Sequence[SpinValue],
    conv: NodeConvention = NodeConvention.Physical,
    cap: int = KRON_ENTRY_CAP,
) -> RationalMatrix:
    """Return Ṽ^(s_1) ⊗ ... ⊗ Ṽ^(s_m), the inverse of `build_kron`."""
    return _inverse_kron(tuple(legs), conv, cap)


@lru_cache(maxsize=128)
def _inverse_kron(legs: Legs, conv: NodeConvention, cap: int) -> RationalMatrix:
    logger.debug(f"Building inverse Kronecker product for {len(legs)} legs.")
    return reduce(lambda a, b: kron(a, b, cap), (vandermonde_inverse(leg, conv) for leg in legs))


@lru_cache(maxsize=128)
def build_kron_float(
    legs: Legs, conv: NodeConvention = NodeConvention.Physical, cap: int = KRON_ENTRY_CAP
) -> np.ndarray:
    """Return `build_kron` rounded to floats (read-only, cached)."""
    table = build_kron(legs, conv, cap).to_float()
    table.setflags(write=False)
    return table


@lru_cache(maxsize=128)
def inverse_kron_float(
    legs: Legs, conv: NodeConvention = NodeConvention.Physical, cap: int = KRON_ENTRY_CAP
) -> np.ndarray:
    """Return `inverse_kron` rounded to floats (read-only, cached)."""
    table = inverse_kron(legs, conv, cap).to_float()
    table.setflags(write=False)
    return table
