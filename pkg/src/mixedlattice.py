# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""Mixed spin-(1/2, S) square lattice.

Each spin S sits at the centre of a plaquette of four spin-1/2 sites, with H = K S Σσ + D S².
Tracing S out gives an eight-vertex model with w2 = w3 = w4 and w5 = w6 = w7 = w8. The
critical curve D_c(K_c) follows from the small-Δ critical condition w1 = w̄2 + w3 + w4 with
w̄2 = w2 - Δ/w1.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from constants import (
    BISECTION_MAXITER,
    BISECTION_XTOL,
    DEFAULT_D_BRACKET,
    DEFAULT_K_BRACKET,
    DEFAULT_ROOT_TOL,
    DEFAULT_SCAN_STEP,
    LOG_FLOAT_MAX,
)
from scipy.optimize import bisect
from scipy.special import logsumexp
from spincore import (
    CouplingVector,
    NodeConvention,
    SpinValue,
    ValidationError,
    moment_array,
)
from startransform import DecoratedCell, EffectiveCouplings, WeightRangeError, uniform_cell

logger = logging.getLogger(__name__)

SPIN_HALF = SpinValue(1)
PLAQUETTE_LEGS = (SPIN_HALF,) * 4

# Leg-field multipliers of K for the three distinct vertices (±1/2 legs):
# w1 = W(+,+,+,+), w2 = W(+,-,+,-), w5 = W(+,-,+,+).
VERTEX_FIELDS = (2.0, 0.0, 1.0)

# Positions of those configurations in a four-leg weight table.
VERTEX_POSITIONS = (15, 10, 11)


@dataclass(frozen=True)
class MixedModelParams:
    """Decorated spin S, coupling K and single-ion anisotropy D, in units of β."""

    S: SpinValue
    K: float
    D: float

    def __post_init__(self):
        if not isinstance(self.S, SpinValue):
            raise ValidationError(f"S must be a SpinValue, got {self.S!r}.")
        for name in ("K", "D"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value}.")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class VertexWeights:
    """The three distinct eight-vertex weights."""

    w1: float
    w2: float
    w5: float

    def __post_init__(self):
        for name in ("w1", "w2", "w5"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0.0):
                raise ValidationError(f"{name} must be finite and positive, got {value}.")
            object.__setattr__(self, name, value)

    def logs(self) -> Tuple[float, float, float]:
        """Return (ln w1, ln w2, ln w5)."""
        return math.log(self.w1), math.log(self.w2), math.log(self.w5)


@dataclass(frozen=True)
class CriticalPoint:
    """A solved point of the critical curve with its diagnostics."""

    K_c: float
    D_c: float
    delta: float
    weights: VertexWeights
    ratio: float
    residual: float


def log_vertex_weights(
    S: SpinValue, K, D, as_printed: bool = False
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (ln w1, ln w2, ln w5), broadcasting over array-valued K and D.

    The default is the trace over the S moments μ: ln w = ln Σ_μ exp(c μ K + μ² D) with
    c = 2, 0, 1. With `as_printed`, half-odd S uses the closed forms
    w1 = 2Σ cosh(nK) e^{n²D}, w2 = 2Σ e^{n²D}, w5 = 2Σ cosh(nK/2) e^{n²D}, n = 1..S+1/2,
    which disagree with the trace. Integral S is identical either way.
    """
    K = np.asarray(K, dtype=float)[..., np.newaxis]
    D = np.asarray(D, dtype=float)[..., np.newaxis]
    if as_printed and not S.is_integral:
        n = np.arange(1, (S.twice_spin + 1) // 2 + 1, dtype=float)
        scales = (n, np.zeros_like(n), n / 2)
        return tuple(
            logsumexp(np.logaddexp(a * K, -a * K) + n**2 * D, axis=-1) for a in scales
        )
    mu = moment_array(S, NodeConvention.Physical)
    return tuple(
        logsumexp(field * mu * K + mu**2 * D, axis=-1) for field in VERTEX_FIELDS
    )


def vertex_weights(p: MixedModelParams, as_printed: bool = False) -> VertexWeights:
    """Return (w1, w2, w5) for the parameters.

    Raises:
        WeightRangeError: A weight overflows a double.
    """
    logs = [float(value) for value in log_vertex_weights(p.S, p.K, p.D, as_printed)]
    if max(logs) > LOG_FLOAT_MAX:
        raise WeightRangeError(f"Vertex weights overflow at S={p.S}, K={p.K}, D={p.D}.")
    return VertexWeights(*(math.exp(value) for value in logs))


def _square_params_from_logs(l1: float, l2: float, l5: float) -> Tuple[float, float, float]:
    j0 = (l1 + 3 * l2 + 4 * l5) / 8
    j2 = (l1 - l2) / 8
    j4 = (l1 + 3 * l2 - 4 * l5) / 8
    if j0 <= 0.0:
        logger.warning(f"Effective constant J0 = {j0:.6g} is not positive.")
    if j2 <= 0.0:
        logger.warning(f"Effective pair coupling J2 = {j2:.6g} is not positive.")
    return j0, j2, j4


def effective_square_params(w: VertexWeights) -> Tuple[float, float, float]:
    """Return (J0, J2, J4) of the effective spin-1/2 plaquette.

    J0 = ⅛ ln(w2³ w5⁴ w1), J2 = ⅛ ln(w1/w2), J4 = ⅛ ln(w1 w2³ / w5⁴). The couplings act on
    ±1 spins, J2 on each of the six pairs and J4 on the quartet. Non-positive J0 or J2 is
    logged, not raised.
    """
    return _square_params_from_logs(*w.logs())


def effective_cell_couplings(
    w: VertexWeights, convention: NodeConvention = NodeConvention.Normalized
) -> EffectiveCouplings:
    """Return the four-leg effective couplings built from (J0, J2, J4).

    Physical (±1/2) legs rescale the pair terms by 4 and the quartet by 16.
    """
    j0, j2, j4 = effective_square_params(w)
    if convention is NodeConvention.Physical:
        j2, j4 = 4 * j2, 16 * j4
    terms = {(0, 0, 0, 0): j0, (1, 1, 1, 1): j4}
    for i in range(4):
        for j in range(i + 1, 4):
            terms[tuple(int(k in (i, j)) for k in range(4))] = j2
    return EffectiveCouplings(CouplingVector.from_terms(PLAQUETTE_LEGS, convention, terms))


def mixed_cell(
    p: MixedModelParams, convention: NodeConvention = NodeConvention.Physical
) -> DecoratedCell:
    """Return the generic four-leg cell of a plaquette: S0 = S, ±1/2 legs, self-energy Dμ².

    With Normalized (±1) legs the single-leg couplings are K/2 so the energy is unchanged.
    """
    coupling = p.K if convention is NodeConvention.Physical else p.K / 2
    mu = moment_array(p.S, NodeConvention.Physical)
    return uniform_cell(
        p.S,
        PLAQUETTE_LEGS,
        coupling,
        convention,
        s0_self_energy=tuple(p.D * mu**2),
        central_convention=NodeConvention.Physical,
    )


def delta(w: VertexWeights) -> float:
    """Return Δ = w1 w2 + w3 w4 - w5 w6 - w7 w8 = w1 w2 + w2² - 2 w5²."""
    return w.w1 * w.w2 + w.w2 * w.w2 - 2 * w.w5 * w.w5


def critical_residual(p: MixedModelParams, as_printed: bool = False) -> float:
    """Return f = w1 - 3 w2 + Δ/w1, which vanishes on the critical curve."""
    w = vertex_weights(p, as_printed)
    return w.w1 - 3 * w.w2 + delta(w) / w.w1


def _scaled_residual(S: SpinValue, K, D, as_printed: bool = False) -> np.ndarray:
    l1, l2, l5 = log_vertex_weights(S, K, D, as_printed)
    r1, r5 = l1 - l2, l5 - l2
    # f/w1 is bounded because w1 > w5 > w2; multiply back by w1/w2.
    bounded = 1.0 - 2.0 * np.exp(-r1) + np.exp(-2 * r1) - 2.0 * np.exp(2 * r5 - 2 * r1)
    with np.errstate(over="ignore"):
        return bounded * np.exp(r1)


def scaled_critical_residual(p: MixedModelParams, as_printed: bool = False) -> float:
    """Return f/w2, computed from log-weight ratios so large K and D do not overflow."""
    return float(_scaled_residual(p.S, p.K, p.D, as_printed))


def _validate_bracket(bracket: Tuple[float, float], step: float) -> Tuple[float, float]:
    lo, hi = (float(v) for v in bracket)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValidationError(f"Bracket must be finite with positive width, got {bracket}.")
    if not step > 0.0:
        raise ValidationError(f"Scan step must be positive, got {step}.")
    return lo, hi


def _first_sign_change(grid: np.ndarray, values: np.ndarray) -> Optional[Tuple[float, float]]:
    signs = np.sign(values)
    exact = np.flatnonzero(signs == 0)
    changes = np.flatnonzero(signs[:-1] * signs[1:] < 0)
    if exact.size and (not changes.size or exact[0] <= changes[0]):
        return float(grid[exact[0]]), float(grid[exact[0]])
    if changes.size:
        return float(grid[changes[0]]), float(grid[changes[0] + 1])
    return None


def _scan_grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step)) + 1
    grid = lo + step * np.arange(count)
    return grid if grid[-1] >= hi else np.append(grid, hi)


def _critical_point(S: SpinValue, K: float, D: float, as_printed: bool) -> CriticalPoint:
    w = vertex_weights(MixedModelParams(S, K, D), as_printed)
    l1, l2, l5 = w.logs()
    ratio = abs(math.exp(l2 - l1) + math.exp(2 * (l2 - l1)) - 2 * math.exp(2 * (l5 - l1)))
    if ratio >= 1.0:
        logger.warning(f"|Δ|/w1² = {ratio:.6g} >= 1 at K={K:.6g}, D={D:.6g}.")
    residual = float(_scaled_residual(S, K, D, as_printed))
    return CriticalPoint(K, D, delta(w), w, ratio, residual)


def _bisect_root(function, lo: float, hi: float) -> float:
    if lo == hi:
        return lo
    return bisect(function, lo, hi, xtol=BISECTION_XTOL, maxiter=BISECTION_MAXITER)


def solve_critical_point(
    S: SpinValue,
    K: float,
    d_bracket: Tuple[float, float] = DEFAULT_D_BRACKET,
    step: float = DEFAULT_SCAN_STEP,
    tol: float = DEFAULT_ROOT_TOL,
    as_printed: bool = False,
) -> Optional[CriticalPoint]:
    """Return the critical point on the line of fixed K, or None without a root.

    D is scanned upward over `d_bracket` in steps of `step`; the first sign change of f/w2
    is refined by bisection to a width of 1e-12.
    """
    lo, hi = _validate_bracket(d_bracket, step)
    K = float(K)
    grid = _scan_grid(lo, hi, step)
    bracket = _first_sign_change(grid, _scaled_residual(S, K, grid, as_printed))
    if bracket is None:
        logger.warning(f"No root in bracket D ∈ [{lo}, {hi}] for S={S}, K={K:.6g}.")
        return None
    logger.debug(f"Bisecting D ∈ [{bracket[0]:.6g}, {bracket[1]:.6g}] for K={K:.6g}.")
    d_c = _bisect_root(lambda d: float(_scaled_residual(S, K, d, as_printed)), *bracket)
    point = _critical_point(S, K, d_c, as_printed)
    if abs(point.residual) > tol:
        logger.warning(
            f"Residual {point.residual:.3g} exceeds tol {tol:.3g} at K={K:.6g}, D={d_c:.6g}."
        )
    logger.info(f"Critical point S={S}: K_c={K:.10g}, D_c={d_c:.10g}.")
    return point


def _solve_point_task(args) -> Optional[CriticalPoint]:
    return solve_critical_point(*args)


def solve_critical_curve(
    S: SpinValue,
    K_values: Sequence[float],
    d_bracket: Tuple[float, float] = DEFAULT_D_BRACKET,
    tol: float = DEFAULT_ROOT_TOL,
    step: float = DEFAULT_SCAN_STEP,
    workers: int = 1,
    as_printed: bool = False,
) -> List[CriticalPoint]:
    """Return D_c for each K in `K_values`, in input order.

    K values without a sign change in the bracket are logged and left out.

    Args:
        S: decorated spin.
        K_values: couplings to solve at.
        d_bracket: (lo, hi) range of D to scan.
        tol: acceptable |f/w2| at a solved point.
        step: scan step in D.
        workers: process count; values above 1 use a process pool.
        as_printed: use the printed half-odd closed forms.

    Raises:
        ValidationError: The bracket, step or a K value is invalid.
    """
    _validate_bracket(d_bracket, step)
    ks = [float(k) for k in K_values]
    if not all(math.isfinite(k) for k in ks):
        raise ValidationError("K values must be finite.")
    tasks = [(S, k, tuple(d_bracket), step, tol, as_printed) for k in ks]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_point_task, tasks))
    else:
        results = [_solve_point_task(task) for task in tasks]
    points = [point for point in results if point is not None]
    logger.info(f"Solved {len(points)} of {len(ks)} critical points for S={S}.")
    return points


def solve_critical_coupling(
    S: SpinValue,
    D: float,
    k_bracket: Tuple[float, float] = DEFAULT_K_BRACKET,
    step: float = DEFAULT_SCAN_STEP,
    tol: float = DEFAULT_ROOT_TOL,
    as_printed: bool = False,
) -> Optional[CriticalPoint]:
    """Return K_c > 0 on the line of fixed D, or None without a root.

    The residual is even in K, so -K_c is the mirror root.
    """
    lo, hi = _validate_bracket(k_bracket, step)
    D = float(D)
    grid = _scan_grid(lo, hi, step)
    bracket = _first_sign_change(grid, _scaled_residual(S, grid, D, as_printed))
    if bracket is None:
        logger.warning(f"No root in bracket K ∈ [{lo}, {hi}] for S={S}, D={D:.6g}.")
        return None
    k_c = _bisect_root(lambda k: float(_scaled_residual(S, k, D, as_printed)), *bracket)
    point = _critical_point(S, k_c, D, as_printed)
    if abs(point.residual) > tol:
        logger.warning(
            f"Residual {point.residual:.3g} exceeds tol {tol:.3g} at K={k_c:.6g}, D={D:.6g}."
        )
    logger.info(f"Critical coupling S={S}: D={D:.10g}, K_c={k_c:.10g}.")
    return point
