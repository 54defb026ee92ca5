#!/usr/bin/env python3
# Copyright 2020-2024 Omnivector, LLC.
# See LICENSE file for licensing details.

"""Decoration toolkit command line."""

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from constants import (
    DEFAULT_D_BRACKET,
    DEFAULT_K_BRACKET,
    DEFAULT_ROOT_TOL,
    DEFAULT_SCAN_STEP,
    IDENTITY_TOL,
)
from correlate import alpha_coefficients, conditional_alpha_coefficients
from mixedlattice import CriticalPoint, solve_critical_coupling, solve_critical_curve
from oracle import verify_spec
from spincore import (
    ComputationError,
    CouplingVector,
    DecorationError,
    NodeConvention,
    SpinValue,
    ValidationError,
)
from startransform import effective_couplings
from utils import serialize
from vanderm import build_vandermonde, vandermonde_inverse

logger = logging.getLogger(__name__)

CURVE_HEADER = ("K_c", "D_c", "delta", "ratio", "w1", "w2", "w5")


class OutputFormat(Enum):
    """Machine-readable output formats."""

    Csv = "csv"
    Json = "json"


class _ArgumentParser(argparse.ArgumentParser):
    """Raise on usage errors instead of exiting."""

    def error(self, message):
        raise ValidationError(message)


@dataclass(frozen=True)
class RunConfig:
    """One validated invocation."""

    command: str
    output_format: OutputFormat = OutputFormat.Csv
    output: Optional[Path] = None
    log_level: str = "WARNING"
    options: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace) -> "RunConfig":
        """Build and validate a config from parsed flags."""
        options = {
            key: value
            for key, value in vars(namespace).items()
            if key not in ("command", "format", "output", "log_level")
        }
        config = cls(
            namespace.command,
            OutputFormat(namespace.format),
            namespace.output,
            namespace.log_level,
            options,
        )
        config.validate()
        return config

    def validate(self) -> None:
        """Check flag values before any computation.

        Raises:
            ValidationError: A flag is out of range; the message names it.
        """
        opts = self.options
        if "spin" in opts and opts["spin"] < 1:
            raise ValidationError(f"--spin must be a positive twice-spin, got {opts['spin']}.")
        for flag in ("k_step", "d_step", "tol"):
            if flag in opts and not (math.isfinite(opts[flag]) and opts[flag] > 0):
                raise ValidationError(f"--{flag.replace('_', '-')} must be positive.")
        for low, high in (("k_min", "k_max"), ("d_min", "d_max")):
            if low in opts and high in opts and not opts[high] >= opts[low]:
                raise ValidationError(
                    f"--{high.replace('_', '-')} must not be below --{low.replace('_', '-')}."
                )
        if opts.get("workers", 1) < 1:
            raise ValidationError("--workers must be at least 1.")


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=[f.value for f in OutputFormat], default=OutputFormat.Csv.value
    )
    parser.add_argument("--output", type=Path, default=None, help="Write here instead of stdout.")


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with every subcommand."""
    parser = _ArgumentParser(prog="decorate", description=__doc__)
    parser.add_argument(
        "--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    commands = parser.add_subparsers(dest="command", required=True)

    vandermonde = commands.add_parser("vandermonde", help="Print V^(s) or its inverse.")
    vandermonde.add_argument("--spin", type=int, required=True, help="Twice the spin, 2s.")
    vandermonde.add_argument(
        "--convention",
        choices=[c.value for c in NodeConvention],
        default=NodeConvention.Physical.value,
    )
    vandermonde.add_argument("--inverse", action="store_true")

    transform = commands.add_parser("transform", help="Effective couplings of a cell.")
    transform.add_argument("--cell", type=Path, required=True)

    alpha = commands.add_parser("alpha", help="Correlation coefficients of a cell.")
    alpha.add_argument("--cell", type=Path, required=True)
    alpha.add_argument("--conditional", action="store_true", help="Expand C/W instead of C.")

    curve = commands.add_parser("critical-curve", help="Solve D_c over a range of K.")
    curve.add_argument("--spin", type=int, required=True, help="Twice the decorated spin, 2S.")
    curve.add_argument("--k-min", type=float, required=True)
    curve.add_argument("--k-max", type=float, required=True)
    curve.add_argument("--k-step", type=float, required=True)
    curve.add_argument("--d-min", type=float, default=DEFAULT_D_BRACKET[0])
    curve.add_argument("--d-max", type=float, default=DEFAULT_D_BRACKET[1])
    curve.add_argument("--d-step", type=float, default=DEFAULT_SCAN_STEP)
    curve.add_argument("--tol", type=float, default=DEFAULT_ROOT_TOL)
    curve.add_argument("--workers", type=int, default=1)
    curve.add_argument("--as-printed", action="store_true")
    curve.add_argument(
        "--include-missing", action="store_true", help="Add a row for each K without a root."
    )

    coupling = commands.add_parser("critical-coupling", help="Solve K_c at fixed D values.")
    coupling.add_argument("--spin", type=int, required=True, help="Twice the decorated spin, 2S.")
    coupling.add_argument("--d-values", type=float, nargs="+", required=True)
    coupling.add_argument("--k-min", type=float, default=DEFAULT_K_BRACKET[0])
    coupling.add_argument("--k-max", type=float, default=DEFAULT_K_BRACKET[1])
    coupling.add_argument("--k-step", type=float, default=DEFAULT_SCAN_STEP)
    coupling.add_argument("--tol", type=float, default=DEFAULT_ROOT_TOL)
    coupling.add_argument("--as-printed", action="store_true")
    coupling.add_argument(
        "--include-missing", action="store_true", help="Add a row for each D without a root."
    )

    verify = commands.add_parser("verify", help="Check the identities on a lattice file.")
    verify.add_argument("--spec", type=Path, required=True)
    verify.add_argument("--tol", type=float, default=IDENTITY_TOL)

    for subparser in (vandermonde, transform, alpha, curve, coupling, verify):
        _add_output_flags(subparser)
    return parser


class DecorationCli:
    """Dispatch a validated `RunConfig` to its command."""

    def __init__(self, config: RunConfig):
        self._config = config
        self._exit_code = 0
        self._command_handlers: Dict[str, Callable[[Dict[str, Any]], str]] = {
            "vandermonde": self._on_vandermonde,
            "transform": self._on_transform,
            "alpha": self._on_alpha,
            "critical-curve": self._on_critical_curve,
            "critical-coupling": self._on_critical_coupling,
            "verify": self._on_verify,
        }

    @property
    def _json(self) -> bool:
        return self._config.output_format is OutputFormat.Json

    def execute(self) -> int:
        """Run the command, write its output and return the exit code."""
        text = self._command_handlers[self._config.command](self._config.options)
        if self._config.output is None:
            sys.stdout.write(text)
        else:
            self._config.output.write_text(text)
            logger.info(f"Wrote {self._config.command} output to {self._config.output}.")
        return self._exit_code

    def _on_vandermonde(self, opts: Dict[str, Any]) -> str:
        spin = SpinValue(opts["spin"])
        convention = NodeConvention(opts["convention"])
        build = vandermonde_inverse if opts["inverse"] else build_vandermonde
        rows = serialize.matrix_rows(build(spin, convention))
        if self._json:
            return serialize.to_json(
                {
                    "spin": str(spin),
                    "convention": convention.value,
                    "inverse": opts["inverse"],
                    "rows": rows,
                }
            )
        return serialize.to_csv(None, rows)

    def _render_couplings(self, vector: CouplingVector, constant: Optional[float]) -> str:
        if self._json:
            return serialize.to_json(serialize.couplings_document(vector, constant))
        return serialize.to_csv(("index", "value"), serialize.couplings_rows(vector))

    def _on_transform(self, opts: Dict[str, Any]) -> str:
        effective = effective_couplings(serialize.load_cell(opts["cell"]))
        return self._render_couplings(effective.couplings, effective.constant)

    def _on_alpha(self, opts: Dict[str, Any]) -> str:
        cell = serialize.load_cell(opts["cell"])
        solve = conditional_alpha_coefficients if opts["conditional"] else alpha_coefficients
        alpha = solve(cell)
        return self._render_couplings(
            CouplingVector(alpha.legs, alpha.convention, alpha.entries), None
        )

    def _render_points(
        self, points: Sequence[CriticalPoint], missing: Sequence[Dict[str, float]] = ()
    ) -> str:
        """Render solved points, then one row per unsolved request with only its fixed value."""
        rows = [
            [
                serialize.format_float(value)
                for value in (
                    p.K_c,
                    p.D_c,
                    p.delta,
                    p.ratio,
                    p.weights.w1,
                    p.weights.w2,
                    p.weights.w5,
                )
            ]
            for p in points
        ]
        blanks = [
            [serialize.format_float(fixed[key]) if key in fixed else "" for key in CURVE_HEADER]
            for fixed in missing
        ]
        if self._json:
            return serialize.to_json(
                [dict(zip(CURVE_HEADER, map(float, row))) for row in rows]
                + [{key: fixed.get(key) for key in CURVE_HEADER} for fixed in missing]
            )
        return serialize.to_csv(CURVE_HEADER, rows + blanks)

    def _on_critical_curve(self, opts: Dict[str, Any]) -> str:
        count = int(math.floor((opts["k_max"] - opts["k_min"]) / opts["k_step"] + 1e-9)) + 1
        k_values = [float(k) for k in opts["k_min"] + opts["k_step"] * np.arange(count)]
        points = solve_critical_curve(
            SpinValue(opts["spin"]),
            k_values,
            d_bracket=(opts["d_min"], opts["d_max"]),
            tol=opts["tol"],
            step=opts["d_step"],
            workers=opts["workers"],
            as_printed=opts["as_printed"],
        )
        solved = {p.K_c for p in points}
        missing = [k for k in k_values if k not in solved]
        if missing:
            logger.warning(f"{len(missing)} of {len(k_values)} K values have no critical D.")
        return self._render_points(
            points, [{"K_c": k} for k in missing] if opts["include_missing"] else ()
        )

    def _on_critical_coupling(self, opts: Dict[str, Any]) -> str:
        spin = SpinValue(opts["spin"])
        points = [
            solve_critical_coupling(
                spin,
                d,
                k_bracket=(opts["k_min"], opts["k_max"]),
                step=opts["k_step"],
                tol=opts["tol"],
                as_printed=opts["as_printed"],
            )
            for d in opts["d_values"]
        ]
        missing = [d for d, point in zip(opts["d_values"], points) if point is None]
        if missing:
            logger.warning(f"{len(missing)} of {len(points)} D values have no critical K.")
        return self._render_points(
            [point for point in points if point is not None],
            [{"D_c": d} for d in missing] if opts["include_missing"] else (),
        )

    def _on_verify(self, opts: Dict[str, Any]) -> str:
        spec, correlators = serialize.load_spec(opts["spec"])
        checks = verify_spec(spec, correlators, tol=opts["tol"])
        if not all(check.passed for check in checks):
            logger.error(f"{sum(not c.passed for c in checks)} identity checks failed.")
            self._exit_code = 2
        rows = [
            [
                "PASS" if check.passed else "FAIL",
                check.name,
                serialize.format_float(check.residual),
                serialize.format_float(check.tolerance),
            ]
            for check in checks
        ]
        if self._json:
            return serialize.to_json(
                [
                    {
                        "verdict": "PASS" if check.passed else "FAIL",
                        "name": check.name,
                        "residual": check.residual,
                        "tolerance": check.tolerance,
                    }
                    for check in checks
                ]
            )
        return serialize.to_csv(("verdict", "identity", "residual", "tolerance"), rows)


def run(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return its exit code.

    0 on success, 1 on invalid flags or input files, 2 when a computation fails or an
    identity check does not pass.
    """
    try:
        namespace = build_parser().parse_args(argv)
        logging.basicConfig(
            level=namespace.log_level,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        config = RunConfig.from_namespace(namespace)
        return DecorationCli(config).execute()
    except SystemExit as e:
        return int(e.code or 0)
    except ValidationError as e:
        logger.error(f"Invalid input: {e}")
        return 1
    except (ComputationError, DecorationError) as e:
        logger.error(f"Computation failed: {e}")
        return 2


if __name__ == "__main__":  # pragma: nocover
    sys.exit(run())
