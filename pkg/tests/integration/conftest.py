#!/usr/bin/env python3
# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.

"""Configure decoration toolkit acceptance tests."""

import logging
import os
import subprocess
import sys
from pathlib import Path
from typing import Callable, List

import pytest

logger = logging.getLogger(__name__)
REPO_DIR = Path(__file__).parents[2]
CLI = REPO_DIR / "src" / "cli.py"


def pytest_addoption(parser) -> None:
    parser.addoption(
        "--spec-dir",
        action="store",
        default=str(REPO_DIR / "specs"),
        help="Directory of cell and lattice files to verify.",
    )
    parser.addoption(
        "--workers",
        action="store",
        type=int,
        default=2,
        help="Process count for critical curve runs.",
    )


@pytest.fixture(scope="module")
def spec_dir(request) -> Path:
    """Get the directory of example input files."""
    return Path(request.config.option.spec_dir)


@pytest.fixture(scope="module")
def workers(request) -> int:
    """Get the process count for curve runs."""
    return request.config.option.workers


@pytest.fixture(scope="module")
def decorate() -> Callable[..., subprocess.CompletedProcess]:
    """Return a runner for the command line as a separate process."""
    env = {**os.environ, "PYTHONPATH": str(REPO_DIR / "src")}

    def _run(*args: str) -> subprocess.CompletedProcess:
        argv: List[str] = [sys.executable, str(CLI), *args]
        logger.info(f"Running {' '.join(args)}")
        return subprocess.run(argv, capture_output=True, text=True, env=env, timeout=600)

    return _run
