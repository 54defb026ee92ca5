# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.
"""constants for the decoration transformation toolkit."""
import math
import sys

# Kronecker products whose rows*cols exceed this are refused.
KRON_ENTRY_CAP = 10**6

# Brute-force enumeration guard: sigma states times decorated states.
MAX_ENUMERATED_STATES = 10**7

# Exponents whose exp() is a normal double.
LOG_FLOAT_MAX = math.log(sys.float_info.max)
LOG_FLOAT_MIN = math.log(sys.float_info.min)

ROUND_TRIP_RTOL = 1e-10
IDENTITY_TOL = 1e-8

DEFAULT_D_BRACKET = (-60.0, 60.0)
DEFAULT_K_BRACKET = (0.0, 10.0)
DEFAULT_SCAN_STEP = 0.05
DEFAULT_ROOT_TOL = 1e-10
BISECTION_XTOL = 1e-12
BISECTION_MAXITER = 200

# 17 significant digits round-trips every double.
FLOAT_FORMAT = ".17g"
