# Copyright 2024 Omnivector, LLC.
# See LICENSE file for licensing details.

"""Utility modules used by the decoration toolkit."""
