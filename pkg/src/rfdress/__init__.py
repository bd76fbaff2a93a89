"""Adiabatic RF-dressed potentials for atom chip traps."""

__version__ = "0.1.0"

from . import constants, dressed, errors, fieldkit, floquet, matterwave, scenefile, trapscape  # noqa: E402
