"""Workbench for core-level built-in self-test: pseudo-random pattern
generation, MISR signature compaction, stuck-at and transition-delay fault
coverage, fault diagnosis, and bit-accurate TAP/P1500 serial access."""

from . import access, bist, circuit, compactor, diagnosis, faultsim, tpg
from .errors import CoreBistError, NetlistError, PlanError, ProtocolError, \
    SimulationError

__version__ = "0.1.0"


def fixture_path(name):
    """Path of a bundled benchmark fixture."""
    import os
    return os.path.join(os.path.dirname(__file__), "fixtures", name)
