"""Infection risk estimation for healthcare personnel.

Submodules: individual, transmission, occupational, population, bayesnet,
sensitivity, montecarlo, ingest and cli.
"""

__version__ = "0.1.0"
