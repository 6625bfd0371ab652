"""Green-wave signal timing for two-way arterial corridors.

The package computes uninterrupted-flow signal timing plans from a list of
signalized sites and a choice of real/virtual control nodes, and checks the
plans with a deterministic single-lane microsimulation.
"""

__version__ = "0.1.0"
