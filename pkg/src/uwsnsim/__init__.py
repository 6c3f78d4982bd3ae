"""Datum-survivability toolkit for unattended wireless sensor networks.

Compartment models of datum spread/loss, a deterministic fixed-step ODE
engine, an agent-based stochastic network simulator with Monte Carlo
campaigns, and an executable, verifiable implementation of the three-rule
distributed node-scheduling protocol.
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
