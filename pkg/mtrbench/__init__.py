"""Desk-scale MTR unit-cell criticality benchmark.

Two-group Monte Carlo transport, the criticality-constrained fast-flux
objective and the JAYA / PPO-ES optimizers that search it.
"""

__version__ = "0.1.0"
