"""Bias-field digitized counterdiabatic optimization of higher-order Ising problems."""

from .bias import BiasState
from .hubo import HuboHamiltonian, brute_force_spectrum, ground_states

__all__ = ["BiasState", "HuboHamiltonian", "brute_force_spectrum", "ground_states"]
__version__ = "0.1.0"
