"""Spectral weak observability and HUM boundary/point control of the wave equation."""

from .diophantine import RealSpec, continued_fraction, is_in_S
from .hum import ControlSignal, simulate_controlled, solve_hum
from .observability import ObservationGeometry, assemble_gram, max_quotient, min_quotient, observed_energy
from .spectral import ENERGY, WEAK, DomainSpec, ModalState, SobolevIndex, state_norm

__version__ = "0.1.0"

__all__ = [
    "ENERGY",
    "WEAK",
    "ControlSignal",
    "DomainSpec",
    "ModalState",
    "ObservationGeometry",
    "RealSpec",
    "SobolevIndex",
    "assemble_gram",
    "continued_fraction",
    "is_in_S",
    "max_quotient",
    "min_quotient",
    "observed_energy",
    "simulate_controlled",
    "solve_hum",
    "state_norm",
]
