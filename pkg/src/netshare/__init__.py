"""Nonlocality sharing in bilocal and star quantum networks.

Sequential unsharp two-outcome measurements on two-qubit sources, the
bilocality functional S_biloc, the star-network functional N_star, their
closed-form maxima and numerical optimizers that check them.
"""

from netshare.errors import InfeasibleScheduleError, NetShareError
from netshare.qstate import (
    BlochForm,
    TwoQubitState,
    bell_mixture,
    bloch_decompose,
    bloch_reconstruct,
    chsh_horodecki_max,
    correlation_spectrum,
    phi_plus,
    pure_schmidt,
)

__version__ = "0.1.0"

__all__ = [
    "BlochForm",
    "InfeasibleScheduleError",
    "NetShareError",
    "TwoQubitState",
    "bell_mixture",
    "bloch_decompose",
    "bloch_reconstruct",
    "chsh_horodecki_max",
    "correlation_spectrum",
    "phi_plus",
    "pure_schmidt",
]
