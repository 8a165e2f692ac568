"""Coherent-state simulation of bidirectional teleportation with entangled coherent channels."""

__version__ = "0.1.0"

from .coherent import StateVector, coherent_state, fidelity, inner_product, normalize
from .errors import ABQTError
from .measurement import OutcomeClass, herald_class, pattern_probabilities
from .optics import GateSpec, apply_bps, apply_displacement, apply_phase
from .protocol import (AliceInfo, BellVariant, BobInfo, CaseId, ChannelSpec, Parity,
                       average_fidelity, enumerate_outcomes, lookup_correction, table_outcomes,
                       total_success_probability)

__all__ = [
    "ABQTError", "AliceInfo", "BellVariant", "BobInfo", "CaseId", "ChannelSpec", "GateSpec",
    "OutcomeClass", "Parity", "StateVector", "apply_bps", "apply_displacement", "apply_phase",
    "average_fidelity", "coherent_state", "enumerate_outcomes", "fidelity", "herald_class",
    "inner_product", "lookup_correction", "normalize", "pattern_probabilities", "table_outcomes",
    "total_success_probability", "__version__",
]
