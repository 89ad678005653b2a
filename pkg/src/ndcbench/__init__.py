"""Parity no-disturbance-condition benchmark for simulated LNN quantum hardware."""

from .builders import MethodKind, build_lnn, build_reference
from .circuit import Circuit, parse, serialize
from .equivalence import check_equivalence
from .errors import (
    CircuitError,
    NdcError,
    NumericalError,
    ParseError,
    PassError,
    ResourceError,
    SchemaError,
    UnsupportedCircuit,
)
from .noise import NoiseModel
from .protocol import OutcomeMap, estimate_violation, ideal_first_parity, ideal_violation, run_point
from .statevector import OutcomeCounts, exact_distribution, run_shots

__all__ = [
    "Circuit", "CircuitError", "MethodKind", "NdcError", "NoiseModel", "NumericalError", "OutcomeCounts",
    "OutcomeMap", "ParseError", "PassError", "ResourceError", "SchemaError", "UnsupportedCircuit",
    "build_lnn", "build_reference", "check_equivalence", "estimate_violation", "exact_distribution",
    "ideal_first_parity", "ideal_violation", "parse", "run_point", "run_shots", "serialize",
]
