"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: validation-type errors exit with 2,
resource ceilings with 3.
"""

from __future__ import annotations


class NdcError(Exception):
    """Base class for every error raised by this package."""


class CircuitError(NdcError):
    """Structural problem with a circuit (wire/clbit out of range, bad instruction)."""


class ParseError(NdcError):
    """Syntax error in a text file; carries the 1-based line number and token."""

    def __init__(self, message: str, line: int = 0, token: str = ""):
        self.line = line
        self.token = token
        where = f"line {line}" if line else "input"
        tok = f" near {token!r}" if token else ""
        super().__init__(f"{where}{tok}: {message}")


class NumericalError(NdcError):
    """Non-finite amplitudes or a collapse onto a numerically empty branch."""


class ResourceError(NdcError):
    """A configured ceiling (wire count, branch budget) would be exceeded."""


class SchemaError(NdcError):
    """Counts, rows or config content do not match the expected schema."""


class PassError(NdcError):
    """A rewrite pass was asked to act outside its applicability class."""


class UnsupportedCircuit(NdcError):
    """The Pauli-frame engine cannot represent this circuit."""
