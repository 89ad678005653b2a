"""Protocol circuits: unoptimised references and closed-form LNN generators.

Classical bits are shared by every builder: ``c1 = 0`` (first parity),
``c2 = 1`` (final parity), ``cp = 2`` (sub-protocol selector, 1 = measured).

Layouts
-------
H-method family: ``a1`` on wire 0, ``q_k`` on wire ``k``, ``a2`` on wire ``N+1``.

M-method family: the first ``ceil(N/2)`` data qubits on wires ``0..t-1``,
``a1 = t``, ``a2 = t+1``, the remaining data below them, and a dedicated
uncorrelated wire ``u = N+2`` that no gate ever touches.

``measured`` selects the sub-protocol: ``True`` (double measurement),
``False`` (single measurement) or ``None`` to keep the choice as classical
control on ``cp`` (reference circuits only).
"""

from __future__ import annotations

from enum import Enum

from .circuit import (
    Circuit,
    CircuitBuilder,
    ClassicallyControlled,
    Cnot,
    Hadamard,
    Measure,
)
from .errors import ResourceError

C1, C2, CP = 0, 1, 2
N_CLBITS = 3
MAX_QUBITS = 24


class MethodKind(str, Enum):
    H = "H"
    M = "M"
    NAIVE_H = "NaiveH"
    NAIVE_M = "NaiveM"

    @classmethod
    def parse(cls, text: "str | MethodKind") -> "MethodKind":
        if isinstance(text, MethodKind):
            return text
        for m in cls:
            if text.lower() in (m.value.lower(), m.name.lower()):
                return m
        raise ValueError(f"unknown method {text!r}; expected one of {[m.value for m in cls]}")

    @property
    def family(self) -> str:
        return "H" if self in (MethodKind.H, MethodKind.NAIVE_H) else "M"


def _check_n(n: int, minimum: int = 1) -> None:
    if n < minimum:
        raise ValueError(f"n must be at least {minimum}, got {n}")
    if n > MAX_QUBITS:
        raise ResourceError(f"n={n} exceeds the supported ceiling of {MAX_QUBITS} qubits")


def m_layout(n: int) -> tuple[list[int], int, int, int]:
    """Data wires (q1..qN order), a1, a2 and u for the M-method family."""
    top = (n + 1) // 2
    data = list(range(top)) + list(range(top + 2, n + 2))
    return data, top, top + 1, n + 2


def n_wires(method: MethodKind, n: int) -> int:
    return n + 2 if MethodKind.parse(method).family == "H" else n + 3


def data_wires(method: MethodKind, n: int) -> list[int]:
    if MethodKind.parse(method).family == "H":
        return list(range(1, n + 1))
    return m_layout(n)[0]


def _cond(measured: bool | None, want: bool, ins):
    """Emit ``ins`` when the branch is ``want``; under ``None`` wrap in control on cp."""
    if measured is None:
        return [ClassicallyControlled(CP, int(want), ins)]
    return [ins] if measured == want else []


def _meta(kind: str, method: MethodKind, n: int, theta: float, measured: bool | None) -> dict:
    return {
        "name": f"{kind} {method.value} n={n} theta={theta!r} measured={measured}",
        "method": method.value,
        "n": str(n),
    }


# ------------------------------------------------------------ references


def build_reference(method: MethodKind | str, n: int, theta: float, measured: bool | None) -> Circuit:
    """Unoptimised protocol circuit with long-range fan-ins, as drawn."""
    method = MethodKind.parse(method)
    _check_n(n)
    theta = float(theta)
    if method.family == "H":
        return _reference_h(method, n, theta, measured)
    return _reference_m(method, n, theta, measured)


def _reference_h(method: MethodKind, n: int, theta: float, measured: bool | None) -> Circuit:
    a1, a2 = 0, n + 1
    qs = range(1, n + 1)
    b = CircuitBuilder(n + 2, N_CLBITS, **_meta("reference", method, n, theta, measured))
    naive = method is MethodKind.NAIVE_H
    if not naive:
        b.add(*_cond(measured, False, Hadamard(a1)))
    for q in qs:
        b.ry(q, theta)
    for q in qs:
        if naive:
            b.add(*_cond(measured, True, Cnot(q, a1)))
        else:
            b.cx(q, a1)
    if naive:
        b.add(*_cond(measured, True, Measure(a1, C1)))
    else:
        b.measure(a1, C1)
    b.barrier()
    for q in qs:
        b.ry(q, theta)
    for q in qs:
        b.cx(q, a2)
    b.measure(a2, C2)
    return b.build()


def _reference_m(method: MethodKind, n: int, theta: float, measured: bool | None) -> Circuit:
    data, a1, a2, u = m_layout(n)
    b = CircuitBuilder(n + 3, N_CLBITS, **_meta("reference", method, n, theta, measured))
    for q in data:
        b.ry(q, theta)
    for q in data:
        b.cx(q, a1)
    b.barrier()
    b.add(*_cond(measured, True, Measure(a1, C1)))
    if method is MethodKind.M:
        b.add(*_cond(measured, False, Measure(u, C1)))
    b.barrier()
    for q in reversed(data):
        b.cx(q, a1)
    for q in data:
        b.ry(q, theta)
    for q in data:
        b.cx(q, a2)
    b.measure(a2, C2)
    return b.build()


# ------------------------------------------------------------ LNN generators


def build_lnn(
    method: MethodKind | str,
    n: int,
    theta: float,
    measured: bool | None,
    keep_first_readout: bool = False,
    decompose_nnn: bool = True,
) -> Circuit:
    """Optimised LNN circuit generated in closed form for any ``n >= 2``.

    ``keep_first_readout`` retains the ``a1`` readout (into c1) for the
    H-method family; ``decompose_nnn=False`` leaves the three next-nearest
    neighbour CNOTs of the M-method family in place.
    """
    method = MethodKind.parse(method)
    _check_n(n, 2)
    theta = float(theta)
    if method.family == "H":
        if method is MethodKind.NAIVE_H and measured is False:
            return _lnn_naive_h_single(n, theta)
        if method is MethodKind.NAIVE_H and measured is None:
            raise ValueError("the NaiveH sub-protocols are distinct circuits; pass measured=True/False")
        circ = _lnn_h(method, n, theta, measured, keep_first_readout)
    else:
        circ = _lnn_m(method, n, theta, measured, decompose_nnn)
    return circ


def _lnn_h(method: MethodKind, n: int, theta: float, measured: bool | None, keep_c1: bool) -> Circuit:
    a2 = n + 1
    b = CircuitBuilder(n + 2, N_CLBITS, **_meta("lnn", method, n, theta, measured))
    if method is MethodKind.H:
        b.add(*_cond(measured, False, Hadamard(0)))
    for q in range(1, n + 1):
        b.ry(q, theta)
    # Column c of the staircase: first fan-in ladder, its return ladder, the
    # second rotation layer and the second ladder, each lagging the previous.
    last = n + 6
    for c in range(1, last + 1):
        if c <= n:
            b.cx(c - 1, c)
        if 3 <= c <= n + 2:
            b.cx(c - 2, c - 3)
        if 0 <= c - 4 <= n - 1:
            b.ry(c - 4, theta)
        if 6 <= c and c - 5 <= n - 1:
            b.cx(c - 6, c - 5)
    b.cx(n, n - 1)
    b.cx(n - 1, n)
    b.cx(n, a2)
    b.measure(a2, C2)
    if keep_c1:
        # after the staircase wire n-1 holds P xor S and wire n holds P
        b.cx(n, n - 1)
        b.measure(n - 1, C1)
    return b.build()


def _lnn_naive_h_single(n: int, theta: float) -> Circuit:
    b = CircuitBuilder(n + 2, N_CLBITS, **_meta("lnn", MethodKind.NAIVE_H, n, theta, False))
    for q in range(1, n + 1):
        b.ry(q, 2 * theta)
    for q in range(1, n):
        b.cx(q, q + 1)
    b.cx(n, n + 1)
    b.measure(n + 1, C2)
    return b.build()


def _nnn(c: int, t: int, decompose: bool, restore: bool = True) -> list[Cnot]:
    """CNOT across one skipped wire, optionally as the four-gate LNN identity.

    ``restore=False`` omits the last gate, which only restores the skipped
    wire and is dead when nothing reads that wire afterwards.
    """
    if not decompose:
        return [Cnot(c, t)]
    m = (c + t) // 2
    gates = [Cnot(m, t), Cnot(c, m), Cnot(m, t), Cnot(c, m)]
    return gates if restore else gates[:3]


def _lnn_m(method: MethodKind, n: int, theta: float, measured: bool | None, decompose: bool) -> Circuit:
    data, a1, a2, u = m_layout(n)
    top = data[: a1]
    bottom = data[a1:]
    b = CircuitBuilder(n + 3, N_CLBITS, **_meta("lnn", method, n, theta, measured))
    for q in data:
        b.ry(q, theta)

    def ladder(target: int, restore: bool = True) -> None:
        # top half accumulates downward, bottom half upward, both toward the ancillas
        up = list(zip(top[:-1], top[1:]))
        down = list(zip(bottom[:0:-1], bottom[-2::-1]))
        for k in range(max(len(up), len(down))):
            if k < len(up):
                b.cx(*up[k])
            if k < len(down):
                b.cx(*down[k])
        tc, bc = top[-1], bottom[0]
        b.add(*(_nnn(tc, target, decompose, restore) if abs(tc - target) == 2 else [Cnot(tc, target)]))
        b.add(*(_nnn(bc, target, decompose) if abs(bc - target) == 2 else [Cnot(bc, target)]))

    def unladder() -> None:
        up = list(zip(top[:-1], top[1:]))[::-1]
        down = list(zip(bottom[:0:-1], bottom[-2::-1]))[::-1]
        for k in range(max(len(up), len(down))):
            if k < len(up):
                b.cx(*up[k])
            if k < len(down):
                b.cx(*down[k])

    ladder(a1)
    b.barrier()
    b.add(*_cond(measured, True, Measure(a1, C1)))
    if method is MethodKind.M:
        b.add(*_cond(measured, False, Measure(u, C1)))
    b.barrier()
    b.cx(top[-1], a1)
    b.add(*_nnn(bottom[0], a1, decompose))
    unladder()
    for q in data:
        b.ry(q, theta)
    ladder(a2, restore=False)
    b.measure(a2, C2)
    return b.build()
