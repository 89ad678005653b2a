"""Circuit intermediate representation, structural metrics and text format.

Wires live on a fixed line: wire ``i`` is adjacent to ``i - 1`` and ``i + 1``.
Instructions are immutable dataclasses; a :class:`Circuit` is an immutable
ordered sequence of them plus declared wire/clbit counts.

Text format (one instruction per line, ``#`` starts a comment)::

    wires 6 clbits 3
    cif 2 0 h 0
    ry 1 0.7853981633974483
    cx 1 0
    meas 0 0
    barrier 0 1 2
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import CircuitError, ParseError


@dataclass(frozen=True)
class RotY:
    wire: int
    angle: float


@dataclass(frozen=True)
class RotZ:
    wire: int
    angle: float


@dataclass(frozen=True)
class Hadamard:
    wire: int


@dataclass(frozen=True)
class PauliX:
    wire: int


@dataclass(frozen=True)
class SqrtX:
    wire: int


@dataclass(frozen=True)
class TGate:
    wire: int


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


@dataclass(frozen=True)
class Swap:
    a: int
    b: int


@dataclass(frozen=True)
class Measure:
    wire: int
    clbit: int


@dataclass(frozen=True)
class Barrier:
    """Scheduling fence. An empty wire tuple fences every wire."""

    wires: tuple[int, ...] = ()


@dataclass(frozen=True)
class ClassicallyControlled:
    bit: int
    value: int
    inner: "Instruction"


Gate1 = Union[RotY, RotZ, Hadamard, PauliX, SqrtX, TGate]
Instruction = Union[Gate1, Cnot, Swap, Measure, Barrier, ClassicallyControlled]

ONE_QUBIT = (RotY, RotZ, Hadamard, PauliX, SqrtX, TGate)
TWO_QUBIT = (Cnot, Swap)


def instr_wires(instr: Instruction) -> tuple[int, ...]:
    """Wires touched by ``instr`` (for a Barrier, its explicit wire list)."""
    if isinstance(instr, ONE_QUBIT):
        return (instr.wire,)
    if isinstance(instr, Cnot):
        return (instr.control, instr.target)
    if isinstance(instr, Swap):
        return (instr.a, instr.b)
    if isinstance(instr, Measure):
        return (instr.wire,)
    if isinstance(instr, Barrier):
        return instr.wires
    if isinstance(instr, ClassicallyControlled):
        return instr_wires(instr.inner)
    raise CircuitError(f"unknown instruction {instr!r}")


def instr_clbits(instr: Instruction) -> tuple[int, ...]:
    if isinstance(instr, Measure):
        return (instr.clbit,)
    if isinstance(instr, ClassicallyControlled):
        return (instr.bit,) + instr_clbits(instr.inner)
    return ()


def relabel(instr: Instruction, perm: Mapping[int, int]) -> Instruction:
    """Return ``instr`` with every wire ``w`` replaced by ``perm.get(w, w)``."""
    m = lambda w: perm.get(w, w)  # noqa: E731
    if isinstance(instr, (RotY, RotZ)):
        return type(instr)(m(instr.wire), instr.angle)
    if isinstance(instr, ONE_QUBIT):
        return type(instr)(m(instr.wire))
    if isinstance(instr, Cnot):
        return Cnot(m(instr.control), m(instr.target))
    if isinstance(instr, Swap):
        return Swap(m(instr.a), m(instr.b))
    if isinstance(instr, Measure):
        return Measure(m(instr.wire), instr.clbit)
    if isinstance(instr, Barrier):
        return Barrier(tuple(m(w) for w in instr.wires))
    if isinstance(instr, ClassicallyControlled):
        return ClassicallyControlled(instr.bit, instr.value, relabel(instr.inner, perm))
    raise CircuitError(f"unknown instruction {instr!r}")


def _check_instr(instr: Instruction, n_wires: int, n_clbits: int, nested: bool = False) -> None:
    if isinstance(instr, ClassicallyControlled):
        if nested:
            raise CircuitError("classically controlled instruction may not be nested")
        if instr.value not in (0, 1):
            raise CircuitError(f"required value must be 0 or 1, got {instr.value}")
        if not 0 <= instr.bit < n_clbits:
            raise CircuitError(f"clbit {instr.bit} out of range (n_clbits={n_clbits})")
        if isinstance(instr.inner, Barrier):
            raise CircuitError("a barrier cannot be classically controlled")
        _check_instr(instr.inner, n_wires, n_clbits, nested=True)
        return
    if not isinstance(instr, ONE_QUBIT + TWO_QUBIT + (Measure, Barrier)):
        raise CircuitError(f"unknown instruction {instr!r}")
    ws = instr_wires(instr)
    for w in ws:
        if not isinstance(w, int) or not 0 <= w < n_wires:
            raise CircuitError(f"wire {w} out of range (n_wires={n_wires}) in {instr!r}")
    if isinstance(instr, TWO_QUBIT) and ws[0] == ws[1]:
        raise CircuitError(f"two-qubit gate on a single wire: {instr!r}")
    if isinstance(instr, (RotY, RotZ)) and not math.isfinite(instr.angle):
        raise CircuitError(f"non-finite angle in {instr!r}")
    if isinstance(instr, Measure) and not 0 <= instr.clbit < n_clbits:
        raise CircuitError(f"clbit {instr.clbit} out of range (n_clbits={n_clbits})")


@dataclass(frozen=True)
class Circuit:
    n_wires: int
    n_clbits: int
    instructions: tuple[Instruction, ...] = ()
    metadata: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if self.n_wires < 0 or self.n_clbits < 0:
            raise CircuitError("wire and clbit counts must be non-negative")
        for instr in self.instructions:
            _check_instr(instr, self.n_wires, self.n_clbits)

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def replace(self, instructions: Iterable[Instruction], **meta: str) -> "Circuit":
        md = dict(self.metadata)
        md.update(meta)
        return Circuit(self.n_wires, self.n_clbits, tuple(instructions), md)

    def resolve(self, clbits: Mapping[int, int]) -> "Circuit":
        """Statically resolve classical control on the given preset bits."""
        out: list[Instruction] = []
        for ins in self.instructions:
            if isinstance(ins, ClassicallyControlled) and ins.bit in clbits:
                if clbits[ins.bit] == ins.value:
                    out.append(ins.inner)
            else:
                out.append(ins)
        return self.replace(out)


class CircuitBuilder:
    """Small mutable helper used by the circuit builders."""

    def __init__(self, n_wires: int, n_clbits: int, **metadata: str):
        self.n_wires = n_wires
        self.n_clbits = n_clbits
        self.ops: list[Instruction] = []
        self.metadata = dict(metadata)

    def add(self, *instrs: Instruction) -> "CircuitBuilder":
        self.ops.extend(instrs)
        return self

    def ry(self, w: int, angle: float) -> "CircuitBuilder":
        return self.add(RotY(w, float(angle)))

    def h(self, w: int) -> "CircuitBuilder":
        return self.add(Hadamard(w))

    def cx(self, c: int, t: int) -> "CircuitBuilder":
        return self.add(Cnot(c, t))

    def measure(self, w: int, c: int) -> "CircuitBuilder":
        return self.add(Measure(w, c))

    def barrier(self, *wires: int) -> "CircuitBuilder":
        return self.add(Barrier(tuple(wires)))

    def build(self) -> Circuit:
        return Circuit(self.n_wires, self.n_clbits, tuple(self.ops), self.metadata)


def validate(circuit: Circuit) -> None:
    """Re-run structural validation; raises :class:`CircuitError`."""
    for instr in circuit.instructions:
        _check_instr(instr, circuit.n_wires, circuit.n_clbits)


# ---------------------------------------------------------------- metrics


def asap_slots(circuit: Circuit) -> list[int]:
    """Greedy ASAP slot of each instruction; barriers get slot -1."""
    wire_ready = [0] * circuit.n_wires
    bit_ready = [0] * circuit.n_clbits
    slots: list[int] = []
    for ins in circuit.instructions:
        if isinstance(ins, Barrier):
            ws = ins.wires or tuple(range(circuit.n_wires))
            fence = max((wire_ready[w] for w in ws), default=0)
            for w in ws:
                wire_ready[w] = fence
            slots.append(-1)
            continue
        ws = instr_wires(ins)
        bs = instr_clbits(ins)
        s = max([wire_ready[w] for w in ws] + [bit_ready[b] for b in bs])
        for w in ws:
            wire_ready[w] = s + 1
        for b in bs:
            bit_ready[b] = s + 1
        slots.append(s)
    return slots


def depth(circuit: Circuit) -> int:
    """Number of greedy ASAP time slots; barriers are fences, not slots."""
    validate(circuit)
    return max((s + 1 for s in asap_slots(circuit)), default=0)


def _is_two_qubit(ins: Instruction) -> bool:
    inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
    return isinstance(inner, TWO_QUBIT)


def count_lnn_cnots(circuit: Circuit) -> int:
    """Adjacent CNOTs, with an adjacent Swap counting as three."""
    validate(circuit)
    total = 0
    for ins in circuit.instructions:
        inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
        if isinstance(inner, TWO_QUBIT):
            a, b = instr_wires(inner)
            if abs(a - b) == 1:
                total += 3 if isinstance(inner, Swap) else 1
    return total


def count_cnots(circuit: Circuit) -> int:
    """All CNOTs regardless of distance, Swap counting as three."""
    total = 0
    for ins in circuit.instructions:
        inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
        if isinstance(inner, Cnot):
            total += 1
        elif isinstance(inner, Swap):
            total += 3
    return total


@dataclass(frozen=True)
class LnnViolation:
    index: int
    instruction: Instruction
    distance: int


def validate_lnn(circuit: Circuit) -> list[LnnViolation]:
    """Every two-qubit instruction acting on non-adjacent wires."""
    out = []
    for i, ins in enumerate(circuit.instructions):
        if _is_two_qubit(ins):
            a, b = instr_wires(ins)
            if abs(a - b) != 1:
                out.append(LnnViolation(i, ins, abs(a - b)))
    return out


# ---------------------------------------------------------------- text format

_MNEMONIC_1Q = {Hadamard: "h", PauliX: "x", SqrtX: "sx", TGate: "t"}
_FROM_MNEMONIC_1Q = {v: k for k, v in _MNEMONIC_1Q.items()}


def _format_angle(a: float) -> str:
    return repr(float(a))


def format_instruction(ins: Instruction) -> str:
    if isinstance(ins, RotY):
        return f"ry {ins.wire} {_format_angle(ins.angle)}"
    if isinstance(ins, RotZ):
        return f"rz {ins.wire} {_format_angle(ins.angle)}"
    if isinstance(ins, ONE_QUBIT):
        return f"{_MNEMONIC_1Q[type(ins)]} {ins.wire}"
    if isinstance(ins, Cnot):
        return f"cx {ins.control} {ins.target}"
    if isinstance(ins, Swap):
        return f"swap {ins.a} {ins.b}"
    if isinstance(ins, Measure):
        return f"meas {ins.wire} {ins.clbit}"
    if isinstance(ins, Barrier):
        return " ".join(["barrier"] + [str(w) for w in ins.wires])
    if isinstance(ins, ClassicallyControlled):
        return f"cif {ins.bit} {ins.value} {format_instruction(ins.inner)}"
    raise CircuitError(f"unknown instruction {ins!r}")


def serialize(circuit: Circuit) -> str:
    lines = []
    name = circuit.metadata.get("name")
    if name:
        lines.append(f"# {name}")
    lines.append(f"wires {circuit.n_wires} clbits {circuit.n_clbits}")
    lines.extend(format_instruction(ins) for ins in circuit.instructions)
    return "\n".join(lines) + "\n"


def _int(tok: str, lineno: int) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ParseError("expected a non-negative integer", lineno, tok) from None
    if v < 0:
        raise ParseError("expected a non-negative integer", lineno, tok)
    return v


def _float(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError("expected an angle in radians", lineno, tok) from None
    if not math.isfinite(v):
        raise ParseError("angle must be finite", lineno, tok)
    return v


def _parse_tokens(toks: Sequence[str], lineno: int) -> Instruction:
    op, args = toks[0], list(toks[1:])

    def need(k: int) -> None:
        if len(args) != k:
            tok = args[k] if len(args) > k else op
            raise ParseError(f"'{op}' takes {k} operand(s), got {len(args)}", lineno, tok)

    if op in ("ry", "rz"):
        need(2)
        cls = RotY if op == "ry" else RotZ
        return cls(_int(args[0], lineno), _float(args[1], lineno))
    if op in _FROM_MNEMONIC_1Q:
        need(1)
        return _FROM_MNEMONIC_1Q[op](_int(args[0], lineno))
    if op == "cx":
        need(2)
        return Cnot(_int(args[0], lineno), _int(args[1], lineno))
    if op == "swap":
        need(2)
        return Swap(_int(args[0], lineno), _int(args[1], lineno))
    if op == "meas":
        need(2)
        return Measure(_int(args[0], lineno), _int(args[1], lineno))
    if op == "barrier":
        return Barrier(tuple(_int(a, lineno) for a in args))
    if op == "cif":
        if len(args) < 3:
            raise ParseError("'cif' needs <clbit> <0|1> <instruction>", lineno, op)
        bit = _int(args[0], lineno)
        if args[1] not in ("0", "1"):
            raise ParseError("required value must be 0 or 1", lineno, args[1])
        if args[2] == "cif":
            raise ParseError("nested classical control", lineno, args[2])
        return ClassicallyControlled(bit, int(args[1]), _parse_tokens(args[2:], lineno))
    raise ParseError("unknown gate name", lineno, op)


def parse(text: str) -> Circuit:
    """Parse the text format; errors carry the line number and offending token."""
    header: tuple[int, int] | None = None
    instrs: list[Instruction] = []
    name = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("#")
        toks = body.split()
        if not toks:
            if header is None and name is None and comment.strip():
                name = comment.strip()
            continue
        if header is None:
            if len(toks) != 4 or toks[0] != "wires" or toks[2] != "clbits":
                raise ParseError("expected header 'wires N clbits M'", lineno, toks[0])
            header = (_int(toks[1], lineno), _int(toks[3], lineno))
            continue
        ins = _parse_tokens(toks, lineno)
        try:
            _check_instr(ins, header[0], header[1])
        except CircuitError as exc:
            raise ParseError(str(exc), lineno, toks[0]) from None
        instrs.append(ins)
    if header is None:
        raise ParseError("missing header 'wires N clbits M'", 0, "")
    meta = {"name": name} if name else {}
    return Circuit(header[0], header[1], tuple(instrs), meta)
