"""Rewrite passes replaying the LNN derivation, plus the two pipelines.

Every pass is a pure function ``Circuit -> Circuit`` that preserves the
measurement-outcome distribution. Passes whose applicability depends on the
input raise :class:`PassError` with a diagnostic instead of rewriting.

Pipelines
---------
:func:`h_pipeline` turns the H-method reference into the staircase circuit:
measurement commutation, two SWAP chains, CNOT/SWAP commutation, long-range
expansion with a SWAP bridge, SWAP decomposition with cancellation, light-cone
elision and barrier removal.

:func:`m_pipeline` turns the M-method reference into the V-chain circuit:
long-range expansion, cancellation across the mid-circuit measurement and
light-cone elision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .builders import C1, C2, MethodKind, build_reference
from .circuit import (
    Barrier,
    Circuit,
    ClassicallyControlled,
    Cnot,
    Hadamard,
    Instruction,
    Measure,
    RotY,
    RotZ,
    SqrtX,
    Swap,
    TGate,
    format_instruction,
    instr_clbits,
    instr_wires,
    relabel,
)
from .errors import PassError


@dataclass(frozen=True)
class RewritePass:
    name: str
    transform: Callable[[Circuit], Circuit]
    applicable: Callable[[Circuit], bool] = lambda c: True

    def __call__(self, circuit: Circuit) -> Circuit:
        if not self.applicable(circuit):
            raise PassError(f"pass {self.name!r} is not applicable to this circuit")
        return self.transform(circuit)


def _wires(ins: Instruction, n_wires: int) -> tuple[int, ...]:
    if isinstance(ins, Barrier) and not ins.wires:
        return tuple(range(n_wires))
    return instr_wires(ins)


def _reads(ins: Instruction) -> tuple[int, ...]:
    return (ins.bit,) if isinstance(ins, ClassicallyControlled) else ()


def _writes(ins: Instruction) -> tuple[int, ...]:
    inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
    return (inner.clbit,) if isinstance(inner, Measure) else ()


# ------------------------------------------------------------ measurement commutation


def _movable(instrs: Sequence[Instruction], i: int, n_wires: int) -> str | None:
    """Reason the measurement at ``i`` cannot move to the end, or None."""
    m = instrs[i]
    for later in instrs[i + 1 :]:
        if isinstance(later, Barrier):
            continue
        if m.wire in _wires(later, n_wires):
            return f"wire {m.wire} is used later by {format_instruction(later)!r}"
        if m.clbit in _reads(later) or m.clbit in _writes(later):
            return f"clbit {m.clbit} is used later by {format_instruction(later)!r}"
    return None


def commute_measurement_to_end(circuit: Circuit, wires: Iterable[int] | None = None) -> Circuit:
    """Move measurements whose wire and clbit are untouched afterwards to the end.

    With ``wires`` given, the measurements on those wires must be movable;
    otherwise every movable measurement not already trailing is moved.
    """
    instrs = list(circuit.instructions)
    wanted = None if wires is None else set(wires)
    moved: list[Instruction] = []
    i = 0
    while i < len(instrs):
        ins = instrs[i]
        if isinstance(ins, Measure) and (wanted is None or ins.wire in wanted):
            trailing = all(isinstance(x, (Measure, Barrier)) for x in instrs[i + 1 :])
            reason = _movable(instrs, i, circuit.n_wires)
            if reason is None and not (wanted is None and trailing):
                moved.append(instrs.pop(i))
                if wanted is not None:
                    wanted.discard(ins.wire)
                continue
            if reason is not None and wanted is not None:
                raise PassError(f"cannot commute measurement on wire {ins.wire} to the end: {reason}")
        i += 1
    if wanted:
        raise PassError(f"no measurement found on wires {sorted(wanted)}")
    return circuit.replace(instrs + moved)


# ------------------------------------------------------------ swap chains


def chain_permutation(n_wires: int, chain: Sequence[tuple[int, int]]) -> dict[int, int]:
    """Where each wire's content ends up after applying ``chain`` in order."""
    at = list(range(n_wires))  # at[p] = original wire whose content sits on p
    for a, b in chain:
        at[a], at[b] = at[b], at[a]
    return {orig: pos for pos, orig in enumerate(at)}


def insert_swap_chains(
    circuit: Circuit, start: int, stop: int, chain: Sequence[tuple[int, int]]
) -> Circuit:
    """Insert ``chain`` before ``start`` and its reverse before ``stop``.

    Instructions in ``[start, stop)`` are relabelled so they act on the
    contents the chain moved, which leaves the circuit's action unchanged.
    """
    n = len(circuit)
    if not 0 <= start <= stop <= n:
        raise PassError(f"invalid region [{start}, {stop}) for a circuit of {n} instructions")
    for a, b in chain:
        if a == b or not (0 <= a < circuit.n_wires and 0 <= b < circuit.n_wires):
            raise PassError(f"invalid swap ({a}, {b}) in chain")
    perm = chain_permutation(circuit.n_wires, chain)
    ins = circuit.instructions
    swaps = [Swap(a, b) for a, b in chain]
    body = [relabel(x, perm) for x in ins[start:stop]]
    return circuit.replace(list(ins[:start]) + swaps + body + swaps[::-1] + list(ins[stop:]))


# ------------------------------------------------------------ CNOT / SWAP commutation


def _commutes_with_cnot(cx: Cnot, other: Instruction) -> bool:
    if isinstance(other, Cnot):
        if other.control == cx.target or other.target == cx.control:
            return False
        return True
    return False


def commute_cnot_through_swaps(circuit: Circuit, region: tuple[int, int] | None = None) -> Circuit:
    """Push long-range CNOTs rightwards through SWAPs while that shortens them.

    Crossing ``Swap(a, b)`` relabels the CNOT's wires through the swap. A CNOT
    may also pass gates it commutes with. It settles at the last position where
    its span shrank, stopping as soon as it is adjacent. CNOTs are processed
    from the rightmost one in ``region`` (default: the whole circuit); moves never
    leave the region.
    """
    instrs = list(circuit.instructions)
    lo, hi = region if region is not None else (0, len(instrs))
    if not 0 <= lo <= hi <= len(instrs):
        raise PassError(f"invalid region {region}")
    i = hi - 1
    while i >= lo:
        cx = instrs[i]
        if not isinstance(cx, Cnot) or abs(cx.control - cx.target) <= 1:
            i -= 1
            continue
        cur, best, best_at = cx, None, None
        j = i + 1
        while j < hi and abs(cur.control - cur.target) > 1:
            other = instrs[j]
            ws = set(_wires(other, circuit.n_wires))
            if not ws & {cur.control, cur.target}:
                pass
            elif isinstance(other, Swap):
                perm = {other.a: other.b, other.b: other.a}
                nxt = relabel(cur, perm)
                if abs(nxt.control - nxt.target) >= abs(cur.control - cur.target):
                    break
                cur, best, best_at = nxt, nxt, j
            elif not _commutes_with_cnot(cur, other):
                break
            j += 1
        if best is not None:
            del instrs[i]
            instrs.insert(best_at, best)  # best_at shifted left by the deletion
        i -= 1
    return circuit.replace(instrs)


# ------------------------------------------------------------ long-range expansion


def _v_chain(controls: Sequence[int], target: int) -> list[Cnot]:
    """XOR a contiguous block of controls adjacent to ``target`` onto it."""
    block = sorted(controls, key=lambda w: abs(w - target), reverse=True)
    ladder = [Cnot(a, b) for a, b in zip(block[:-1], block[1:])]
    return ladder + [Cnot(block[-1], target)] + ladder[::-1]


def _lone(c: int, t: int) -> list[Cnot]:
    """Single CNOT at any distance as two V-chains (correction chain first)."""
    step = 1 if t > c else -1
    between = list(range(c + step, t, step))
    if not between:
        return [Cnot(c, t)]
    return _v_chain(between, t) + _v_chain([c] + between, t)


def _bridge(b: int, t: int) -> tuple[list[Swap], int]:
    """SWAPs moving wire ``b``'s content next to ``t``; returns them and the new wire."""
    step = 1 if t > b else -1
    swaps = [Swap(w, w + step) for w in range(b, t - step, step)]
    return swaps, t - step


def _expand_group(controls: list[int], target: int, gap_bridge: str) -> list[Instruction]:
    below = sorted(c for c in controls if c < target)
    above = sorted((c for c in controls if c > target), reverse=True)
    out: list[Instruction] = []
    for side in (below, above):
        if not side:
            continue
        near = side[-1]
        contiguous = all(abs(x - y) == 1 for x, y in zip(side, side[1:]))
        if len(side) == 1 or not contiguous:
            for c in side:
                out += _lone(c, target) if gap_bridge == "identity" or abs(c - target) == 1 else _bridged([c], target)
            continue
        if abs(near - target) == 1:
            out += _v_chain(side, target)
        elif gap_bridge == "swap":
            out += _bridged(side, target)
        else:
            ladder = [Cnot(a, b) for a, b in zip(side[:-1], side[1:])]
            out += ladder + _lone(near, target) + ladder[::-1]
    return out


def _bridged(side: list[int], target: int) -> list[Instruction]:
    ladder = [Cnot(a, b) for a, b in zip(side[:-1], side[1:])]
    swaps, moved = _bridge(side[-1], target)
    return ladder + swaps + [Cnot(moved, target)] + swaps[::-1] + ladder[::-1]


def expand_long_range_cnot(circuit: Circuit, gap_bridge: str = "identity") -> Circuit:
    """Replace every non-adjacent CNOT by nearest-neighbour CNOTs.

    Maximal runs of consecutive CNOTs sharing a target are handled together:
    a contiguous block of controls adjacent to the target becomes one V-chain
    (ladder, hop, reverse ladder). When the block is separated from the target
    by other wires, the hop is either the two-V-chain identity
    (``gap_bridge="identity"``) or a SWAP bridge (``gap_bridge="swap"``).
    Controls on the two sides of the target are expanded side by side.
    """
    if gap_bridge not in ("identity", "swap"):
        raise PassError(f"gap_bridge must be 'identity' or 'swap', got {gap_bridge!r}")
    instrs = circuit.instructions
    out: list[Instruction] = []
    i = 0
    while i < len(instrs):
        ins = instrs[i]
        if not isinstance(ins, Cnot):
            out.append(ins)
            i += 1
            continue
        j = i
        controls: list[int] = []
        while j < len(instrs) and isinstance(instrs[j], Cnot) and instrs[j].target == ins.target:
            controls.append(instrs[j].control)
            j += 1
        if len(set(controls)) != len(controls):
            # repeated controls cancel in pairs; keep the run verbatim and expand each
            for c in controls:
                out += _lone(c, ins.target) if abs(c - ins.target) > 1 else [Cnot(c, ins.target)]
        elif all(abs(c - ins.target) == 1 for c in controls):
            out += [Cnot(c, ins.target) for c in controls]
        else:
            out += _expand_group(controls, ins.target, gap_bridge)
        i = j
    return circuit.replace(out)


# ------------------------------------------------------------ swaps and cancellation


def _last_touching(out: list[Instruction], ws: set[int], n_wires: int) -> int | None:
    for k in range(len(out) - 1, -1, -1):
        x = out[k]
        if isinstance(x, Barrier):
            continue
        if ws & set(_wires(x, n_wires)):
            return k
    return None


def decompose_swaps_and_cancel(circuit: Circuit) -> Circuit:
    """Expand each SWAP into three CNOTs and cancel identical adjacent CNOT pairs.

    The SWAP is oriented so its first CNOT matches the preceding gate on the
    same wires when possible. Cancellation is a left-to-right greedy scan:
    a CNOT cancels the most recent instruction touching either of its wires
    when that instruction is the same CNOT. Barriers are transparent to
    cancellation.
    """
    out: list[Instruction] = []

    def push(cx: Cnot) -> None:
        k = _last_touching(out, {cx.control, cx.target}, circuit.n_wires)
        if k is not None and out[k] == cx:
            del out[k]
        else:
            out.append(cx)

    for ins in circuit.instructions:
        if isinstance(ins, Swap):
            a, b = ins.a, ins.b
            k = _last_touching(out, {a, b}, circuit.n_wires)
            first = out[k] if k is not None and isinstance(out[k], Cnot) and {out[k].control, out[k].target} == {a, b} else Cnot(b, a)
            c, t = first.control, first.target
            for g in (Cnot(c, t), Cnot(t, c), Cnot(c, t)):
                push(g)
        elif isinstance(ins, Cnot):
            push(ins)
        else:
            out.append(ins)
    return circuit.replace(out)


# ------------------------------------------------------------ light-cone elision

_DIAGONAL = (RotZ, TGate)
_Z, _FULL = 1, 2


def elide_post_final_measurement_gates(circuit: Circuit, keep_clbits: Iterable[int] | None = None) -> Circuit:
    """Drop every instruction outside the backward light cone of the kept readouts.

    A wire is tracked as dead, needed only in the computational basis, or
    fully needed. A CNOT whose target is dead and whose control is at most
    basis-needed cannot change any kept outcome; neither can a diagonal gate
    on a basis-needed wire. ``keep_clbits`` defaults to every measured clbit.
    """
    if keep_clbits is None:
        keep = {b for ins in circuit.instructions for b in _writes(ins)}
    else:
        keep = set(keep_clbits)
    pending = set(keep)
    live = [0] * circuit.n_wires
    kept: list[Instruction] = []
    for ins in reversed(circuit.instructions):
        inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
        ws = _wires(inner, circuit.n_wires)
        use = False
        if isinstance(inner, Barrier):
            use = any(live[w] for w in ws)
        elif isinstance(inner, Measure):
            if inner.clbit in pending or live[inner.wire]:
                use = True
                pending.discard(inner.clbit)
                live[inner.wire] = max(live[inner.wire], _Z)
        elif isinstance(inner, Cnot):
            lc, lt = live[inner.control], live[inner.target]
            if lt == 0 and lc <= _Z:
                use = False
            elif lt <= _Z and lc <= _Z:
                use = True
                live[inner.control] = live[inner.target] = _Z
            else:
                use = True
                live[inner.control] = live[inner.target] = _FULL
        elif isinstance(inner, Swap):
            la, lb = live[inner.a], live[inner.b]
            use = bool(la or lb)
            live[inner.a], live[inner.b] = lb, la
        elif isinstance(inner, _DIAGONAL):
            use = live[inner.wire] == _FULL
        else:
            use = bool(live[inner.wire])
            if use:
                live[inner.wire] = _FULL
        if use and isinstance(ins, ClassicallyControlled):
            pending.add(ins.bit)
            for w in ws:
                live[w] = _FULL
        if use:
            kept.append(ins)
    return circuit.replace(kept[::-1])


def strip_barriers(circuit: Circuit) -> Circuit:
    return circuit.replace(x for x in circuit.instructions if not isinstance(x, Barrier))


# ------------------------------------------------------------ optional rebasing


def rebase_to_sx_rz(circuit: Circuit) -> Circuit:
    """Rewrite RY and H into {SX, RZ}; RZ angles are reduced to (-pi, pi]."""

    def rz(w: int, a: float) -> RotZ:
        a = math.remainder(a, 2 * math.pi)
        return RotZ(w, math.pi if math.isclose(a, -math.pi) else a)

    def one(ins: Instruction) -> list[Instruction]:
        if isinstance(ins, RotY):
            w = ins.wire
            return [rz(w, math.pi), SqrtX(w), rz(w, math.pi - ins.angle), SqrtX(w)]
        if isinstance(ins, Hadamard):
            w = ins.wire
            return [rz(w, math.pi / 2), SqrtX(w), rz(w, math.pi / 2)]
        return [ins]

    out: list[Instruction] = []
    for ins in circuit.instructions:
        if isinstance(ins, ClassicallyControlled):
            out += [ClassicallyControlled(ins.bit, ins.value, g) for g in one(ins.inner)]
        else:
            out += one(ins)
    return circuit.replace(out)


def t_count(circuit: Circuit, atol: float = 1e-9) -> int:
    """Number of RZ rotations by an odd multiple of pi/4 (each needs one T)."""
    total = 0
    for ins in circuit.instructions:
        inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
        if isinstance(inner, TGate):
            total += 1
        elif isinstance(inner, RotZ):
            k = inner.angle / (math.pi / 4)
            if abs(k - round(k)) < atol and round(k) % 2 == 1:
                total += 1
    return total


# ------------------------------------------------------------ pipelines


def _first(circuit: Circuit, pred: Callable[[Instruction], bool]) -> int:
    for i, ins in enumerate(circuit.instructions):
        if pred(ins):
            return i
    raise PassError("expected instruction not found")


def h_pipeline(reference: Circuit, keep_first_readout: bool = False, stages: list | None = None) -> Circuit:
    """H-method reference (ancilla a1 on wire 0, a2 on the last wire) to LNN form.

    ``stages``, when given, collects ``(name, circuit)`` after every step.
    """
    n = reference.n_wires - 2
    a1, a2 = 0, n + 1

    def log(name: str, c: Circuit) -> Circuit:
        if stages is not None:
            stages.append((name, c))
        return c

    c = log("commute_measurement_to_end", commute_measurement_to_end(reference, wires=[a1]))
    start = _first(c, lambda x: isinstance(x, Barrier))
    stop = _first(c, lambda x: isinstance(x, Measure) and x.wire == a2)
    c = log("insert_swap_chains", insert_swap_chains(c, start, stop, [(k, k + 1) for k in range(n)]))
    first_barrier = _first(c, lambda x: isinstance(x, Barrier))
    c = log("commute_cnot_through_swaps", commute_cnot_through_swaps(c, region=(0, first_barrier)))
    c = log("expand_long_range_cnot", expand_long_range_cnot(c, gap_bridge="swap"))
    c = log("decompose_swaps_and_cancel", decompose_swaps_and_cancel(c))
    keep = (C1, C2) if keep_first_readout else (C2,)
    c = log("elide_post_final_measurement_gates", elide_post_final_measurement_gates(c, keep))
    return log("strip_barriers", strip_barriers(c))


def m_pipeline(reference: Circuit, stages: list | None = None) -> Circuit:
    """M-method reference (ancillas in the middle) to LNN form."""

    def log(name: str, c: Circuit) -> Circuit:
        if stages is not None:
            stages.append((name, c))
        return c

    c = log("expand_long_range_cnot", expand_long_range_cnot(reference, gap_bridge="identity"))
    c = log("decompose_swaps_and_cancel", decompose_swaps_and_cancel(c))
    return log("elide_post_final_measurement_gates", elide_post_final_measurement_gates(c))


def run_pipeline(method: MethodKind | str, n: int, theta: float, measured: bool | None,
                 keep_first_readout: bool = False) -> Circuit:
    """Replay the derivation on the reference circuit for ``method``."""
    method = MethodKind.parse(method)
    if method is MethodKind.NAIVE_H and measured is not True:
        raise PassError("the NaiveH pipeline exists only for the measured sub-protocol")
    ref = build_reference(method, n, theta, measured)
    if method.family == "H":
        return h_pipeline(ref, keep_first_readout)
    return m_pipeline(ref)


def commute(a: Instruction, b: Instruction) -> bool:
    """Sufficient syntactic test that two instructions commute."""
    if isinstance(a, Barrier) or isinstance(b, Barrier):
        return False
    bits_a, bits_b = set(instr_clbits(a)), set(instr_clbits(b))
    if (set(_writes(a)) & bits_b) or (set(_writes(b)) & bits_a):
        return False
    shared = set(instr_wires(a)) & set(instr_wires(b))
    if not shared:
        return True
    if isinstance(a, ClassicallyControlled) or isinstance(b, ClassicallyControlled):
        return False
    if isinstance(a, Cnot) and isinstance(b, Cnot):
        if a == b:
            return False
        return (a.control == b.control and a.target != b.target) or (
            a.target == b.target and a.control != b.control
        )
    for x, y in ((a, b), (b, a)):
        if isinstance(x, _DIAGONAL) and isinstance(y, Cnot) and x.wire == y.control:
            return True
        if isinstance(x, _DIAGONAL) and isinstance(y, _DIAGONAL):
            return True
    return False


def normal_form(circuit: Circuit) -> list[str]:
    """Lexicographic normal form of the barrier-free gate sequence modulo commutation.

    Two circuits that differ only by reordering commuting instructions get the
    same listing (the Anisimov-Knuth normal form of a trace).
    """
    ins = strip_barriers(circuit).instructions
    keys = [format_instruction(x) for x in ins]
    preds = [0] * len(ins)
    succ: list[list[int]] = [[] for _ in ins]
    for j in range(len(ins)):
        for i in range(j):
            if not commute(ins[i], ins[j]):
                succ[i].append(j)
                preds[j] += 1
    ready = sorted((keys[i], i) for i in range(len(ins)) if preds[i] == 0)
    out: list[str] = []
    while ready:
        key, i = ready.pop(0)
        out.append(key)
        for j in succ[i]:
            preds[j] -= 1
            if preds[j] == 0:
                ready.append((keys[j], j))
        ready.sort()
    return out


PASSES = {
    p.name: p
    for p in (
        RewritePass("commute_measurement_to_end", commute_measurement_to_end),
        RewritePass("commute_cnot_through_swaps", commute_cnot_through_swaps),
        RewritePass("expand_long_range_cnot", expand_long_range_cnot),
        RewritePass("decompose_swaps_and_cancel", decompose_swaps_and_cancel),
        RewritePass("elide_post_final_measurement_gates", elide_post_final_measurement_gates),
        RewritePass("strip_barriers", strip_barriers),
        RewritePass("rebase_to_sx_rz", rebase_to_sx_rz),
    )
}
