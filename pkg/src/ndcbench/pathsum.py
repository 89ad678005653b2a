"""Pauli-frame engine: exact outcome laws for rotation + CNOT circuits under Pauli noise.

Two ingredients.

Pauli frame. Every noise event is a Pauli, and Paulis are pushed forward
through the circuit instead of being applied to a state. Conjugating ``RY(a)``
by X or Z gives ``RY(-a)``, so a frame component X or Z (but not Y) on a wire
flips the sign of the next rotation there. CNOT, SWAP and H act on the frame
as Clifford gates. At a measurement the X part of the frame flips the
recorded bit and the Z part is absorbed.

Path sum. Without noise, a circuit built from real one-qubit gates acting on
wires whose content is ``|0>`` or a single path variable, CNOTs and SWAPs has
a computational-basis path sum whose amplitude factorises over connected
groups of variables ("chains"). Two paths interfere when they agree on every
final wire content and every measured parity. These linear constraints over
GF(2) are reduced to row echelon form. Rows holding one variable tie the two
paths directly; each remaining row and each recorded readout becomes a
Fourier bit. Probabilities are then a short Fourier sum of products of small
per-chain tables, so one shot costs ``O(#chains * 2**#bits)`` regardless of
register size.

The frame engine is exact for Pauli channels, which makes it unusable with the
amplitude-damping idle channel; for that the statevector engine is the
reference.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .circuit import (
    Barrier,
    Circuit,
    ClassicallyControlled,
    Cnot,
    Hadamard,
    Measure,
    PauliX,
    RotY,
    Swap,
    instr_wires,
)
from .errors import UnsupportedCircuit
from .noise import NoiseModel, Schedule, idle_probabilities, pauli_from_uniform
from .statevector import OutcomeCounts, OutcomeDistribution, shot_generator

MAX_CHAIN_VARS = 8
MAX_FOURIER_BITS = 12

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def _ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class _Var:
    parent: int | None  # variable the gate acted on, None for a fresh |0>
    rotation: int | None  # index into the flippable rotation list, None for H
    angle: float


def _rref_highest(rows: list[int]) -> list[int]:
    """Reduced echelon basis with each row's pivot at its highest set bit."""
    basis: dict[int, int] = {}
    for r in rows:
        for p in sorted(basis, reverse=True):
            if r >> p & 1:
                r ^= basis[p]
        if r:
            p = r.bit_length() - 1
            for q in list(basis):
                if basis[q] >> p & 1:
                    basis[q] ^= r
            basis[p] = r
    return [basis[p] for p in sorted(basis)]


class FrameProgram:
    """Compiled form of one circuit under one noise model and preset clbits."""

    def __init__(self, circuit: Circuit, noise: NoiseModel | None = None,
                 initial_clbits: Mapping[int, int] | None = None):
        self.circuit = circuit
        self.noise = noise if noise is not None and not noise.is_noiseless else None
        if self.noise is not None and self.noise.has_idle and self.noise.idle_channel != "pauli":
            raise UnsupportedCircuit("the frame engine needs idle_channel='pauli'")
        self.initial = dict(initial_clbits or {})
        for b in self.initial:
            if not 0 <= b < circuit.n_clbits:
                raise UnsupportedCircuit(f"preset clbit {b} out of range")
        self._compile()

    # -------------------------------------------------------------- compile

    def _compile(self) -> None:
        c = self.circuit
        nz = self.noise
        sched = Schedule.build(c, nz) if nz is not None and nz.has_idle else None
        t1, t2 = nz.wire_times(c.n_wires) if nz is not None else (None, None)
        content = [0] * c.n_wires
        vars_: list[_Var] = []
        written: set[int] = set()
        measured_forms: list[int] = []
        record: dict[int, tuple[int, int]] = {}  # clbit -> (measurement index, form)
        ops: list[tuple] = []
        n_rot = 0
        n_draws = 0

        for i, ins in enumerate(c.instructions):
            if sched is not None:
                for w, gap in sched.idle_before[i]:
                    px, py, pz = idle_probabilities(gap, t1[w], t2[w], "pauli")
                    ops.append(("idle", w, px, py, pz))
                    n_draws += 1
            if isinstance(ins, ClassicallyControlled):
                if ins.bit in written:
                    raise UnsupportedCircuit("classical control on a measured bit needs feed-forward")
                if ins.bit not in self.initial:
                    raise UnsupportedCircuit(f"clbit {ins.bit} controls a gate but has no preset value")
                if self.initial[ins.bit] != ins.value:
                    continue
                ins = ins.inner
            if isinstance(ins, Barrier):
                continue
            if isinstance(ins, Measure):
                form = content[ins.wire]
                k = len(measured_forms)
                measured_forms.append(form)
                record[ins.clbit] = (k, form)
                written.add(ins.clbit)
                ops.append(("meas", ins.wire, k))
                if nz is not None and nz.has_readout:
                    n_draws += 1
                continue
            if isinstance(ins, Cnot):
                content[ins.target] ^= content[ins.control]
                ops.append(("cx", ins.control, ins.target))
            elif isinstance(ins, Swap):
                content[ins.a], content[ins.b] = content[ins.b], content[ins.a]
                ops.append(("swap", ins.a, ins.b))
            elif isinstance(ins, PauliX):
                ops.append(("x", ins.wire))
            elif isinstance(ins, (RotY, Hadamard)):
                w = ins.wire
                cur = content[w]
                if cur and cur & (cur - 1):
                    raise UnsupportedCircuit(
                        f"{type(ins).__name__} on wire {w} acts on a parity of several path variables"
                    )
                parent = cur.bit_length() - 1 if cur else None
                if isinstance(ins, RotY):
                    vars_.append(_Var(parent, n_rot, ins.angle))
                    ops.append(("ry", w, n_rot))
                    n_rot += 1
                else:
                    vars_.append(_Var(parent, None, math.pi / 2))
                    ops.append(("h", w))
                content[w] = 1 << (len(vars_) - 1)
            else:
                raise UnsupportedCircuit(f"the frame engine does not support {type(ins).__name__}")
            if nz is not None:
                ws = instr_wires(ins)
                p = nz.p2 if len(ws) == 2 else nz.p1
                if p > 0:
                    ops.append(("noise", ws, p))
                    n_draws += 2

        self.ops = ops
        self.n_rot = n_rot
        self.n_meas = len(measured_forms)
        self.n_draws = n_draws + 1  # final column samples the outcome
        self.recorded = sorted(record)
        self.record_meas = [record[b][0] for b in self.recorded]
        self._build_tables(vars_, content, measured_forms, [record[b][1] for b in self.recorded])

    def _build_tables(self, vars_: list[_Var], final: list[int], measured: list[int], recorded: list[int]) -> None:
        rows = _rref_highest([f for f in final + measured if f])
        singles = 0
        fourier: list[int] = []
        for r in rows:
            if r & (r - 1):
                fourier.append(r)
            else:
                singles |= r
        self.n_fourier = len(fourier)
        n_bits = len(fourier) + len(recorded)
        if n_bits > MAX_FOURIER_BITS:
            raise UnsupportedCircuit(f"{n_bits} Fourier bits exceed the limit of {MAX_FOURIER_BITS}")
        self.n_bits = n_bits
        masks = fourier + recorded

        # connected components of the parent forest
        root = list(range(len(vars_)))

        def find(v: int) -> int:
            while root[v] != v:
                root[v] = root[root[v]]
                v = root[v]
            return v

        for v, var in enumerate(vars_):
            if var.parent is not None:
                root[find(v)] = find(var.parent)
        groups: dict[int, list[int]] = {}
        for v in range(len(vars_)):
            groups.setdefault(find(v), []).append(v)

        patterns = np.array(list(itertools.product((0, 1), repeat=n_bits)), dtype=np.int64)[:, ::-1]
        # patterns[p, j] = bit j of p
        self.chains: list[tuple[np.ndarray, np.ndarray]] = []
        for members in groups.values():
            if len(members) > MAX_CHAIN_VARS:
                raise UnsupportedCircuit(f"a chain of {len(members)} path variables is too large")
            self.chains.append(self._chain_table(vars_, members, singles, masks, patterns))

    def _chain_table(self, vars_, members, singles, masks, patterns) -> tuple[np.ndarray, np.ndarray]:
        """Table over (sign pattern, Fourier pattern) for one chain, plus its rotation indices."""
        L = len(members)
        local = {v: k for k, v in enumerate(members)}
        rots = [vars_[v].rotation for v in members if vars_[v].rotation is not None]
        rot_pos = {r: k for k, r in enumerate(rots)}
        assign = np.array(list(itertools.product((0, 1), repeat=L)), dtype=np.int64)  # (2^L, L)

        def bits_of(mask: int) -> np.ndarray:
            sel = [local[v] for v in members if mask >> v & 1]
            if not sel:
                return np.zeros(len(assign), dtype=np.int64)
            return assign[:, sel].sum(axis=1) & 1

        par = np.stack([bits_of(m) for m in masks], axis=1) if masks else np.zeros((len(assign), 0), np.int64)
        tie = [local[v] for v in members if singles >> v & 1]
        n_f = self.n_fourier
        a_idx, b_idx = np.meshgrid(np.arange(len(assign)), np.arange(len(assign)), indexing="ij")
        a_idx, b_idx = a_idx.ravel(), b_idx.ravel()
        ok = np.all(assign[a_idx][:, tie] == assign[b_idx][:, tie], axis=1) if tie else np.ones(len(a_idx), bool)
        a_idx, b_idx = a_idx[ok], b_idx[ok]
        # Fourier phase: t-bits see the difference of both paths, s-bits the first path only
        diff = par[a_idx, :n_f] ^ par[b_idx, :n_f]
        first = par[a_idx, n_f:]
        expo = diff @ patterns[:, :n_f].T + first @ patterns[:, n_f:].T
        phase = 1.0 - 2.0 * (expo & 1)  # (pairs, patterns)

        n_sign = 1 << len(rots)
        amps = np.ones((n_sign, len(assign)))
        for sidx in range(n_sign):
            for v in members:
                var = vars_[v]
                if var.rotation is None:
                    mat = _H
                else:
                    flip = sidx >> rot_pos[var.rotation] & 1
                    mat = _ry(-var.angle if flip else var.angle)
                out = assign[:, local[v]]
                inp = assign[:, local[var.parent]] if var.parent is not None else 0
                amps[sidx] *= mat[out, inp]
        weight = amps[:, a_idx] * amps[:, b_idx]  # (signs, pairs)
        return weight @ phase, np.array(rots, dtype=np.int64)

    # -------------------------------------------------------------- evaluate

    def probabilities(self, signs: np.ndarray | None = None) -> np.ndarray:
        """Outcome law over the recorded clbits, one row per sign assignment.

        ``signs`` has shape ``(S, n_rotations)`` with 1 marking a negated
        rotation. Column ``k`` of the result is the outcome whose recorded
        bits read ``k`` in little-endian order over :attr:`recorded`.
        """
        if signs is None:
            signs = np.zeros((1, self.n_rot), dtype=np.int64)
        S = signs.shape[0]
        prod = np.ones((S, 1 << self.n_bits))
        for table, rots in self.chains:
            if rots.size:
                idx = (signs[:, rots].astype(np.int64) << np.arange(rots.size)).sum(axis=1)
            else:
                idx = np.zeros(S, dtype=np.int64)
            prod *= table[idx]
        n_f, R = self.n_fourier, len(self.recorded)
        # sum over t-bits, then a Walsh-Hadamard transform over s-bits
        shaped = prod.reshape(S, 1 << R, 1 << n_f).sum(axis=2)
        outcomes = np.arange(1 << R)
        sgn = np.array([[(-1) ** bin(s & b).count("1") for b in outcomes] for s in outcomes], dtype=float)
        probs = shaped @ sgn / float(1 << self.n_bits)
        probs = np.clip(probs, 0.0, None)
        return probs / probs.sum(axis=1, keepdims=True)

    def exact_distribution(self) -> OutcomeDistribution:
        if self.noise is not None:
            raise UnsupportedCircuit("exact_distribution is the noiseless law; use run for noisy sampling")
        probs = self.probabilities()[0]
        out: dict[str, float] = {}
        for k, p in enumerate(probs):
            if p > 0:
                out[self._key(k, np.zeros(len(self.recorded), dtype=np.int64))] = float(p)
        return OutcomeDistribution(out)

    def _key(self, k: int, flips: np.ndarray) -> str:
        bits = [self.initial.get(b, 0) for b in range(self.circuit.n_clbits)]
        for j, b in enumerate(self.recorded):
            bits[b] = (k >> j & 1) ^ int(flips[j])
        return "".join(str(x) for x in bits)

    def run(self, n_shots: int, seed: int, shot_offset: int = 0) -> OutcomeCounts:
        """Sample ``n_shots`` shots; shot ``i`` draws from ``shot_generator(seed, offset + i)``."""
        if n_shots < 1:
            raise ValueError("n_shots must be at least 1")
        table = np.empty((n_shots, self.n_draws))
        for j in range(n_shots):
            table[j] = shot_generator(seed, shot_offset + j).random(self.n_draws)
        n = self.circuit.n_wires
        X = np.zeros((n_shots, n), dtype=bool)
        Z = np.zeros((n_shots, n), dtype=bool)
        signs = np.zeros((n_shots, max(self.n_rot, 1)), dtype=np.int64)
        mflip = np.zeros((n_shots, max(self.n_meas, 1)), dtype=bool)
        readout_u: dict[int, np.ndarray] = {}
        col = 0
        nz = self.noise
        for op in self.ops:
            kind = op[0]
            if kind == "cx":
                _, c, t = op
                X[:, t] ^= X[:, c]
                Z[:, c] ^= Z[:, t]
            elif kind == "swap":
                _, a, b = op
                X[:, [a, b]] = X[:, [b, a]]
                Z[:, [a, b]] = Z[:, [b, a]]
            elif kind == "h":
                w = op[1]
                X[:, w], Z[:, w] = Z[:, w].copy(), X[:, w].copy()
            elif kind == "x":
                X[:, op[1]] ^= True
            elif kind == "ry":
                _, w, r = op
                signs[:, r] = X[:, w] ^ Z[:, w]
            elif kind == "meas":
                _, w, k = op
                mflip[:, k] = X[:, w]
                Z[:, w] = False
                if nz is not None and nz.has_readout:
                    # the flip depends on the recorded value, known only after sampling
                    readout_u[k] = table[:, col]
                    col += 1
            elif kind == "idle":
                _, w, px, py, pz = op
                code = pauli_from_uniform(table[:, col], px, py, pz)
                col += 1
                X[:, w] ^= (code == 1) | (code == 2)
                Z[:, w] ^= (code == 2) | (code == 3)
            elif kind == "noise":
                _, ws, p = op
                u_occ, u_which = table[:, col], table[:, col + 1]
                col += 2
                hit = u_occ < p
                if len(ws) == 1:
                    code = np.where(hit, 1 + np.minimum((u_which * 3).astype(np.int64), 2), 0)
                    codes = [code]
                else:
                    k = np.where(hit, 1 + np.minimum((u_which * 15).astype(np.int64), 14), 0)
                    codes = [k % 4, k // 4]
                for w, code in zip(ws, codes):
                    X[:, w] ^= (code == 1) | (code == 2)
                    Z[:, w] ^= (code == 2) | (code == 3)
        probs = self.probabilities(signs[:, : self.n_rot])
        cdf = np.cumsum(probs, axis=1)
        u = table[:, col]
        k = np.minimum((cdf < u[:, None]).sum(axis=1), probs.shape[1] - 1)
        R = len(self.recorded)
        ideal = (k[:, None] >> np.arange(R)) & 1
        bits = ideal ^ mflip[:, self.record_meas].astype(np.int64) if R else ideal
        for j, m in enumerate(self.record_meas):
            if m in readout_u:
                ur = readout_u[m]
                bits[:, j] ^= np.where(bits[:, j] == 1, ur < nz.readout_p01, ur < nz.readout_p10)
        base = [self.initial.get(b, 0) for b in range(self.circuit.n_clbits)]
        full = np.tile(np.array(base, dtype=np.int64), (n_shots, 1))
        for j, b in enumerate(self.recorded):
            full[:, b] = bits[:, j]
        keys = Counter("".join("1" if x else "0" for x in row) for row in full)
        return OutcomeCounts(dict(keys), n_shots)


def supports(circuit: Circuit, noise: NoiseModel | None = None,
             initial_clbits: Mapping[int, int] | None = None) -> bool:
    try:
        FrameProgram(circuit, noise, initial_clbits)
    except UnsupportedCircuit:
        return False
    return True


def frame_run_shots(circuit: Circuit, noise: NoiseModel | None, n_shots: int, seed: int,
                    initial_clbits: Mapping[int, int] | None = None, shot_offset: int = 0) -> OutcomeCounts:
    return FrameProgram(circuit, noise, initial_clbits).run(n_shots, seed, shot_offset)


def frame_exact_distribution(circuit: Circuit, initial_clbits: Mapping[int, int] | None = None) -> OutcomeDistribution:
    return FrameProgram(circuit, None, initial_clbits).exact_distribution()
