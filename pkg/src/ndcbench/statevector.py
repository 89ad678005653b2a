"""Exact statevector execution: single steps, trajectories and branch enumeration.

Conventions:

* little-endian wires: wire 0 is the least significant bit of the basis index;
* outcome keys are bit strings in clbit-index order, ``key[i]`` is clbit ``i``;
* random streams are Philox4x64 generators. Shot ``i`` of ``run_shots(seed=s)``
  uses key ``SeedSequence(s).generate_state(2, uint64)`` and counter
  ``(0, 0, i, 0)``, so its decisions do not depend on batching.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as K
from .circuit import (
    Barrier,
    Circuit,
    ClassicallyControlled,
    Cnot,
    Hadamard,
    Instruction,
    Measure,
    PauliX,
    RotY,
    RotZ,
    SqrtX,
    Swap,
    TGate,
    instr_wires,
)
from .errors import CircuitError, NumericalError, ResourceError
from .noise import (
    Draws,
    GeneratorDraws,
    NoiseModel,
    Schedule,
    gate_noise_batch,
    idle_noise_batch,
    readout_batch,
)

DEFAULT_MAX_WIRES = 26
DEFAULT_BRANCH_BUDGET = 2**20
ZERO_BRANCH = 1e-14


@dataclass
class StateVector:
    n_wires: int
    amplitudes: np.ndarray

    @classmethod
    def zero(cls, n_wires: int, max_wires: int = DEFAULT_MAX_WIRES) -> "StateVector":
        if n_wires > max_wires:
            raise ResourceError(f"{n_wires} wires exceeds the statevector ceiling of {max_wires}")
        amps = np.zeros(1 << n_wires, dtype=complex)
        amps[0] = 1.0
        return cls(n_wires, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.n_wires, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ShotRecord:
    clbit_values: tuple[int, ...]

    @property
    def key(self) -> str:
        return "".join(str(b) for b in self.clbit_values)


def _marginal_key(key: str, bits: Sequence[int]) -> str:
    return "".join(key[b] for b in bits)


@dataclass
class OutcomeCounts:
    counts: dict[str, int]
    total_shots: int = 0

    def __post_init__(self) -> None:
        self.counts = {k: int(v) for k, v in self.counts.items() if v}
        s = sum(self.counts.values())
        if self.total_shots == 0:
            self.total_shots = s
        if s != self.total_shots:
            raise ValueError("counts must sum to total_shots")

    def __add__(self, other: "OutcomeCounts") -> "OutcomeCounts":
        c = Counter(self.counts)
        c.update(other.counts)
        return OutcomeCounts(dict(c), self.total_shots + other.total_shots)

    def marginal(self, bits: Sequence[int]) -> "OutcomeCounts":
        c: Counter[str] = Counter()
        for k, v in self.counts.items():
            c[_marginal_key(k, bits)] += v
        return OutcomeCounts(dict(c), self.total_shots)

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.total_shots for k, v in self.counts.items()}


@dataclass
class OutcomeDistribution:
    probs: dict[str, float] = field(default_factory=dict)

    def marginal(self, bits: Sequence[int]) -> "OutcomeDistribution":
        out: dict[str, float] = {}
        for k, p in self.probs.items():
            mk = _marginal_key(k, bits)
            out[mk] = out.get(mk, 0.0) + p
        return OutcomeDistribution(out)

    def get(self, key: str) -> float:
        return self.probs.get(key, 0.0)

    def total(self) -> float:
        return float(sum(self.probs.values()))


# ------------------------------------------------------------------ RNG


@lru_cache(maxsize=256)
def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def shot_generator(seed: int, shot_index: int) -> np.random.Generator:
    """Private random stream of shot ``shot_index`` under ``seed``."""
    key = _philox_key(seed)
    counter = np.array([0, 0, shot_index, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


class MatrixDraws:
    """Pre-drawn uniforms, one row per trajectory, consumed column by column."""

    def __init__(self, table: np.ndarray):
        self.table = table
        self.cursor = 0

    def next(self) -> np.ndarray:
        col = self.table[:, self.cursor]
        self.cursor += 1
        return col


# ------------------------------------------------------------------ execution


def _unitary(psi: np.ndarray, ins: Instruction) -> None:
    if isinstance(ins, RotY):
        K.apply_1q(psi, K.mat_ry(ins.angle), ins.wire)
    elif isinstance(ins, Cnot):
        K.apply_cnot(psi, ins.control, ins.target)
    elif isinstance(ins, Hadamard):
        K.apply_1q(psi, K.MAT_H, ins.wire)
    elif isinstance(ins, PauliX):
        K.apply_x(psi, ins.wire)
    elif isinstance(ins, Swap):
        K.apply_swap(psi, ins.a, ins.b)
    elif isinstance(ins, RotZ):
        K.apply_1q(psi, K.mat_rz(ins.angle), ins.wire)
    elif isinstance(ins, SqrtX):
        K.apply_1q(psi, K.MAT_SX, ins.wire)
    elif isinstance(ins, TGate):
        K.apply_1q(psi, K.MAT_T, ins.wire)
    else:
        raise CircuitError(f"not a unitary instruction: {ins!r}")


def _check_wires(ins: Instruction, n_wires: int) -> None:
    for w in instr_wires(ins):
        if not 0 <= w < n_wires:
            raise CircuitError(f"wire {w} out of range for {n_wires}-wire state")


class _Executor:
    """Runs one instruction stream over a batch of trajectories."""

    def __init__(self, circuit: Circuit, noise: NoiseModel | None):
        self.circuit = circuit
        self.noise = noise if noise is not None and not noise.is_noiseless else None
        if self.noise is not None:
            self.schedule = Schedule.build(circuit, self.noise)
            self.t1, self.t2 = self.noise.wire_times(circuit.n_wires)

    def draws_per_shot(self) -> int:
        """Number of uniforms one trajectory consumes (fixed by construction)."""
        total = 0
        nz = self.noise
        for i, ins in enumerate(self.circuit.instructions):
            if nz is not None and nz.has_idle:
                total += len(self.schedule.idle_before[i]) * (2 if nz.idle_channel == "kraus" else 1)
            inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
            if isinstance(inner, Measure):
                total += 1 + (1 if nz is not None and nz.has_readout else 0)
            elif not isinstance(inner, Barrier) and nz is not None:
                p = nz.p2 if len(instr_wires(inner)) == 2 else nz.p1
                total += 2 if p > 0 else 0
        return total

    def step(
        self, psi: np.ndarray, bits: np.ndarray, i: int, ins: Instruction, draws: Draws
    ) -> None:
        nz = self.noise
        active = np.ones(psi.shape[0], dtype=bool)
        if nz is not None and nz.has_idle:
            for w, gap in self.schedule.idle_before[i]:
                idle_noise_batch(psi, w, gap, self.t1[w], self.t2[w], nz.idle_channel, draws, active)
        if isinstance(ins, ClassicallyControlled):
            active = bits[:, ins.bit] == ins.value
            ins = ins.inner
        if isinstance(ins, Barrier):
            return
        if isinstance(ins, Measure):
            self._measure(psi, bits, ins, draws, active)
            return
        if active.all():
            _unitary(psi, ins)
        elif active.any():
            rows = np.flatnonzero(active)
            sub = psi[rows]
            _unitary(sub, ins)
            psi[rows] = sub
        if nz is not None:
            ws = instr_wires(ins)
            p = nz.p2 if len(ws) == 2 else nz.p1
            if p > 0:
                gate_noise_batch(psi, ws, p, draws, active)

    def _measure(self, psi, bits, ins: Measure, draws: Draws, active: np.ndarray) -> None:
        u = draws.next()
        u_ro = draws.next() if self.noise is not None and self.noise.has_readout else None
        rows = np.flatnonzero(active)
        if rows.size == 0:
            return
        sub = psi[rows]
        p1 = np.clip(K.prob_one(sub, ins.wire), 0.0, 1.0)
        outcome = (u[rows] < p1).astype(np.int8)
        chosen = np.where(outcome == 1, p1, 1.0 - p1)
        if np.any(chosen < ZERO_BRANCH):
            raise NumericalError("measurement collapsed onto a zero-probability branch")
        K.collapse(sub, ins.wire, outcome, p1)
        psi[rows] = sub
        if u_ro is not None:
            outcome = readout_batch(outcome, self.noise, u_ro[rows])
        bits[rows, ins.clbit] = outcome

    def run(self, psi: np.ndarray, bits: np.ndarray, draws: Draws) -> None:
        for i, ins in enumerate(self.circuit.instructions):
            self.step(psi, bits, i, ins, draws)
        if not np.all(np.isfinite(psi)):
            raise NumericalError("non-finite amplitude")


def apply_instruction(
    state: StateVector,
    instr: Instruction,
    clbits: Sequence[int],
    rng: np.random.Generator,
) -> tuple[StateVector, list[int]]:
    """Apply one noiseless instruction; returns the new state and clbits."""
    _check_wires(instr, state.n_wires)
    if isinstance(instr, ClassicallyControlled) and not 0 <= instr.bit < len(clbits):
        raise CircuitError(f"clbit {instr.bit} out of range")
    inner = instr.inner if isinstance(instr, ClassicallyControlled) else instr
    if isinstance(inner, Measure) and not 0 <= inner.clbit < len(clbits):
        raise CircuitError(f"clbit {inner.clbit} out of range")
    out = state.copy()
    bits = np.array([list(clbits)], dtype=np.int8).reshape(1, len(clbits))
    circ = Circuit(state.n_wires, len(clbits), (instr,))
    _Executor(circ, None).step(out.amplitudes.reshape(1, -1), bits, 0, instr, GeneratorDraws(rng))
    if not np.all(np.isfinite(out.amplitudes)):
        raise NumericalError("non-finite amplitude")
    return out, [int(b) for b in bits[0]]


def _initial_bits(circuit: Circuit, n: int, initial_clbits: Mapping[int, int] | None) -> np.ndarray:
    bits = np.zeros((n, circuit.n_clbits), dtype=np.int8)
    for b, v in (initial_clbits or {}).items():
        if not 0 <= b < circuit.n_clbits:
            raise CircuitError(f"preset clbit {b} out of range")
        bits[:, b] = v
    return bits


def run_shot(
    circuit: Circuit,
    noise: NoiseModel | None,
    rng: np.random.Generator,
    initial_clbits: Mapping[int, int] | None = None,
    max_wires: int = DEFAULT_MAX_WIRES,
) -> ShotRecord:
    """One stochastic execution (one trajectory when noisy)."""
    psi = StateVector.zero(circuit.n_wires, max_wires).amplitudes.reshape(1, -1)
    bits = _initial_bits(circuit, 1, initial_clbits)
    _Executor(circuit, noise).run(psi, bits, GeneratorDraws(rng))
    return ShotRecord(tuple(int(b) for b in bits[0]))


def run_shots(
    circuit: Circuit,
    noise: NoiseModel | None,
    n_shots: int,
    seed: int,
    initial_clbits: Mapping[int, int] | None = None,
    max_wires: int = DEFAULT_MAX_WIRES,
    shot_offset: int = 0,
) -> OutcomeCounts:
    """Aggregate ``n_shots`` trajectories; shot ``i`` uses ``shot_generator(seed, i)``.

    Trajectories are simulated in vectorised batches, but each consumes its own
    stream in the same order as :func:`run_shot`, so counts do not depend on
    the batch size.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    if circuit.n_wires > max_wires:
        raise ResourceError(f"{circuit.n_wires} wires exceeds the statevector ceiling of {max_wires}")
    ex = _Executor(circuit, noise)
    n_draws = ex.draws_per_shot()
    batch = max(1, min(n_shots, (1 << 21) >> circuit.n_wires))
    counts: Counter[str] = Counter()
    for start in range(0, n_shots, batch):
        size = min(batch, n_shots - start)
        table = np.empty((size, n_draws))
        for j in range(size):
            table[j] = shot_generator(seed, shot_offset + start + j).random(n_draws)
        psi = np.zeros((size, 1 << circuit.n_wires), dtype=complex)
        psi[:, 0] = 1.0
        bits = _initial_bits(circuit, size, initial_clbits)
        ex.run(psi, bits, MatrixDraws(table))
        for row in bits:
            counts["".join("1" if b else "0" for b in row)] += 1
    return OutcomeCounts(dict(counts), n_shots)


def exact_distribution(
    circuit: Circuit,
    initial_clbits: Mapping[int, int] | None = None,
    branch_budget: int = DEFAULT_BRANCH_BUDGET,
    max_wires: int = DEFAULT_MAX_WIRES,
) -> OutcomeDistribution:
    """Enumerate every measurement branch with its Born weight (noiseless)."""
    root = StateVector.zero(circuit.n_wires, max_wires).amplitudes
    bits0 = [0] * circuit.n_clbits
    for b, v in (initial_clbits or {}).items():
        bits0[b] = v
    probs: dict[str, float] = {}
    n_branches = 1
    stack: list[tuple[int, np.ndarray, list[int], float]] = [(0, root, bits0, 1.0)]
    instrs = circuit.instructions
    while stack:
        i, psi, bits, weight = stack.pop()
        view = psi.reshape(1, -1)
        while i < len(instrs):
            ins = instrs[i]
            i += 1
            if isinstance(ins, ClassicallyControlled):
                if bits[ins.bit] != ins.value:
                    continue
                ins = ins.inner
            if isinstance(ins, Barrier):
                continue
            if not isinstance(ins, Measure):
                _unitary(view, ins)
                continue
            p1 = float(np.clip(K.prob_one(view, ins.wire)[0], 0.0, 1.0))
            branches = [(o, p) for o, p in ((0, 1.0 - p1), (1, p1)) if p > ZERO_BRANCH]
            if len(branches) == 2:
                n_branches += 1
                if n_branches > branch_budget:
                    raise ResourceError(f"branch budget of {branch_budget} paths exceeded")
                other = view.copy()
                K.collapse(other, ins.wire, np.array([1]), np.array([p1]))
                obits = list(bits)
                obits[ins.clbit] = 1
                stack.append((i, other.reshape(-1), obits, weight * p1))
                branches = branches[:1]
            o, p = branches[0]
            K.collapse(view, ins.wire, np.array([o]), np.array([p1]))
            bits[ins.clbit] = o
            weight *= p
        if not np.all(np.isfinite(psi)):
            raise NumericalError("non-finite amplitude")
        key = "".join(str(b) for b in bits)
        probs[key] = probs.get(key, 0.0) + weight
    return OutcomeDistribution(probs)


def final_state(circuit: Circuit, max_wires: int = DEFAULT_MAX_WIRES) -> StateVector:
    """Statevector after a measurement-free circuit."""
    sv = StateVector.zero(circuit.n_wires, max_wires)
    view = sv.amplitudes.reshape(1, -1)
    for ins in circuit.instructions:
        if isinstance(ins, Barrier):
            continue
        if isinstance(ins, (Measure, ClassicallyControlled)):
            raise CircuitError("final_state requires a measurement-free circuit")
        _unitary(view, ins)
    return sv


def unitary_matrix(circuit: Circuit) -> np.ndarray:
    """Dense unitary of a measurement-free circuit (columns are basis images)."""
    dim = 1 << circuit.n_wires
    psi = np.eye(dim, dtype=complex)
    for ins in circuit.instructions:
        if isinstance(ins, Barrier):
            continue
        if isinstance(ins, (Measure, ClassicallyControlled)):
            raise CircuitError("unitary_matrix requires a measurement-free circuit")
        _unitary(psi, ins)
    return psi.T
