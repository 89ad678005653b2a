"""Stochastic error channels applied per trajectory.

Three ingredients:

* gate depolarisation: after a 1q (2q) gate, with probability ``p1`` (``p2``)
  a uniformly random non-identity Pauli on the gate's wires;
* idle decoherence on schedule gaps: amplitude damping with
  ``gamma = 1 - exp(-t/t1)`` followed by pure dephasing with rate
  ``1/t_phi = 1/t2 - 1/(2 t1)``; or, with ``idle_channel="pauli"``, the Pauli
  twirl of that same channel (X, Y each ``gamma/4``,
  Z ``(1 - 2 exp(-t/t2) + exp(-t/t1))/4``);
* readout assignment error applied to the recorded bit after collapse.

Every channel consumes a fixed number of uniform draws regardless of the branch
taken, so a shot's random stream maps onto a fixed sequence of decisions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Protocol

import numpy as np

from . import _kernels as K
from .circuit import (
    ONE_QUBIT,
    TWO_QUBIT,
    Barrier,
    Circuit,
    ClassicallyControlled,
    Instruction,
    Measure,
    instr_wires,
)

IDLE_CHANNELS = ("kraus", "pauli")


class Draws(Protocol):
    """Source of per-row uniform variates, one array of shape ``(S,)`` per call."""

    def next(self) -> np.ndarray: ...


class GeneratorDraws:
    """Single-trajectory draws from a numpy Generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def next(self) -> np.ndarray:
        return np.array([self.rng.random()])


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    t1: float = math.inf
    t2: float = math.inf
    dur_1q: float = 1.0
    dur_2q: float = 2.0
    dur_meas: float = 76.0
    readout_p01: float = 0.0
    readout_p10: float = 0.0
    idle_channel: str = "kraus"
    jitter: float = 0.0
    jitter_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "readout_p01", "readout_p10"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("dur_1q", "dur_2q", "dur_meas"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("t1 and t2 must be positive")
        if math.isfinite(self.t1) and math.isfinite(self.t2) and self.t2 > 2 * self.t1:
            raise ValueError("t2 must not exceed 2*t1")
        if self.idle_channel not in IDLE_CHANNELS:
            raise ValueError(f"idle_channel must be one of {IDLE_CHANNELS}")
        if not 0.0 <= self.jitter < 1.0:
            raise ValueError("jitter must lie in [0, 1)")

    @classmethod
    def default(cls) -> "NoiseModel":
        """Benchmark default used by the CLI and the transition study.

        Chosen so the violation of both methods decays to the 3-sigma floor
        inside N <= 20 at 20 x 4000 statistics.
        """
        return cls(
            p1=1e-3,
            p2=2e-2,
            t1=2000.0,
            t2=1200.0,
            readout_p01=0.02,
            readout_p10=0.02,
            idle_channel="pauli",
        )

    @property
    def is_noiseless(self) -> bool:
        return (
            self.p1 == 0
            and self.p2 == 0
            and self.readout_p01 == 0
            and self.readout_p10 == 0
            and not math.isfinite(self.t1)
            and not math.isfinite(self.t2)
        )

    @property
    def has_idle(self) -> bool:
        return math.isfinite(self.t1) or math.isfinite(self.t2)

    @property
    def has_readout(self) -> bool:
        return self.readout_p01 > 0 or self.readout_p10 > 0

    def wire_times(self, n_wires: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-wire (t1, t2) after the optional seeded multiplicative jitter."""
        t1 = np.full(n_wires, self.t1)
        t2 = np.full(n_wires, self.t2)
        if self.jitter > 0:
            rng = np.random.Generator(np.random.Philox(self.jitter_seed))
            f = 1.0 + self.jitter * rng.uniform(-1.0, 1.0, n_wires)
            t1, t2 = t1 * f, t2 * f
        return t1, t2

    def duration(self, ins: Instruction) -> float:
        if isinstance(ins, ClassicallyControlled):
            return self.duration(ins.inner)
        if isinstance(ins, Measure):
            return self.dur_meas
        if isinstance(ins, TWO_QUBIT):
            return self.dur_2q
        if isinstance(ins, ONE_QUBIT):
            return self.dur_1q
        return 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown noise keys: {sorted(unknown)}")
        return cls(**{k: (float(v) if k not in ("idle_channel", "jitter_seed") else v) for k, v in data.items()})

    def fingerprint(self) -> str:
        canon = json.dumps({k: repr(v) for k, v in asdict(self).items()}, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def idle_probabilities(duration: float, t1: float, t2: float, channel: str) -> tuple[float, ...]:
    """Channel parameters for an idle gap.

    ``kraus`` returns ``(gamma, p_dephase)``; ``pauli`` returns ``(px, py, pz)``.
    """
    decay1 = math.exp(-duration / t1) if math.isfinite(t1) else 1.0
    decay2 = math.exp(-duration / t2) if math.isfinite(t2) else 1.0
    if channel == "kraus":
        gamma = 1.0 - decay1
        # dephasing left over after the sqrt(1-gamma) coherence loss of damping
        rate_phi = (1.0 / t2 if math.isfinite(t2) else 0.0) - (
            0.5 / t1 if math.isfinite(t1) else 0.0
        )
        p_z = 0.5 * (1.0 - math.exp(-duration * rate_phi)) if rate_phi > 0 else 0.0
        return gamma, p_z
    gamma = 1.0 - decay1
    pz = max(0.0, (1.0 - 2.0 * decay2 + decay1) / 4.0)
    return gamma / 4.0, gamma / 4.0, pz


@dataclass(frozen=True)
class Schedule:
    """Greedy ASAP timeline with per-class durations.

    ``busy[w]`` lists ``(start, end, instruction_index)`` for wire ``w``;
    ``idle_before[i]`` lists ``(wire, gap)`` for gaps that end when instruction
    ``i`` starts. Gaps before a wire's first operation are skipped (a qubit is
    taken to be prepared just in time), as are gaps after its last operation,
    which cannot affect any recorded outcome.
    """

    starts: tuple[float, ...]
    busy: tuple[tuple[tuple[float, float, int], ...], ...]
    idle_before: tuple[tuple[tuple[int, float], ...], ...]
    total: float

    @classmethod
    def build(cls, circuit: Circuit, noise: NoiseModel) -> "Schedule":
        ready = [0.0] * circuit.n_wires
        used = [False] * circuit.n_wires
        busy: list[list[tuple[float, float, int]]] = [[] for _ in range(circuit.n_wires)]
        starts: list[float] = []
        idle: list[tuple[tuple[int, float], ...]] = []
        for i, ins in enumerate(circuit.instructions):
            if isinstance(ins, Barrier):
                ws = ins.wires or tuple(range(circuit.n_wires))
                fence = max((ready[w] for w in ws), default=0.0)
                for w in ws:
                    ready[w] = fence
                starts.append(fence)
                idle.append(())
                continue
            ws = instr_wires(ins)
            start = max(ready[w] for w in ws)
            end = start + noise.duration(ins)
            gaps = []
            for w in ws:
                if used[w] and start > ready_end(busy[w]):
                    gaps.append((w, start - ready_end(busy[w])))
                busy[w].append((start, end, i))
                used[w] = True
                ready[w] = end
            starts.append(start)
            idle.append(tuple(gaps))
        total = max(ready, default=0.0)
        return cls(tuple(starts), tuple(tuple(b) for b in busy), tuple(idle), total)


def ready_end(intervals: list[tuple[float, float, int]]) -> float:
    return intervals[-1][1] if intervals else 0.0


# ------------------------------------------------------------ batch channels


def gate_noise_batch(
    psi: np.ndarray, wires: tuple[int, ...], p: float, draws: Draws, active: np.ndarray
) -> None:
    """Depolarising kick after a gate; consumes two draws."""
    u_occ, u_which = draws.next(), draws.next()
    hit = np.flatnonzero(active & (u_occ < p))
    if hit.size == 0:
        return
    if len(wires) == 1:
        code = 1 + np.minimum((u_which[hit] * 3).astype(int), 2)
        K.apply_pauli_rows(psi, hit, code, wires[0])
        return
    k = 1 + np.minimum((u_which[hit] * 15).astype(int), 14)
    K.apply_pauli_rows(psi, hit, k % 4, wires[0])
    K.apply_pauli_rows(psi, hit, k // 4, wires[1])


def pauli_from_uniform(u: np.ndarray, px: float, py: float, pz: float) -> np.ndarray:
    """Map uniforms to Pauli codes with cumulative thresholds X, Y, Z then I."""
    code = np.zeros(u.shape, dtype=np.int64)
    code[u < px + py + pz] = 3
    code[u < px + py] = 2
    code[u < px] = 1
    return code


def idle_noise_batch(
    psi: np.ndarray,
    wire: int,
    duration: float,
    t1: float,
    t2: float,
    channel: str,
    draws: Draws,
    active: np.ndarray,
) -> None:
    """Idle decoherence on ``wire``; consumes two draws (kraus) or one (pauli)."""
    if channel == "pauli":
        u = draws.next()
        px, py, pz = idle_probabilities(duration, t1, t2, "pauli")
        rows = np.flatnonzero(active)
        K.apply_pauli_rows(psi, rows, pauli_from_uniform(u[rows], px, py, pz), wire)
        return
    u_damp, u_phase = draws.next(), draws.next()
    gamma, p_z = idle_probabilities(duration, t1, t2, "kraus")
    if gamma > 0:
        rows = np.flatnonzero(active)
        if rows.size:
            sub = psi[rows]
            p1 = K.prob_one(sub, wire)
            jump = u_damp[rows] < gamma * p1
            v = K.view1(sub, wire)
            if jump.any():
                v[jump, :, 0, :] = v[jump, :, 1, :]
                v[jump, :, 1, :] = 0
                sub[jump] /= np.sqrt(p1[jump])[:, None]
            stay = ~jump
            if stay.any():
                v[stay, :, 1, :] *= math.sqrt(1.0 - gamma)
                sub[stay] /= np.sqrt(1.0 - gamma * p1[stay])[:, None]
            psi[rows] = sub
    if p_z > 0:
        rows = np.flatnonzero(active & (u_phase < p_z))
        if rows.size:
            K.apply_pauli_rows(psi, rows, np.full(rows.size, 3), wire)


def readout_batch(bits: np.ndarray, noise: NoiseModel, u: np.ndarray) -> np.ndarray:
    flip = np.where(bits == 1, u < noise.readout_p01, u < noise.readout_p10)
    return bits ^ flip.astype(bits.dtype)


# ------------------------------------------------------------ public API


def apply_gate_noise(state, wires, noise: NoiseModel, rng: np.random.Generator):
    """Depolarising trajectory step after a gate on ``wires`` (one or two)."""
    wires = tuple(wires)
    p = noise.p1 if len(wires) == 1 else noise.p2
    out = state.copy()
    psi = out.amplitudes.reshape(1, -1)
    gate_noise_batch(psi, wires, p, GeneratorDraws(rng), np.ones(1, bool))
    return out


def apply_idle_noise(state, wire: int, idle_duration: float, noise: NoiseModel, rng: np.random.Generator):
    """Sample the idle channel for one gap on ``wire``."""
    if idle_duration < 0:
        raise ValueError("idle_duration must be non-negative")
    out = state.copy()
    if idle_duration == 0 or not noise.has_idle:
        return out
    t1, t2 = noise.wire_times(state.n_wires)
    psi = out.amplitudes.reshape(1, -1)
    idle_noise_batch(
        psi, wire, idle_duration, t1[wire], t2[wire], noise.idle_channel,
        GeneratorDraws(rng), np.ones(1, bool),
    )
    return out


def flip_readout(outcome: int, noise: NoiseModel, rng: np.random.Generator) -> int:
    u = np.array([rng.random()])
    return int(readout_batch(np.array([outcome], dtype=np.int8), noise, u)[0])
