"""Violation estimators, closed-form predictions and the sub-protocol pair runner.

Sign convention
---------------
The parity NDC compares the final parity outcome "+" with and without the
first parity measurement::

    V = P_2(+) - [P_12(+, +) + P_12(-, +)]

The closed form ``V = (1 - cos(2 theta)**N) / 4`` is positive for this
difference only when "+" labels the odd final parity; with "+" on the even
outcome the same difference equals minus the closed form. The estimator
therefore reads "+" as final-ancilla bit 1 by default. :class:`OutcomeMap`
makes the choice explicit so data recorded under the opposite labelling can
be ingested unchanged. Since ``V_+ = -V_-``, swapping the label only negates V.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .builders import C1, C2, MethodKind, build_lnn, build_reference
from .circuit import Circuit
from .errors import SchemaError, UnsupportedCircuit
from .noise import NoiseModel
from .pathsum import FrameProgram
from .statevector import OutcomeCounts, OutcomeDistribution, exact_distribution, run_shots

ENGINES = ("auto", "frame", "statevector")
LAYOUTS = ("lnn", "reference")


def ideal_violation(theta: float, n: int) -> float:
    """Closed-form NDC violation for ``n`` qubits rotated by ``theta``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 0.25 * (1.0 - math.cos(2.0 * theta) ** n)


def ideal_first_parity(theta: float, n: int) -> tuple[float, float]:
    """Probabilities of the (even, odd) outcome of the first parity measurement."""
    if n < 1:
        raise ValueError("n must be at least 1")
    c = math.cos(theta) ** n
    return 0.5 + 0.5 * c, 0.5 - 0.5 * c


@dataclass(frozen=True)
class OutcomeMap:
    """Which clbits hold the two parities and which bit value means "+"."""

    first_bit: int = C1
    final_bit: int = C2
    plus_value: int = 1

    def __post_init__(self) -> None:
        if self.plus_value not in (0, 1):
            raise ValueError("plus_value must be 0 or 1")

    def flipped(self) -> "OutcomeMap":
        return OutcomeMap(self.first_bit, self.final_bit, 1 - self.plus_value)


DEFAULT_MAP = OutcomeMap()


def _plus_fraction(counts: OutcomeCounts | OutcomeDistribution, bit: int, plus: int) -> float:
    if isinstance(counts, OutcomeDistribution):
        table, total = counts.probs, counts.total()
    else:
        table, total = counts.counts, counts.total_shots
    if not table or total <= 0:
        raise SchemaError("empty outcome table")
    want = str(plus)
    hit = 0.0
    for key, v in table.items():
        if bit >= len(key):
            raise SchemaError(f"outcome {key!r} has no clbit {bit}")
        if key[bit] == want:
            hit += v
    return hit / total


def estimate_violation(
    single: OutcomeCounts | OutcomeDistribution,
    double: OutcomeCounts | OutcomeDistribution,
    outcome_map: OutcomeMap = DEFAULT_MAP,
) -> float:
    """``P_2(+)`` from the single sub-protocol minus the final-``+`` marginal of the double one."""
    p2 = _plus_fraction(single, outcome_map.final_bit, outcome_map.plus_value)
    p12 = _plus_fraction(double, outcome_map.final_bit, outcome_map.plus_value)
    for key in (double.probs if isinstance(double, OutcomeDistribution) else double.counts):
        if outcome_map.first_bit >= len(key):
            raise SchemaError(f"outcome {key!r} has no clbit {outcome_map.first_bit}")
    return p2 - p12


@dataclass(frozen=True)
class NdcEstimate:
    v: float
    sigma: float
    per_run_v: tuple[float, ...]
    n_runs: int
    n_shots_per_run: int

    @classmethod
    def from_runs(cls, per_run: Sequence[float], n_shots: int) -> "NdcEstimate":
        arr = np.asarray(per_run, dtype=float)
        if arr.size == 0:
            raise ValueError("at least one run is required")
        sigma = float(arr.std(ddof=1)) if arr.size > 1 else float("nan")
        return cls(float(arr.mean()), sigma, tuple(float(x) for x in arr), int(arr.size), int(n_shots))


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    n: int
    method: MethodKind
    estimate: NdcEstimate
    ideal_v: float = field(default=float("nan"))


def protocol_circuits(method: MethodKind | str, n: int, theta: float, layout: str = "lnn") -> tuple[Circuit, Circuit]:
    """(single, double) sub-protocol circuits with the branch resolved."""
    if layout not in LAYOUTS:
        raise ValueError(f"layout must be one of {LAYOUTS}")
    build = build_lnn if layout == "lnn" else build_reference
    return build(method, n, theta, False), build(method, n, theta, True)


def stream_seed(seed: int, method: MethodKind | str, n: int, theta: float, run: int, branch: str) -> int:
    """64-bit stream key for one run of one sub-protocol at one point."""
    method = MethodKind.parse(method)
    text = f"{seed}|{method.value}|{n}|{float(theta)!r}|{run}|{branch}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


class _Runner:
    def __init__(self, circuit: Circuit, noise: NoiseModel | None, engine: str):
        if engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        self.circuit, self.noise = circuit, noise
        self.program = None
        if engine in ("auto", "frame"):
            try:
                self.program = FrameProgram(circuit, noise)
            except UnsupportedCircuit:
                if engine == "frame":
                    raise

    def __call__(self, n_shots: int, seed: int) -> OutcomeCounts:
        if self.program is not None:
            return self.program.run(n_shots, seed)
        return run_shots(self.circuit, self.noise, n_shots, seed)


def run_counts(
    method: MethodKind | str,
    n: int,
    theta: float,
    noise: NoiseModel | None = None,
    n_runs: int = 20,
    n_shots: int = 4000,
    seed: int = 0,
    engine: str = "auto",
    layout: str = "lnn",
) -> Iterator[tuple[OutcomeCounts, OutcomeCounts]]:
    """Yield ``(single, double)`` counts for each run.

    ``engine="auto"`` uses the Pauli-frame engine when the circuit and noise
    model allow it and the statevector trajectories otherwise.
    """
    if n_runs < 1 or n_shots < 1:
        raise ValueError("n_runs and n_shots must be positive")
    method = MethodKind.parse(method)
    single, double = protocol_circuits(method, n, theta, layout)
    run_single, run_double = _Runner(single, noise, engine), _Runner(double, noise, engine)
    for r in range(n_runs):
        yield (run_single(n_shots, stream_seed(seed, method, n, theta, r, "single")),
               run_double(n_shots, stream_seed(seed, method, n, theta, r, "double")))


def run_point(
    method: MethodKind | str,
    n: int,
    theta: float,
    noise: NoiseModel | None = None,
    n_runs: int = 20,
    n_shots: int = 4000,
    seed: int = 0,
    engine: str = "auto",
    layout: str = "lnn",
    outcome_map: OutcomeMap = DEFAULT_MAP,
) -> NdcEstimate:
    """Run both sub-protocols ``n_runs`` times; mean and sample std of the per-run violations."""
    per_run = [
        estimate_violation(cs, cd, outcome_map)
        for cs, cd in run_counts(method, n, theta, noise, n_runs, n_shots, seed, engine, layout)
    ]
    return NdcEstimate.from_runs(per_run, n_shots)


def exact_violation(
    method: MethodKind | str,
    n: int,
    theta: float,
    layout: str = "lnn",
    engine: str = "statevector",
    outcome_map: OutcomeMap = DEFAULT_MAP,
) -> float:
    """Noiseless violation from exact outcome laws of both sub-protocols."""
    single, double = protocol_circuits(method, n, theta, layout)
    if engine == "frame":
        ds, dd = FrameProgram(single).exact_distribution(), FrameProgram(double).exact_distribution()
    else:
        ds, dd = exact_distribution(single), exact_distribution(double)
    return estimate_violation(ds, dd, outcome_map)


def theta_sweep(
    method: MethodKind | str,
    n: int,
    thetas: Sequence[float],
    noise: NoiseModel | None = None,
    n_runs: int = 20,
    n_shots: int = 4000,
    seed: int = 0,
    engine: str = "auto",
    layout: str = "lnn",
) -> list[SweepPoint]:
    if len(thetas) == 0:
        raise ValueError("theta grid must be nonempty")
    method = MethodKind.parse(method)
    return [
        SweepPoint(float(t), n, method,
                   run_point(method, n, t, noise, n_runs, n_shots, seed, engine, layout),
                   ideal_violation(t, n))
        for t in thetas
    ]
