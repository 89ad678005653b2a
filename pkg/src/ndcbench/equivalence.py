"""Distributional equivalence oracle for protocol circuits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .builders import CP
from .circuit import Circuit, ClassicallyControlled, Measure
from .statevector import DEFAULT_BRANCH_BUDGET, exact_distribution

CircuitFamily = Callable[[float, "bool | None"], Circuit]
Source = Union[Circuit, CircuitFamily]


@dataclass(frozen=True)
class EquivalenceVerdict:
    passed: bool
    max_deviation: float
    n_comparisons: int
    bits: tuple[int, ...]
    worst_setting: tuple[float | None, bool | None, str]

    def summary(self) -> str:
        theta, measured, key = self.worst_setting
        status = "EQUIVALENT" if self.passed else "NOT EQUIVALENT"
        where = f" (worst at theta={theta}, measured={measured}, outcome {key!r})" if key else ""
        return f"{status}: max deviation {self.max_deviation:.3e} over {self.n_comparisons} comparisons on bits {list(self.bits)}{where}"


def measured_clbits(circuit: Circuit) -> set[int]:
    out = set()
    for ins in circuit.instructions:
        inner = ins.inner if isinstance(ins, ClassicallyControlled) else ins
        if isinstance(inner, Measure):
            out.add(inner.clbit)
    return out


def _reads_cp(circuit: Circuit) -> bool:
    return any(isinstance(i, ClassicallyControlled) and i.bit == CP for i in circuit.instructions)


def _marginal(circuit: Circuit, bits: Sequence[int], initial: Mapping[int, int] | None,
              budget: int) -> dict[str, float]:
    return exact_distribution(circuit, initial_clbits=initial, branch_budget=budget).marginal(list(bits)).probs


def check_equivalence(
    a: Source,
    b: Source,
    n_random_settings: int = 10,
    tol: float = 1e-10,
    bits: Sequence[int] | None = None,
    clbit_map: Mapping[int, int] | None = None,
    measured_settings: Sequence[bool | None] = (True, False),
    seed: int = 0,
    branch_budget: int = DEFAULT_BRANCH_BUDGET,
) -> EquivalenceVerdict:
    """Compare exact outcome distributions of ``a`` and ``b`` on ``bits``.

    ``a`` and ``b`` are circuits or families ``(theta, measured) -> Circuit``.
    Families are compared at ``n_random_settings`` angles drawn uniformly from
    [0, 2pi) and every entry of ``measured_settings``. Fixed circuits that read
    the selector bit are compared under both selector values. ``clbit_map``
    sends a bit of ``b`` to the bit of ``a`` it should be compared with.
    ``bits`` defaults to the bits both circuits measure.
    """
    rng = np.random.default_rng(seed)
    family = callable(a) and not isinstance(a, Circuit) or callable(b) and not isinstance(b, Circuit)

    def make(src: Source, theta: float | None, measured: bool | None) -> Circuit:
        return src if isinstance(src, Circuit) else src(theta, measured)

    if family:
        thetas = [float(t) for t in rng.uniform(0.0, 2 * np.pi, n_random_settings)]
        settings = [(t, m) for t in thetas for m in measured_settings]
    else:
        settings = [(None, None)]

    worst = (None, None, "")
    max_dev = 0.0
    count = 0
    used_bits: tuple[int, ...] = ()
    to_a = dict(clbit_map or {})
    to_b = {v: k for k, v in to_a.items()}
    for theta, measured in settings:
        ca, cb = make(a, theta, measured), make(b, theta, measured)
        if bits is None:
            mb = {to_a.get(x, x) for x in measured_clbits(cb)}
            sel = tuple(sorted((measured_clbits(ca) & mb) - {CP}))
        else:
            sel = tuple(bits)
        used_bits = sel
        inits: list[Mapping[int, int] | None] = [None]
        if _reads_cp(ca) or _reads_cp(cb):
            inits = [{CP: 0}, {CP: 1}]
        for init in inits:
            pa = _marginal(ca, sel, init, branch_budget)
            pb = _marginal(cb, [to_b.get(x, x) for x in sel], init, branch_budget)
            for key in set(pa) | set(pb):
                d = abs(pa.get(key, 0.0) - pb.get(key, 0.0))
                if d > max_dev:
                    max_dev, worst = d, (theta, measured if init is None else bool(init[CP]), key)
            count += 1
    return EquivalenceVerdict(max_dev <= tol, max_dev, count, used_bits, worst)
