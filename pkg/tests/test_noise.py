import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _strategies import dynamic_circuits
from ndcbench.builders import C2, build_lnn
from ndcbench.circuit import Circuit, Cnot, Hadamard, Measure, RotY
from ndcbench.noise import (
    NoiseModel,
    Schedule,
    apply_gate_noise,
    apply_idle_noise,
    flip_readout,
    idle_probabilities,
)
from ndcbench.protocol import run_point
from ndcbench.statevector import StateVector, final_state, run_shots


def _state(circuit_ops, n):
    return final_state(Circuit(n, 0, tuple(circuit_ops)))


class TestModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(p1=1.5)
        with pytest.raises(ValueError):
            NoiseModel(t1=10, t2=25)
        with pytest.raises(ValueError):
            NoiseModel(dur_meas=-1)
        with pytest.raises(ValueError):
            NoiseModel(idle_channel="thermal")

    def test_round_trip_and_fingerprint(self):
        m = NoiseModel.default()
        assert NoiseModel.from_dict(m.to_dict()) == m
        assert m.fingerprint() == NoiseModel.from_dict(m.to_dict()).fingerprint()
        assert m.fingerprint() != NoiseModel().fingerprint()

    def test_default_measurement_ratio(self):
        m = NoiseModel.default()
        assert m.dur_meas == 38 * m.dur_2q

    def test_jitter_is_seeded(self):
        m = NoiseModel(t1=100, t2=80, jitter=0.2, jitter_seed=4)
        a, b = m.wire_times(5), m.wire_times(5)
        assert np.array_equal(a[0], b[0]) and len(set(a[0])) == 5
        assert np.all(a[1] <= 2 * a[0])


class TestGateNoise:
    def test_zero_probability(self):
        s = _state([RotY(0, 0.4)], 1)
        out = apply_gate_noise(s, (0,), NoiseModel(), np.random.default_rng(0))
        assert np.array_equal(out.amplitudes, s.amplitudes)

    def test_certain_single_qubit_kick_is_uniform(self):
        m = NoiseModel(p1=1.0)
        seen = {"X": 0, "Y": 0, "Z": 0}
        rng = np.random.default_rng(1)
        for _ in range(3000):
            a = apply_gate_noise(StateVector.zero(1), (0,), m, rng).amplitudes
            if abs(a[0]) > 0.5:
                seen["Z"] += 1
            elif abs(a[1] - 1) < 1e-12:
                seen["X"] += 1
            else:
                seen["Y"] += 1
        for v in seen.values():
            assert abs(v / 3000 - 1 / 3) < 0.04

    def test_certain_two_qubit_kick_is_uniform(self):
        # wires 0, 1 are each half of a Bell pair with wires 2, 3, so every
        # two-qubit Pauli on (0, 1) lands on a distinct orthogonal state
        bell = _state([Hadamard(0), Cnot(0, 2), Hadamard(1), Cnot(1, 3)], 4)
        paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
        refs = []
        for k in range(16):
            t = bell.amplitudes.reshape([2] * 4)  # axis 3 - w is wire w
            t = np.einsum("ab,ijkb->ijka", paulis[k % 4], t)
            t = np.einsum("ab,ijbk->ijak", paulis[k // 4], t)
            refs.append(t.reshape(-1))
        hist = np.zeros(16)
        rng = np.random.default_rng(2)
        for _ in range(3000):
            out = apply_gate_noise(bell, (0, 1), NoiseModel(p2=1.0), rng).amplitudes
            hist[int(np.argmax([abs(np.vdot(r, out)) for r in refs]))] += 1
        assert hist[0] == 0
        assert np.all(np.abs(hist[1:] / 3000 - 1 / 15) < 0.025)


class TestIdleNoise:
    def test_zero_duration(self):
        s = _state([Hadamard(0)], 1)
        out = apply_idle_noise(s, 0, 0.0, NoiseModel(t1=10, t2=10), np.random.default_rng(0))
        assert np.array_equal(out.amplitudes, s.amplitudes)

    def test_infinite_times(self):
        s = _state([Hadamard(0)], 1)
        out = apply_idle_noise(s, 0, 50.0, NoiseModel(), np.random.default_rng(0))
        assert np.array_equal(out.amplitudes, s.amplitudes)

    def test_negative_duration(self):
        with pytest.raises(ValueError):
            apply_idle_noise(StateVector.zero(1), 0, -1.0, NoiseModel(t1=5, t2=5), np.random.default_rng(0))

    def test_amplitude_damping_rate(self):
        m = NoiseModel(t1=100.0, t2=100.0)
        one = _state([RotY(0, math.pi)], 1)
        rng = np.random.default_rng(3)
        decayed = sum(abs(apply_idle_noise(one, 0, 50.0, m, rng).amplitudes[0]) > 0.5 for _ in range(4000))
        gamma = 1 - math.exp(-0.5)
        assert abs(decayed / 4000 - gamma) < 4 * math.sqrt(gamma * (1 - gamma) / 4000)

    @pytest.mark.parametrize("channel", ["kraus", "pauli"])
    def test_coherence_decays_with_t2(self, channel):
        t, t1, t2 = 30.0, 100.0, 60.0
        if channel == "pauli":
            px, py, pz = idle_probabilities(t, t1, t2, "pauli")
            coherence = 1 - 2 * (py + pz)
        else:
            gamma, pz = idle_probabilities(t, t1, t2, "kraus")
            coherence = math.sqrt(1 - gamma) * (1 - 2 * pz)
        assert coherence == pytest.approx(math.exp(-t / t2), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 500), st.floats(1, 1e4), st.floats(0.05, 2.0), st.sampled_from(["kraus", "pauli"]),
           st.integers(0, 2**32 - 1))
    def test_trajectory_norm(self, t, t1, ratio, channel, seed):
        m = NoiseModel(t1=t1, t2=min(2 * t1, t1 * ratio), idle_channel=channel)
        s = _state([RotY(0, 0.7), Hadamard(1), Cnot(1, 0)], 2)
        out = apply_idle_noise(s, 0, t, m, np.random.default_rng(seed))
        assert abs(out.norm() - 1) < 1e-10

    def test_pauli_probabilities_valid(self):
        for t in (0.0, 1.0, 76.0, 1e4):
            ps = idle_probabilities(t, 2000.0, 1200.0, "pauli")
            assert all(p >= 0 for p in ps) and sum(ps) <= 1


class TestReadout:
    def test_identity(self):
        rng = np.random.default_rng(0)
        assert all(flip_readout(b, NoiseModel(), rng) == b for b in (0, 1) * 20)

    def test_certain_flip(self):
        assert flip_readout(0, NoiseModel(readout_p10=1.0), np.random.default_rng(0)) == 1
        assert flip_readout(1, NoiseModel(readout_p01=1.0), np.random.default_rng(0)) == 0

    def test_error_rate_on_deterministic_circuit(self):
        c = build_lnn("H", 4, math.pi, True)
        n = 20_000
        counts = run_shots(c, NoiseModel(readout_p01=0.01, readout_p10=0.01), n, seed=7).marginal([C2])
        wrong = min(counts.counts.values()) / n
        assert abs(wrong - 0.01) < 3 * math.sqrt(0.01 * 0.99 / n)


class TestSchedule:
    @settings(max_examples=60, deadline=None)
    @given(dynamic_circuits(max_wires=4))
    def test_intervals_do_not_overlap(self, c):
        s = Schedule.build(c, NoiseModel.default())
        for busy in s.busy:
            for (a0, a1, _), (b0, b1, _) in zip(busy, busy[1:]):
                assert a1 <= b0 + 1e-12 and a0 <= a1

    def test_measurement_gap(self):
        c = Circuit(2, 1, (Hadamard(0), Hadamard(1), Measure(1, 0), Cnot(0, 1)))
        s = Schedule.build(c, NoiseModel(dur_1q=1, dur_2q=2, dur_meas=76))
        assert s.idle_before[3] == ((0, 76.0),)


@pytest.mark.slow
class TestDegradation:
    def test_v_decreases_with_p2(self):
        n, est = 6, []
        for p2 in (0.0, 0.01, 0.03):
            est.append(run_point("H", n, math.pi / 4, NoiseModel(p2=p2), 20, 4000, seed=3))
        for a, b in zip(est, est[1:]):
            assert b.v <= a.v + a.sigma

    def test_depolarising_v_decreases_with_n(self):
        m = NoiseModel(p2=0.01)
        vs = [run_point("H", n, math.pi / 4, m, 20, 4000, seed=5).v for n in (2, 6, 10, 16)]
        assert all(b < a for a, b in zip(vs, vs[1:]))

    def test_long_measurement_hurts_m_method(self):
        idle_only = NoiseModel(t1=2000.0, t2=1200.0, dur_meas=76.0, idle_channel="pauli")
        h = run_point("H", 8, math.pi / 4, idle_only, 20, 4000, seed=2)
        m = run_point("M", 8, math.pi / 4, idle_only, 20, 4000, seed=2)
        assert m.v < h.v
