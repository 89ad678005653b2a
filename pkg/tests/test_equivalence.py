import math
from pathlib import Path

import pytest

from ndcbench.builders import C1, C2, CP, build_lnn, build_reference
from ndcbench.circuit import Circuit, Hadamard, Measure, RotY, parse
from ndcbench.equivalence import check_equivalence, measured_clbits
from ndcbench.errors import ResourceError
from ndcbench.passes import m_pipeline

GOLDEN = Path(__file__).parent / "golden"
TOL = 1e-10


def family(build, method, n, **kw):
    return lambda theta, measured: build(method, n, theta, measured, **kw)


def test_circuit_against_itself():
    c = build_reference("H", 3, 0.6, None)
    v = check_equivalence(c, c)
    assert v.passed and v.max_deviation == 0.0
    assert v.n_comparisons == 2  # both selector values


def test_family_against_itself():
    f = family(build_reference, "M", 4)
    v = check_equivalence(f, f, n_random_settings=5)
    assert v.max_deviation == 0.0 and v.n_comparisons == 10


class TestHMethod:
    def test_reference_vs_lnn_final_bit(self):
        v = check_equivalence(family(build_reference, "H", 4), family(build_lnn, "H", 4),
                              n_random_settings=10, tol=TOL, bits=[C2])
        assert v.passed, v.summary()

    def test_reference_vs_lnn_both_bits_measured_branch(self):
        v = check_equivalence(family(build_reference, "H", 4), family(build_lnn, "H", 4, keep_first_readout=True),
                              n_random_settings=10, tol=TOL, bits=[C1, C2], measured_settings=(True,))
        assert v.passed, v.summary()

    def test_selector_form_against_hand_transcription(self):
        hand = parse((GOLDEN / "h_n4_hand.txt").read_text())
        ref = build_reference("H", 4, math.pi / 4, None)
        v = check_equivalence(ref, hand, bits=[C2])
        assert v.passed and v.n_comparisons == 2, v.summary()


class TestMMethod:
    def test_left_vs_right_n8(self):
        v = check_equivalence(family(build_reference, "M", 8), family(build_lnn, "M", 8),
                              n_random_settings=10, tol=TOL, bits=[C1, C2], measured_settings=(True,))
        assert v.passed, v.summary()
        v = check_equivalence(family(build_reference, "M", 8), family(build_lnn, "M", 8),
                              n_random_settings=10, tol=TOL, bits=[C2], measured_settings=(False,))
        assert v.passed, v.summary()

    def test_pipeline_vs_generator_n8(self):
        def piped(theta, measured):
            return m_pipeline(build_reference("M", 8, theta, measured))

        v = check_equivalence(piped, family(build_lnn, "M", 8), n_random_settings=10, tol=TOL)
        assert v.passed, v.summary()


class TestVerdicts:
    def test_detects_a_wrong_angle(self):
        a = family(build_lnn, "H", 3)
        b = lambda t, m: build_lnn("H", 3, t + 0.1, m)  # noqa: E731
        v = check_equivalence(a, b, n_random_settings=3)
        assert not v.passed and v.max_deviation > 1e-3
        assert "NOT EQUIVALENT" in v.summary()
        assert v.worst_setting[2] != ""

    def test_clbit_map(self):
        a = Circuit(1, 2, (RotY(0, 1.0), Measure(0, 0)))
        b = Circuit(1, 2, (RotY(0, 1.0), Measure(0, 1)))
        assert not check_equivalence(a, b, bits=[0]).passed
        assert check_equivalence(a, b, clbit_map={0: 1}).passed

    def test_default_bits_skip_selector(self):
        c = build_reference("H", 2, 0.3, None)
        assert CP not in check_equivalence(c, c).bits
        assert measured_clbits(c) == {C1, C2}

    def test_branch_budget(self):
        wide = Circuit(8, 8, tuple(Hadamard(w) for w in range(8)) + tuple(Measure(w, w) for w in range(8)))
        with pytest.raises(ResourceError):
            check_equivalence(wide, wide, branch_budget=100)
