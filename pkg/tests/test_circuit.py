import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _strategies import dynamic_circuits, unitary_circuits
from ndcbench.builders import build_lnn
from ndcbench.circuit import (
    Barrier,
    Circuit,
    CircuitBuilder,
    ClassicallyControlled,
    Cnot,
    Hadamard,
    Measure,
    RotY,
    Swap,
    asap_slots,
    count_cnots,
    count_lnn_cnots,
    depth,
    parse,
    serialize,
    validate_lnn,
)
from ndcbench.errors import CircuitError, ParseError

GOLDEN = Path(__file__).parent / "golden"


class TestConstruction:
    def test_out_of_range_wire(self):
        with pytest.raises(CircuitError):
            Circuit(2, 0, (Cnot(0, 2),))

    def test_two_qubit_gate_on_one_wire(self):
        with pytest.raises(CircuitError):
            Circuit(2, 0, (Swap(1, 1),))

    def test_nested_classical_control(self):
        with pytest.raises(CircuitError):
            Circuit(1, 1, (ClassicallyControlled(0, 1, ClassicallyControlled(0, 1, Hadamard(0))),))

    def test_non_finite_angle(self):
        with pytest.raises(CircuitError):
            Circuit(1, 0, (RotY(0, math.inf),))

    def test_clbit_out_of_range(self):
        with pytest.raises(CircuitError):
            Circuit(1, 1, (Measure(0, 1),))

    def test_resolve_drops_or_unwraps(self):
        c = Circuit(1, 1, (ClassicallyControlled(0, 0, Hadamard(0)), Measure(0, 0)))
        assert c.resolve({0: 0}).instructions == (Hadamard(0), Measure(0, 0))
        assert c.resolve({0: 1}).instructions == (Measure(0, 0),)


class TestDepth:
    def test_empty(self):
        assert depth(Circuit(3, 0)) == 0

    def test_parallel_rotations(self):
        assert depth(Circuit(5, 0, tuple(RotY(w, 0.3) for w in range(5)))) == 1

    def test_barrier_is_a_fence(self):
        c = Circuit(2, 0, (Hadamard(0), Barrier(()), Hadamard(1)))
        assert depth(c) == 2
        assert asap_slots(c) == [0, -1, 1]

    def test_measure_occupies_its_clbit(self):
        assert depth(Circuit(2, 1, (Measure(0, 0), Measure(1, 0)))) == 2
        assert depth(Circuit(2, 2, (Measure(0, 0), Measure(1, 1)))) == 1

    def test_classical_control_waits_for_its_bit(self):
        c = Circuit(2, 1, (Hadamard(0), Measure(0, 0), ClassicallyControlled(0, 1, Hadamard(1))))
        assert depth(c) == 3

    @given(unitary_circuits(max_wires=5), st.randoms(use_true_random=False))
    def test_invariant_under_reordering_within_a_slot(self, c, rnd):
        slots = asap_slots(c)
        order = sorted(range(len(c)), key=lambda i: (slots[i], rnd.random()))
        assert depth(c.replace([c.instructions[i] for i in order])) == depth(c)


class TestCnotCounts:
    def test_no_two_qubit_gates(self):
        assert count_lnn_cnots(Circuit(2, 0, (Hadamard(0), RotY(1, 0.2)))) == 0

    def test_single_adjacent(self):
        assert count_lnn_cnots(Circuit(2, 0, (Cnot(0, 1),))) == 1

    def test_swap_counts_three(self):
        assert count_lnn_cnots(Circuit(2, 0, (Swap(1, 0),))) == 3

    def test_long_range_not_counted_as_lnn(self):
        c = Circuit(4, 0, (Cnot(0, 3),))
        assert count_lnn_cnots(c) == 0
        assert count_cnots(c) == 1

    @given(unitary_circuits(max_wires=5, adjacent=True), st.data())
    def test_invariant_under_barriers_and_single_qubit_gates(self, c, data):
        extra = data.draw(st.lists(st.tuples(st.integers(0, len(c)),
                                             st.sampled_from([Barrier(()), Hadamard(0), RotY(0, 0.1)]))))
        ins = list(c.instructions)
        for pos, x in sorted(extra, key=lambda p: -p[0]):
            ins.insert(pos, x)
        assert count_lnn_cnots(c.replace(ins)) == count_lnn_cnots(c)


class TestValidateLnn:
    def test_adjacent(self):
        assert validate_lnn(Circuit(2, 0, (Cnot(0, 1),))) == []

    def test_distance_three(self):
        v = validate_lnn(Circuit(4, 0, (Hadamard(0), Cnot(0, 3))))
        assert [(x.index, x.distance) for x in v] == [(1, 3)]

    def test_m_method_before_and_after_nnn_decomposition(self):
        raw = validate_lnn(build_lnn("M", 8, 0.3, True, decompose_nnn=False))
        assert len(raw) == 3 and all(x.distance == 2 for x in raw)
        assert validate_lnn(build_lnn("M", 8, 0.3, True)) == []

    @pytest.mark.parametrize("method", ["H", "M", "NaiveM"])
    @pytest.mark.parametrize("measured", [True, False])
    def test_generators_are_lnn(self, method, measured):
        for n in (2, 3, 4, 7, 10):
            assert validate_lnn(build_lnn(method, n, 0.3, measured)) == []


class TestTextFormat:
    def test_empty_round_trip(self):
        text = serialize(Circuit(0, 0))
        assert text == "wires 0 clbits 0\n"
        assert parse(text) == Circuit(0, 0)

    def test_cx_line(self):
        assert parse("wires 2 clbits 0\ncx 0 1\n").instructions == (Cnot(0, 1),)

    def test_comments_and_blank_lines(self):
        c = parse("# demo\n\nwires 2 clbits 1\n  h 0   # first\ncif 0 1 x 1\n")
        assert c.metadata["name"] == "demo"
        assert len(c) == 2

    def test_unknown_gate_reports_line_and_token(self):
        with pytest.raises(ParseError) as exc:
            parse("wires 2 clbits 0\nh 0\nfoo 1\n")
        assert exc.value.line == 3 and exc.value.token == "foo"

    def test_bad_operand(self):
        with pytest.raises(ParseError) as exc:
            parse("wires 2 clbits 0\nry 0 half\n")
        assert exc.value.line == 2 and exc.value.token == "half"

    def test_out_of_range_is_a_parse_error(self):
        with pytest.raises(ParseError) as exc:
            parse("wires 2 clbits 0\ncx 0 5\n")
        assert exc.value.line == 2

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse("cx 0 1\n")

    def test_nested_cif_rejected(self):
        with pytest.raises(ParseError):
            parse("wires 1 clbits 1\ncif 0 1 cif 0 1 h 0\n")

    @settings(max_examples=200)
    @given(dynamic_circuits(max_wires=5))
    def test_round_trip(self, c):
        back = parse(serialize(c))
        assert back == c
        assert serialize(back) == serialize(c)

    def test_golden_h_method_n4(self):
        for measured, name in ((True, "h_n4_double.txt"), (False, "h_n4_single.txt")):
            text = serialize(build_lnn("H", 4, math.pi / 4, measured))
            golden = (GOLDEN / name).read_text()
            assert text == golden
            assert serialize(parse(golden)) == golden


def test_builder_helper():
    c = CircuitBuilder(2, 1, name="x").h(0).cx(0, 1).measure(1, 0).build()
    assert c.instructions == (Hadamard(0), Cnot(0, 1), Measure(1, 0))
    assert c.metadata["name"] == "x"
