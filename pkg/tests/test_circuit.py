import pytest
from hypothesis import given, settings, strategies as st

from hft.builders import SchedulerConfig, build_cat_prep, build_encoder, memory_circuit, schedule_cycle
from hft.circuit import Circuit, CircuitError, circuit_stats, parse_circuit, render_text
from hft.codes import steane_code
from hft.noise import NoiseModel


def test_text_example_parses():
    text = """
    QUBITS 6
    CLBITS 4
    H 3
    CX 0 4
    M 4 -> c2
    R 4
    NOISE2(0.01) 0 4
    CPAULI X 5 if c2
    XOR c3 = c2 c1
    X 1 if !c0
    """
    c = parse_circuit(text)
    assert [ins.op for ins in c.instructions] == ["H", "CX", "M", "R", "NOISE2", "CPAULI", "XOR", "X"]
    assert c.instructions[5].cond == 2 and c.instructions[5].arg == "X"
    assert c.instructions[7].negate
    assert parse_circuit(c.to_text()) == c


@pytest.mark.parametrize(
    "config",
    [
        SchedulerConfig("standard", "sequential", 1),
        SchedulerConfig("cat", "batched", 2, verify=2),
        SchedulerConfig("steane", "sequential", 1, swap_policy=True),
        SchedulerConfig("steane", "batched", 2, recovery="frame"),
    ],
    ids=lambda c: f"{c.mode}-{c.readout}-{c.recovery}",
)
def test_scheduled_circuits_round_trip(config):
    c = memory_circuit(steane_code(), config, NoiseModel())
    again = parse_circuit(c.to_text())
    assert again == c
    assert again.to_text() == c.to_text()


def test_noise_args_survive_round_trip_exactly():
    c = Circuit(2)
    c.append("CX", (0, 1))
    c.append("NOISE2", (0, 1), arg=0.1 + 0.2)
    c.append("IDLE", (0,), arg=1 / 3)
    again = parse_circuit(c.to_text())
    assert again.instructions[1].arg == 0.1 + 0.2
    assert again.instructions[2].arg == 1 / 3


@pytest.mark.parametrize(
    "line",
    ["H 9", "CX 0 0", "M 0 -> c9", "FOO 1", "CPAULI W 0 if c0", "XOR c0", "DECODE nope c0 c1"],
)
def test_bad_instructions_rejected(line):
    with pytest.raises(CircuitError):
        parse_circuit(f"QUBITS 3\nCLBITS 2\n{line}\n")


def test_missing_header_rejected():
    with pytest.raises(CircuitError):
        parse_circuit("H 0\n")


def test_nested_guards_rejected():
    inner = Circuit(1, 2)
    inner.append("X", (0,), cond=0)
    outer = Circuit(1, 2)
    with pytest.raises(CircuitError):
        outer.extend(inner, cond=1)


def test_empty_circuit_stats():
    s = circuit_stats(Circuit(5))
    assert s["depth"] == 0 and s["width"] == 5 and s["gate_counts"] == {}


def test_cat_prep_stats():
    s = circuit_stats(build_cat_prep(4, 0))
    assert s["gate_counts"] == {"CX": 3, "H": 1}
    assert s["depth"] == 4
    s = circuit_stats(build_cat_prep(4, 2))
    assert s["width"] == 6 and s["depth"] == 6


def test_broadcast_counts_per_application():
    c = Circuit(4)
    c.append("CX", (0, 1, 2, 3))
    c.append("H", (0, 1, 2))
    s = circuit_stats(c)
    assert s["gate_counts"] == {"CX": 2, "H": 3}
    assert s["depth"] == 2


def test_steane_round_resources():
    c = schedule_cycle(steane_code(), SchedulerConfig("steane", "batched", 1))
    s = circuit_stats(c)
    assert 16 <= s["width"] <= 40
    assert s["depth"] > 14


def test_render_has_one_lane_per_qubit():
    c = build_encoder(steane_code())
    text = render_text(c)
    lines = text.splitlines()
    assert len(lines) == 7
    assert all(ln.startswith(f"q{i}") for i, ln in enumerate(lines))
    assert "*" in text and "+" in text and "H" in text


def test_render_marks_ticks_and_truncates():
    c = Circuit(2)
    for _ in range(100):
        c.append("H", (0,))
    c.append("TICK", arg="r0")
    assert "#" in render_text(c, max_columns=None)
    assert all(len(ln) <= 3 + 20 for ln in render_text(c, max_columns=20).splitlines())


ops = st.sampled_from(["H", "S", "X", "Z", "CX", "M", "R"])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(ops, st.integers(0, 3), st.integers(0, 3), st.booleans()), max_size=30))
def test_random_circuits_round_trip(program):
    c = Circuit(4, 4)
    for op, a, b, guard in program:
        cond = b if guard else None
        if op == "CX":
            if a == b:
                continue
            c.append("CX", (a, b))
        elif op == "M":
            c.append("M", (a,), (b,))
        else:
            c.append(op, (a,), cond=cond)
    assert parse_circuit(c.to_text()) == c
