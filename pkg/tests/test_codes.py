import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hft import gf2
from hft.builders import build_encoder
from hft.codes import (
    CssConditionError,
    DegenerateCodeError,
    DistanceViolationError,
    Syndrome,
    css_from_matrices,
    format_steane,
    get_code,
    hamming_parity_check,
    load_code_file,
    logical_flips,
    logical_state_check,
    min_weight_logical,
    reduced_weight,
    repetition_code,
    syndrome_of,
)
from hft.pauli import PauliString, pauli_commutes
from hft.sim import run_tableau

SINGLE_PAULIS = [(q, letter) for q in range(7) for letter in "XYZ"]


def _brute_min_weight(code, z_syn, x_syn):
    """Oracle: lowest-weight (then lowest-index) Pauli with the given syndrome."""
    best = None
    for w in range(code.n + 1):
        for qs in itertools.combinations(range(code.n), w):
            for letters in itertools.product("XYZ", repeat=w):
                e = PauliString.from_sparse(code.n, dict(zip(qs, letters)))
                s = syndrome_of(code, e)
                if s.z_bits == z_syn and s.x_bits == x_syn:
                    return e
        if best is not None:
            break
    return best


def test_hamming_matrix_literal():
    h = hamming_parity_check()
    assert ["".join(map(str, r)) for r in h] == ["0001111", "0110011", "1010101"]


def test_hamming_zero_and_unit_columns():
    h = hamming_parity_check()
    assert gf2.matmul(h, np.zeros(7, np.uint8)).tolist() == [0, 0, 0]
    e5 = np.zeros(7, np.uint8)
    e5[4] = 1
    assert gf2.matmul(h, e5).tolist() == [1, 0, 1]


def test_steane_structure(steane):
    assert (steane.n, steane.k, steane.d) == (7, 1, 3)
    assert np.array_equal(steane.hz, steane.hx)
    assert steane.stabilizer("Z", 0).support == [3, 4, 5, 6]
    assert steane.stabilizer("X", 1).support == [1, 2, 5, 6]
    assert steane.logical_x.support == list(range(7))
    assert not pauli_commutes(steane.logical_x, steane.logical_z)


def test_all_cross_type_stabilizers_commute(steane):
    for a in steane.z_stabilizers():
        for b in steane.x_stabilizers():
            assert pauli_commutes(a, b)


def test_logicals_commute_with_stabilizers(steane):
    for s in steane.stabilizers():
        assert steane.logical_x.commutes(s)
        assert steane.logical_z.commutes(s)


def test_css_from_hamming_matches_steane(steane):
    h = hamming_parity_check()
    c = css_from_matrices(h, h, 3)
    assert c.k == 1
    assert np.array_equal(c.hz, steane.hz) and np.array_equal(c.hx, steane.hx)
    assert c.logical_x.weight == 3 and c.logical_z.weight == 3
    assert not pauli_commutes(c.logical_x, c.logical_z)
    for e in (PauliString.single(7, q, letter) for q, letter in SINGLE_PAULIS):
        assert c.in_stabilizer_group(c.decode(syndrome_of(c, e)) * e)


def test_css_condition_violation_names_rows():
    hz = [[1, 1, 0]]
    hx = [[1, 0, 0]]
    with pytest.raises(CssConditionError, match="row 0"):
        css_from_matrices(hz, hx, 1)


def test_degenerate_code_rejected():
    with pytest.raises(DegenerateCodeError):
        css_from_matrices([[1, 0], [0, 1]], np.zeros((0, 2), np.uint8), 1)


def test_distance_violation_detected():
    # two-qubit repetition code cannot correct one error
    with pytest.raises(DistanceViolationError):
        css_from_matrices([[1, 1]], np.zeros((0, 2), np.uint8), 3)


def test_repetition_code_corrects_single_x():
    code = repetition_code(3)
    assert code.k == 1
    for q in range(3):
        e = PauliString.single(3, q, "X")
        residual = code.decode(syndrome_of(code, e)) * e
        assert residual.x.sum() == 0


def test_get_code_names():
    assert get_code("steane").name == "steane"
    assert get_code("repetition5").n == 5
    with pytest.raises(KeyError):
        get_code("surface")


def test_load_code_file(tmp_path):
    h = hamming_parity_check().tolist()
    path = tmp_path / "ham.json"
    path.write_text(json.dumps({"n": 7, "d": 3, "hz": h, "hx": h}))
    c = load_code_file(path)
    assert c.k == 1 and c.to_json()["hz"] == h


def test_syndrome_examples(steane):
    assert syndrome_of(steane, PauliString.identity(7)).is_trivial()
    s = syndrome_of(steane, PauliString.single(7, 4, "X"))
    assert (s.z_bits, s.x_bits) == ((1, 0, 1), (0, 0, 0))
    s = syndrome_of(steane, PauliString.single(7, 2, "Y"))
    assert (s.z_bits, s.x_bits) == ((0, 1, 1), (0, 1, 1))
    assert s.bits == (0, 1, 1, 0, 1, 1)


def test_syndrome_dimension_mismatch(steane):
    with pytest.raises(ValueError):
        syndrome_of(steane, PauliString.identity(6))


def test_negative_round_rejected():
    with pytest.raises(ValueError):
        Syndrome((0,), (0,), round=-1)


@given(st.text("IXYZ", min_size=7, max_size=7), st.text("IXYZ", min_size=7, max_size=7))
def test_syndrome_linearity(a, b):
    code = get_code("steane")
    pa, pb = PauliString.from_label(a), PauliString.from_label(b)
    s, sa, sb = syndrome_of(code, pa * pb), syndrome_of(code, pa), syndrome_of(code, pb)
    assert s.bits == tuple(x ^ y for x, y in zip(sa.bits, sb.bits))


def test_decoder_x5(steane):
    corr = steane.decode(Syndrome((1, 0, 1), (0, 0, 0)))
    assert corr == PauliString.single(7, 4, "X")
    assert steane.decode(Syndrome((0, 0, 0), (0, 0, 0))).is_identity()


@pytest.mark.parametrize("q, letter", SINGLE_PAULIS)
def test_decoder_fixes_every_single_pauli(steane, q, letter):
    e = PauliString.single(7, q, letter)
    assert steane.in_stabilizer_group(steane.decode(syndrome_of(steane, e)) * e)


def test_decoder_table_is_minimum_weight(steane):
    table = steane.decoder_table
    assert len(table) == 64
    for (z_syn, x_syn), corr in table.items():
        oracle = _brute_min_weight(steane, z_syn, x_syn)
        assert corr.weight == oracle.weight
        assert syndrome_of(steane, corr).bits == z_syn + x_syn


def test_logical_state_check_on_encoded_states(steane):
    t = run_tableau(build_encoder(steane), seed=0, noisy=False).tableau
    rep = logical_state_check(t, steane)
    assert rep.in_codespace and rep.logical_z == 1 and rep.logical_x == 0
    t.apply_pauli(steane.logical_x)
    rep = logical_state_check(t, steane)
    assert rep.in_codespace and rep.logical_z == -1
    t.apply_pauli(PauliString.single(7, 4, "X"))
    rep = logical_state_check(t, steane)
    assert rep.z_stabilizers == (-1, 1, -1)
    assert rep.x_stabilizers == (1, 1, 1)


def test_logical_state_check_block_length(steane):
    t = run_tableau(build_encoder(steane), seed=0, noisy=False).tableau
    with pytest.raises(ValueError):
        logical_state_check(t, steane, block=range(6))


def test_min_weight_logicals(steane):
    assert min_weight_logical(steane, "X").weight == 3
    assert min_weight_logical(steane, "Z").weight == 3


def test_format_uses_one_based_labels(steane):
    text = format_steane(steane)
    assert "0001111" in text.replace(" ", "")
    assert "g1^Z = Z4 Z5 Z6 Z7" in text
    assert "g2^X = X2 X3 X6 X7" in text


def test_reduced_weight_and_logical_flips(steane):
    zero = np.zeros(7, np.uint8)
    x5 = PauliString.single(7, 4, "X")
    assert reduced_weight(steane, x5.x, x5.z) == 1
    stab = steane.stabilizer("X", 0)
    assert reduced_weight(steane, stab.x, zero) == 0
    ex = np.stack([zero, steane.logical_x.x, x5.x], axis=1)
    ez = np.zeros_like(ex)
    assert logical_flips(steane, ex, ez, "Z").tolist() == [False, True, False]
    assert logical_flips(steane, ex, ez, "X").tolist() == [False, False, False]
    assert logical_flips(steane, ex, ez, "Y").tolist() == [False, True, False]
    with pytest.raises(ValueError):
        logical_flips(steane, ex, ez, "W")
