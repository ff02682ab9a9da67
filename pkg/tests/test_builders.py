import numpy as np
import pytest

from hft.builders import (
    ConfigError,
    SchedulerConfig,
    build_cat_prep,
    build_encoder,
    build_shor_extraction,
    build_steane_ancilla_prep,
    build_steane_extraction,
    memory_circuit,
    prep_statistics,
    run_extraction,
    run_prep_with_policy,
    schedule_cycle,
)
from hft.circuit import Circuit, Instruction, circuit_stats
from hft.codes import logical_state_check, reduced_weight, steane_code
from hft.noise import NoiseModel, instrument
from hft.pauli import PauliString
from hft.sim import FrameSimulator, fault_locations, run_tableau
from hft.tableau import StabilizerTableau

from conftest import containment_residuals

CODE = steane_code()
HAMMING_COLUMNS = [tuple(int(b) for b in CODE.hz[:, i]) for i in range(7)]


def _prefixed(width: int, body: Circuit, prefix) -> Circuit:
    """``prefix(c)`` followed by ``body`` on a circuit of the given width."""
    c = Circuit(width, body.n_clbits, registers=dict(body.registers),
                tables={k: v.copy() for k, v in body.tables.items()})
    prefix(c)
    c.extend(body)
    return c


def _encode(c: Circuit, block, plus=False):
    for ins in build_encoder(CODE).instructions:
        c.append(ins.op, [block[q] for q in ins.qubits])
    if plus:
        c.append("H", list(block))


# encoder -------------------------------------------------------------------------------------

def test_encoder_prepares_zero_l():
    enc = build_encoder(CODE)
    t = run_tableau(enc, 0, noisy=False).tableau
    rep = logical_state_check(t, CODE)
    assert rep.in_codespace and rep.logical_z == 1
    t.apply_pauli(CODE.logical_x)
    rep = logical_state_check(t, CODE)
    assert rep.in_codespace and rep.logical_z == -1


def test_encoder_gate_counts():
    s = circuit_stats(build_encoder(CODE))
    assert s["gate_counts"]["H"] == 3
    assert s["width"] == 7


# cat states ----------------------------------------------------------------------------------

def test_cat_prep_ghz_correlations():
    c = build_cat_prep(4, 0)
    c.add_clbits(4)
    c.append("M", range(4), range(4))
    bits = FrameSimulator(c).sample(2000, seed=1).clbits
    assert np.all(bits == bits[0])
    assert 0.4 < bits[0].mean() < 0.6


def test_bell_pair_statistics():
    c = build_cat_prep(2, 0)
    c.add_clbits(2)
    c.append("M", (0, 1), (0, 1))
    bits = FrameSimulator(c).sample(10_000, seed=2).clbits
    assert np.array_equal(bits[0], bits[1])
    assert abs(bits[0].mean() - 0.5) <= 0.02


def test_cat_prep_with_verification_width():
    c = build_cat_prep(4, 2)
    assert c.n_qubits == 6
    assert c.register("ver") == [4, 5]
    with pytest.raises(ValueError):
        build_cat_prep(1, 0)


# Shor extraction -----------------------------------------------------------------------------

def _shor_on_encoded(index, stype, error=None):
    body = build_shor_extraction(CODE, index, stype, v=2)

    def prefix(c):
        _encode(c, list(range(7)))
        if error is not None:
            for q in error.support:
                c.append(error.letter(q), (q,))

    return _prefixed(body.n_qubits, body, prefix)


@pytest.mark.parametrize("stype", ["Z", "X"])
@pytest.mark.parametrize("index", [0, 1, 2])
def test_shor_noiseless_zero_syndrome(index, stype):
    c = _shor_on_encoded(index, stype)
    for seed in range(5):
        clb = run_tableau(c, seed, noisy=False).clbits
        assert clb[c.register("syndrome")].tolist() == [0]
        assert not clb[c.register("prep_g")].any()


def test_shor_detects_x5_on_first_z_check():
    c = _shor_on_encoded(0, "Z", PauliString.single(7, 4, "X"))
    for seed in range(5):
        assert run_tableau(c, seed, noisy=False).clbits[c.register("syndrome")].tolist() == [1]


def test_core_ancilla_x_fault_spreads_to_one_data_qubit():
    body = build_shor_extraction(CODE, 1, "X", v=2)
    core = body.register("core")
    first = next(i for i, ins in enumerate(body.instructions)
                 if ins.op == "CX" and ins.qubits[0] in core and ins.qubits[1] < 7)
    body.instructions.insert(first, Instruction("NOISE1", tuple(core), (), 0.0))
    c = _prefixed(body.n_qubits, body, lambda c: _encode(c, list(range(7))))
    idx = first + len(c.instructions) - len(body.instructions)
    res = FrameSimulator(c).inject([(idx, {q: "X"}) for q in core])
    for shot in range(len(core)):
        assert res.fx[:7, shot].sum() == 1
        assert not res.fz[:7, shot].any()


def test_shor_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_shor_extraction(CODE, 0, "Z", v=0)
    with pytest.raises(ValueError):
        build_shor_extraction(CODE, 5, "Z")


# Steane ancillas -----------------------------------------------------------------------------

@pytest.mark.parametrize("basis", ["zero_L", "plus_L"])
def test_steane_prep_noiseless_verification(basis):
    c = build_steane_ancilla_prep(CODE, basis)
    for seed in range(5):
        clb = run_tableau(c, seed, noisy=False).clbits
        assert not clb.any()


def test_plus_l_logical_z_is_a_fair_coin():
    c = build_steane_ancilla_prep(CODE, "plus_L")
    bits = c.add_clbits(7, "zbar")
    c.append("M", range(7), bits)
    res = FrameSimulator(c).sample(10_000, seed=4).clbits
    parity = res[bits].sum(axis=0) % 2
    assert abs(parity.mean() - 0.5) <= 0.02
    assert not res[c.register("ver_z")].any()


@pytest.mark.parametrize("q", range(7))
def test_single_x_shows_its_hamming_column(q):
    body = build_steane_ancilla_prep(CODE, "zero_L")
    ver = set(body.register("ver"))
    cut = next(i for i, ins in enumerate(body.instructions) if set(ins.qubits) & ver)
    body.instructions.insert(cut, Instruction("X", (q,)))
    clb = run_tableau(body, 0, noisy=False).clbits
    assert tuple(int(b) for b in clb[body.register("ver_z")]) == HAMMING_COLUMNS[q]
    assert not clb[body.register("ver_x")].any()


def _steane_extraction_on_encoded(stab_type, error=None, anc_fault_site=False):
    body = build_steane_extraction(CODE, range(7), range(7, 14), stab_type)

    def prefix(c):
        _encode(c, list(range(7)))
        _encode(c, list(range(7, 14)), plus=stab_type == "Z")
        if error is not None:
            for q in error.support:
                c.append(error.letter(q), (q,))
        if anc_fault_site:
            c.append("NOISE1", range(7, 14), arg=0.0)

    return _prefixed(14, body, prefix)


def test_transversal_extraction_noiseless():
    c = _steane_extraction_on_encoded("Z")
    res = FrameSimulator(c).sample(200, seed=5)
    assert not res.clbits[c.register("syndrome")].any()
    m = res.clbits[c.register("m")]
    # m is a random codeword, not a fixed pattern
    assert len({tuple(col) for col in m.T}) > 4


@pytest.mark.parametrize("stab_type, letter", [("Z", "X"), ("X", "Z")])
def test_transversal_extraction_sees_qubit_5(stab_type, letter):
    c = _steane_extraction_on_encoded(stab_type, PauliString.single(7, 4, letter))
    for seed in range(3):
        assert run_tableau(c, seed, noisy=False).clbits[c.register("syndrome")].tolist() == [1, 0, 1]


@pytest.mark.parametrize("stab_type", ["Z", "X"])
def test_ancilla_fault_stays_at_its_position(stab_type):
    c = _steane_extraction_on_encoded(stab_type, anc_fault_site=True)
    site = next(i for i, ins in enumerate(c.instructions) if ins.op == "NOISE1")
    faults = [(site, {7 + i: letter}) for i in range(7) for letter in "XYZ"]
    res = FrameSimulator(c).inject(faults)
    for shot, (_, paulis) in enumerate(faults):
        pos = next(iter(paulis)) - 7
        hit = np.flatnonzero(res.fx[:7, shot] | res.fz[:7, shot]).tolist()
        assert hit in ([], [pos])


def test_extraction_block_checks():
    with pytest.raises(ValueError):
        build_steane_extraction(CODE, range(7), range(6, 13), "Z")
    with pytest.raises(ValueError):
        build_steane_extraction(CODE, range(7), range(7, 13), "Z")


# preparation policy --------------------------------------------------------------------------

@pytest.mark.parametrize("basis", ["zero_L", "plus_L"])
def test_prep_policy_noiseless(basis):
    rep, t, lay = run_prep_with_policy(CODE, basis, max_attempts=3, rng=0)
    assert rep.attempts_used == 1 and rep.prep_success_rate == 1.0
    assert rep.accepted and not rep.exhausted and rep.verification_failures == 0
    assert logical_state_check(t, CODE, lay["data"]).logical_z == 1


def test_prep_policy_correctable_error_recovers():
    rep, _, _ = run_prep_with_policy(CODE, "zero_L", max_attempts=3, rng=1,
                                     inject_each_attempt=PauliString.single(7, 2, "X"))
    assert rep.accepted and rep.attempts_used == 1 and rep.verification_failures == 1


def test_prep_policy_exhausts_on_weight_two_errors():
    bad = PauliString.from_sparse(7, {0: "X", 1: "X"})
    rep, _, _ = run_prep_with_policy(CODE, "zero_L", max_attempts=3, rng=2, inject_each_attempt=bad)
    assert rep.exhausted and not rep.accepted
    assert rep.attempts_used == 3 and rep.verification_failures == 3
    assert rep.prep_success_rate == 0 and not rep.roles_exchanged


def test_prep_policy_swap_exchanges_roles():
    bad = PauliString.from_sparse(7, {0: "X", 1: "X"})
    rep, t, lay = run_prep_with_policy(CODE, "zero_L", max_attempts=2, swap_policy=True, rng=3,
                                       inject_each_attempt=bad)
    assert rep.roles_exchanged and rep.exhausted
    assert lay["data"] == list(range(7, 14))


# scheduler -----------------------------------------------------------------------------------

MODES = ["standard", "cat", "steane"]
READOUTS = ["sequential", "batched"]
RECOVERIES = ["feedforward", "frame", "none"]


@pytest.mark.parametrize("recovery", RECOVERIES)
@pytest.mark.parametrize("readout", READOUTS)
@pytest.mark.parametrize("mode", MODES)
def test_noiseless_syndromes_are_zero(mode, readout, recovery):
    cfg = SchedulerConfig(mode, readout, 3, recovery=recovery)
    c = memory_circuit(CODE, cfg)
    clb = FrameSimulator(c).sample(50, seed=6, noisy=False).clbits
    for r in range(3):
        assert not clb[c.register(f"syn_r{r}")].any()
    if recovery == "frame":
        assert not clb[c.register("frame_x")].any()


def test_sixteen_round_records():
    c = schedule_cycle(CODE, SchedulerConfig("cat", "batched", 16, verify=2))
    syn = sorted(k for k in c.registers if k.startswith("syn_r"))
    assert len(syn) == 16
    assert all(len(c.register(k)) == 6 for k in syn)
    ticks = [ins.arg for ins in c.instructions if ins.op == "TICK"]
    assert ticks == [f"r{r}" for r in range(16)] + ["end"]


@pytest.mark.parametrize("mode, n_anc", [("standard", 6), ("cat", 30), ("steane", 21)])
def test_ancilla_counts(mode, n_anc):
    c = schedule_cycle(CODE, SchedulerConfig(mode, "batched", 1))
    assert len(c.register("anc")) == n_anc
    assert c.n_qubits == 7 + n_anc


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("state", ["zero", "plus"])
def test_extraction_is_non_destructive(mode, state):
    cyc = schedule_cycle(CODE, SchedulerConfig(mode, "batched", 2, recovery="feedforward"))
    for seed in range(3):
        t = StabilizerTableau(cyc.n_qubits, seed)
        prefix = Circuit(cyc.n_qubits)
        _encode(prefix, list(range(7)), plus=state == "plus")
        run_tableau(prefix, seed, noisy=False, tableau=t)
        run_tableau(cyc, seed, noisy=False, tableau=t)
        rep = logical_state_check(t, CODE)
        assert rep.in_codespace
        if state == "zero":
            assert rep.logical_z == 1
        else:
            assert rep.logical_x == 1


@pytest.mark.parametrize("mode", MODES)
def test_run_extraction_single_error(mode):
    out = run_extraction(CODE, mode, error=PauliString.single(7, 4, "X"), seed=0)
    assert out.syndrome.z_bits == (1, 0, 1) and out.syndrome.x_bits == (0, 0, 0)
    assert out.accepted
    assert out.ancilla_metrics["prep_success_rate"] == 1.0
    out = run_extraction(CODE, mode, seed=1)
    assert out.syndrome.is_trivial()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mode": "surface"},
        {"readout": "streaming"},
        {"mode": "cat", "verify": 0},
        {"max_prep_attempts": 0},
        {"rounds": 0},
        {"mode": "cat", "swap_policy": True},
        {"recovery": "magic"},
    ],
)
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        SchedulerConfig(**kwargs)


def test_config_json_round_trip():
    cfg = SchedulerConfig("steane", "batched", 4, swap_policy=True)
    assert SchedulerConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ConfigError):
        SchedulerConfig.from_json({"mode": "cat", "colour": 1})


def test_prep_statistics_counts_attempts():
    cyc = schedule_cycle(CODE, SchedulerConfig("cat", "batched", 1, max_prep_attempts=2))
    clb = np.zeros((cyc.n_clbits, 2), dtype=bool)
    g = cyc.register("prep_r0_z0_g")
    clb[g[0], 1] = True  # second shot: first attempt failed, second passed
    stats = prep_statistics(cyc, clb)
    blocks = 6
    assert stats["attempts"] == 2 * blocks + 1
    assert stats["passes"] == 2 * blocks
    assert stats["verification_failures"] == 1


# fault tolerance -----------------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["cat", "steane"])
def test_fault_containment_single_round(mode):
    faults, weights, _ = containment_residuals(mode)
    assert len(faults) > 100
    assert weights.max() <= 1


def test_standard_mode_spreads_faults():
    faults, weights, _ = containment_residuals("standard")
    assert weights.max() >= 2


@pytest.mark.parametrize("readout", READOUTS)
@pytest.mark.parametrize("mode", ["cat", "steane"])
def test_single_faults_never_flip_the_logical(mode, readout):
    _, weights, flips = containment_residuals(mode, rounds=3, recovery="feedforward", readout=readout)
    assert not flips.any()
    assert weights.max() <= 1


@pytest.mark.parametrize("stype", ["X", "Z"])
def test_cat_verification_soundness(stype):
    """Every single fault before the data coupling is rejected or harmless."""
    body = build_shor_extraction(CODE, 0, stype, v=2)
    noisy = instrument(body, NoiseModel())
    data = set(range(7))
    couple = next(i for i, ins in enumerate(noisy.instructions)
                  if ins.op == "CX" and set(ins.qubits) & data)
    c = _prefixed(noisy.n_qubits, noisy, lambda c: _encode(c, list(range(7))))
    c.instrumented = True
    offset = len(c.instructions) - len(noisy.instructions)
    faults = fault_locations(c, offset, offset + couple)
    assert sum(1 for _, ps in faults if set(ps.values()) <= {"X", "I"}) > 10
    res = FrameSimulator(c).inject(faults)
    rejected = res.clbits[c.register("prep_g")[-1]]
    weights = reduced_weight(CODE, res.fx[:7], res.fz[:7])
    assert np.all(rejected | (weights <= 1))
    assert rejected.any()
