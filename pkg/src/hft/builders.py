"""Circuit construction: encoders, the three syndrome-extraction methods and the cycle scheduler.

Extraction methods:

``standard``
    One bare ancilla per stabilizer.  Cheap, but a single ancilla fault can
    spread to several data qubits.
``cat``
    A verified cat state per stabilizer.  The ``w`` core ancillas each touch
    one data qubit; ``v`` extra ancillas check the cat before it is used and
    a failed check triggers a fresh attempt.
``steane``
    Two encoded ancilla blocks, ``|+_L>`` for the Z-syndrome and ``|0_L>``
    for the X-syndrome, coupled to the data transversally.  Each block is
    verified by measuring its own stabilizers; failures are corrected and
    re-verified, then retried.

Retries and fallbacks are expressed with guarded instructions, so one static
circuit covers every branch.  Guarded blocks either re-prepare an ancilla
(leaving the noiseless state unchanged) or act on qubits that are reset
before their next use, as required by the frame sampler.
"""
from __future__ import annotations

import re
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .circuit import Circuit, CircuitError, circuit_stats
from .codes import CssCode, Syndrome, logical_state_check, min_weight_logical
from .noise import NoiseModel, instrument
from .pauli import PauliString
from .sim import run_tableau
from .tableau import StabilizerTableau

MODES = ("standard", "cat", "steane")
READOUTS = ("sequential", "batched")
RECOVERIES = ("feedforward", "frame", "none")

__all__ = [
    "ConfigError", "SchedulerConfig", "ExtractionOutcome", "PrepReport",
    "build_encoder", "build_cat_prep", "build_shor_extraction", "build_steane_ancilla_prep",
    "build_steane_extraction", "run_prep_with_policy", "schedule_cycle", "circuit_stats",
    "decoder_tables", "memory_circuit", "prep_statistics", "run_extraction", "splice_t_sites", "LAYER_GATES",
]


class ConfigError(ValueError):
    """Invalid scheduler configuration."""


@dataclass(frozen=True)
class SchedulerConfig:
    """How each error-correction round is built.

    Attributes:
        mode: ``standard``, ``cat`` or ``steane``.
        readout: ``sequential`` (decode each stabilizer type right after it is
            extracted) or ``batched`` (one joint decode per round).
        rounds: number of rounds ``T``.
        verify: verification ancillas per cat state (cat mode).
        max_prep_attempts: preparation attempts before falling back.
        swap_policy: on exhausted Steane-ancilla attempts, swap in a freshly
            prepared block instead of falling back to bare ancillas.
        recovery: ``feedforward`` applies conditional Paulis, ``frame`` only
            tracks the correction in classical bits, ``none`` skips it.
        confirm: apply a round's correction only when its syndrome (per
            stabilizer type) repeats the previous round's, so that a single
            faulty or half-completed round never triggers a correction.
    """

    mode: str = "standard"
    readout: str = "sequential"
    rounds: int = 1
    verify: int = 2
    max_prep_attempts: int = 3
    swap_policy: bool = False
    recovery: str = "feedforward"
    confirm: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.readout not in READOUTS:
            raise ConfigError(f"unknown readout {self.readout!r}; expected one of {READOUTS}")
        if self.recovery not in RECOVERIES:
            raise ConfigError(f"unknown recovery {self.recovery!r}")
        if self.rounds < 1:
            raise ConfigError("rounds must be positive")
        if self.mode == "cat" and self.verify < 1:
            raise ConfigError("cat mode needs verify >= 1")
        if self.verify < 0:
            raise ConfigError("verify must be non-negative")
        if self.max_prep_attempts < 1:
            raise ConfigError("max_prep_attempts must be positive")
        if self.swap_policy and self.mode != "steane":
            raise ConfigError("swap_policy applies to steane mode only")

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, d: dict) -> SchedulerConfig:
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown scheduler keys {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class ExtractionOutcome:
    """Result of one extraction (tableau level).

    Attributes:
        syndrome: the syndrome used for decoding.
        accepted: verification passed within the allowed attempts.
        attempts_used: preparation attempts consumed.
        ancilla_metrics: ``prep_success_rate`` and ``verification_failures``.
    """

    syndrome: Syndrome
    accepted: bool
    attempts_used: int
    ancilla_metrics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PrepReport:
    """Outcome of :func:`run_prep_with_policy`."""

    attempts_used: int
    accepted: bool
    verification_failures: int
    prep_success_rate: float
    roles_exchanged: bool
    exhausted: bool


# helpers ---------------------------------------------------------------------------------

class _Prog:
    """Append-only emitter with an optional guard applied to every instruction."""

    def __init__(self, circ: Circuit):
        self.c = circ
        self.guard: tuple[int, bool] | None = None

    @contextmanager
    def guarded(self, bit: int | None, negate: bool = False):
        if bit is None:
            yield
            return
        if self.guard is not None:
            raise CircuitError("nested guard")
        self.guard = (bit, negate)
        try:
            yield
        finally:
            self.guard = None

    def __call__(self, op, qubits=(), clbits=(), arg=None, cond=None, negate=False):
        if self.guard is not None:
            if cond is not None:
                raise CircuitError("instruction already guarded inside a guarded block")
            cond, negate = self.guard
        self.c.append(op, qubits, clbits, arg, cond, negate)

    def bits(self, count: int, name: str | None = None) -> list[int]:
        return self.c.add_clbits(count, name)

    def xor(self, out: int, ins) -> None:
        self("XOR", (), (out, *ins))

    def orr(self, out: int, ins) -> None:
        self("OR", (), (out, *ins))


def decoder_tables(code: CssCode) -> dict[str, np.ndarray]:
    """Lookup tables for ``DECODE``: Z-syndrome to X-correction, X to Z, and both jointly."""
    mz, mx = code.n_z_checks, code.n_x_checks
    dz = code._x_table.copy()
    dx = code._z_table.copy()
    joint = np.zeros((2 ** (mz + mx), 2 * code.n), np.uint8)
    for s in range(2 ** (mz + mx)):
        joint[s, :code.n] = dz[s >> mx]
        joint[s, code.n:] = dx[s & ((1 << mx) - 1)]
    return {f"{code.name}_dz": dz, f"{code.name}_dx": dx, f"{code.name}_dzx": joint}


def _encoder_ops(code: CssCode) -> tuple[list[int], list[tuple[int, int]]]:
    """Pivot qubits and fan-out CNOTs preparing ``|0_L>``.

    Each row of ``rref(hx)`` contributes one H on its pivot and CNOTs from
    the pivot to the rest of the row, producing the uniform superposition over
    the X-check row space.  That state already satisfies every Z-check (CSS
    condition), so no further CNOTs are required.
    """
    if code.k != 1:
        raise ValueError("encoder supports k = 1 codes")
    red, pivots = gf2.rref(code.hx)
    cnots = []
    for row, p in zip(red, pivots):
        cnots.extend((p, int(q)) for q in np.flatnonzero(row) if q != p)
    return pivots, cnots


def _emit_encoder(p: _Prog, code: CssCode, block) -> None:
    pivots, cnots = _encoder_ops(code)
    if pivots:
        p("H", [block[q] for q in pivots])
    for a, b in cnots:
        p("CX", (block[a], block[b]))


def build_encoder(code: CssCode) -> Circuit:
    """Circuit on ``code.n`` qubits mapping ``|0...0>`` to ``|0_L>``.

    Raises:
        AssertionError: the construction fails the noiseless stabilizer check.
    """
    c = Circuit(code.n)
    c.registers["data"] = ("q", 0, code.n)
    _emit_encoder(_Prog(c), code, list(range(code.n)))
    t = run_tableau(c, 0, noisy=False).tableau
    rep = logical_state_check(t, code)
    if not rep.in_codespace or rep.logical_z != 1:
        raise AssertionError(f"encoder-construction-bug: {rep}")
    return c


def build_cat_prep(w: int, v: int = 0) -> Circuit:
    """H on ancilla 0 followed by the CNOT chain ``0 -> 1 -> ... -> w+v-1``."""
    if w < 2:
        raise ValueError("cat weight must be at least 2")
    if v < 0:
        raise ValueError("v must be non-negative")
    c = Circuit(w + v)
    c.registers["cat"] = ("q", 0, w)
    if v:
        c.registers["ver"] = ("q", w, w + v)
    c.append("H", (0,))
    for i in range(w + v - 1):
        c.append("CX", (i, i + 1))
    return c


# cat-state extraction ---------------------------------------------------------------------

def _cat_attempt(p: _Prog, core, ver) -> list[int]:
    """Prepare and verify one cat; returns the verification clbits."""
    chain = list(core) + list(ver)
    p("R", chain)
    p("H", (chain[0],))
    for a, b in zip(chain, chain[1:]):
        p("CX", (a, b))
    # peel the verification qubits off the cat, each keeping one adjacent parity
    for j in range(len(ver) - 1, 0, -1):
        p("CX", (ver[j - 1], ver[j]))
    p("CX", (core[0], ver[0]))
    bits = p.bits(len(ver))
    p("M", ver, bits)
    return bits


def _cat_couple(p: _Prog, stype: str, core, support, data) -> list[int]:
    """Interact a verified cat with the data; returns the core measurement bits."""
    if stype == "X":
        for a, q in zip(core, support):
            p("CX", (a, data[q]))
        p("H", core)
    else:
        p("H", core)
        for a, q in zip(core, support):
            p("CX", (data[q], a))
    bits = p.bits(len(core))
    p("M", core, bits)
    return bits


def _bare_extract(p: _Prog, stype: str, anc: int, support, data) -> int:
    """Single-ancilla extraction of one stabilizer; returns its clbit."""
    p("R", (anc,))
    if stype == "X":
        p("H", (anc,))
        for q in support:
            p("CX", (anc, data[q]))
        p("H", (anc,))
    else:
        for q in support:
            p("CX", (data[q], anc))
    b = p.bits(1)[0]
    p("M", (anc,), (b,))
    return b


def _cat_stabilizer(p: _Prog, stype: str, support, data, core, ver, attempts: int, tag: str):
    """Verified cat extraction with retries and bare-ancilla fallback.

    Returns:
        ``(syndrome_bit, raw_fail_flags, final_fail_flags)``; the flag lists
        hold one bit per attempt, set when that attempt ran and failed.
    """
    fails = p.bits(attempts, f"{tag}_g")
    p.c.registers[f"{tag}_f"] = p.c.registers[f"{tag}_g"]
    for j in range(attempts):
        with p.guarded(None if j == 0 else fails[j - 1]):
            vbits = _cat_attempt(p, core, ver)
            p.orr(fails[j], vbits)
    exhausted = fails[-1]
    syn = p.bits(1)[0]
    with p.guarded(exhausted, negate=True):
        mbits = _cat_couple(p, stype, core, support, data)
        p.xor(syn, mbits)
    with p.guarded(exhausted):
        fb = _bare_extract(p, stype, core[0], support, data)
        p.xor(syn, (fb,))
    return syn, fails, fails


def build_shor_extraction(code: CssCode, stab_index: int, stab_type: str, v: int = 2,
                          max_attempts: int = 1) -> Circuit:
    """Measure one stabilizer with a verified cat state.

    Qubits ``0..n-1`` are the data block, followed by the ``w`` core
    ancillas and the ``v`` verification ancillas.  Registers: ``syndrome``
    (one bit), ``prep_g`` (failure flag per attempt), ``core`` and ``ver``
    (measurement bits of the final attempt's ancillas).
    """
    if v < 1:
        raise ValueError("v must be at least 1")
    if stab_type not in ("X", "Z"):
        raise ValueError("stab_type must be 'X' or 'Z'")
    h = code.hx if stab_type == "X" else code.hz
    if not 0 <= stab_index < h.shape[0]:
        raise ValueError(f"no {stab_type}-stabilizer with index {stab_index}")
    support = np.flatnonzero(h[stab_index]).tolist()
    w = len(support)
    c = Circuit(0)
    data = c.add_qubits(code.n, "data")
    core = c.add_qubits(w, "core")
    ver = c.add_qubits(v, "ver")
    p = _Prog(c)
    syn, _, _ = _cat_stabilizer(p, stab_type, support, data, core, ver, max_attempts, "prep")
    c.registers["syndrome"] = ("c", syn, syn + 1)
    return c


# Steane encoded ancillas --------------------------------------------------------------------

def _steane_checks(code: CssCode, basis: str):
    """Verification checks for an ancilla block in check-measurement order.

    Each entry is ``(kind, support, slot)`` where ``slot`` is the position of
    the result in the ``[z checks, x checks, logical]`` bit layout.  The
    checks that could leave dangerous multi-qubit hooks run first so the
    later checks catch them: for ``|0_L>`` X-type checks go first, for
    ``|+_L>`` the Z-type checks.
    """
    mz, mx = code.n_z_checks, code.n_x_checks
    z = [("Z", np.flatnonzero(r).tolist(), i) for i, r in enumerate(code.hz)]
    x = [("X", np.flatnonzero(r).tolist(), mz + i) for i, r in enumerate(code.hx)]
    if basis == "zero_L":
        logical = ("Z", min_weight_logical(code, "Z").support, mz + mx)
        return x + z + [logical]
    logical = ("X", min_weight_logical(code, "X").support, mz + mx)
    return z + x + [logical]


def _emit_verify(p: _Prog, code: CssCode, basis: str, block, ver) -> list[int]:
    checks = _steane_checks(code, basis)
    bits = p.bits(len(checks))
    for kind, support, slot in checks:
        a = ver[slot]
        p("R", (a,))
        if kind == "X":
            p("H", (a,))
            for q in support:
                p("CX", (a, block[q]))
            p("H", (a,))
        else:
            for q in support:
                p("CX", (block[q], a))
        p("M", (a,), (bits[slot],))
    return bits


def _emit_block_prep(p: _Prog, code: CssCode, basis: str, block) -> None:
    p("R", block)
    _emit_encoder(p, code, block)
    if basis == "plus_L":
        p("H", block)


def _n_verify(code: CssCode) -> int:
    return code.n_z_checks + code.n_x_checks + 1


def build_steane_ancilla_prep(code: CssCode, basis: str = "zero_L") -> Circuit:
    """Encode an ancilla block in ``basis`` and measure its own checks.

    Qubits ``0..n-1`` form the block, the next ones are single verification
    ancillas.  Registers ``ver_z``, ``ver_x`` and ``ver_l`` hold the check
    outcomes; all are 0 for a noiseless run.
    """
    if basis not in ("zero_L", "plus_L"):
        raise ValueError("basis must be 'zero_L' or 'plus_L'")
    c = Circuit(0)
    block = c.add_qubits(code.n, "block")
    ver = c.add_qubits(_n_verify(code), "ver")
    p = _Prog(c)
    _emit_block_prep(p, code, basis, block)
    bits = _emit_verify(p, code, basis, block, ver)
    mz, mx = code.n_z_checks, code.n_x_checks
    c.registers["ver_z"] = ("c", bits[0], bits[0] + mz)
    c.registers["ver_x"] = ("c", bits[0] + mz, bits[0] + mz + mx)
    c.registers["ver_l"] = ("c", bits[0] + mz + mx, bits[0] + mz + mx + 1)
    return c


def _emit_transversal(p: _Prog, code: CssCode, data, anc, stab_type: str) -> tuple[list[int], list[int]]:
    """Transversal coupling, block readout and classical syndrome parities."""
    if stab_type == "Z":
        p("CX", [q for pair in zip(data, anc) for q in pair])
        h = code.hz
    else:
        p("CX", [q for pair in zip(anc, data) for q in pair])
        p("H", anc)
        h = code.hx
    m = p.bits(code.n)
    p("M", anc, m)
    syn = p.bits(h.shape[0])
    for r, row in enumerate(h):
        p.xor(syn[r], [m[i] for i in np.flatnonzero(row)])
    return m, syn


def build_steane_extraction(code: CssCode, data_block, anc_block, stab_type: str) -> Circuit:
    """Transversal extraction of all checks of one type.

    For ``Z`` the ancilla block must hold ``|+_L>``, for ``X`` it must hold
    ``|0_L>``; the caller prepares it.  Registers ``m`` (block readout) and
    ``syndrome`` (``h m mod 2``).
    """
    data_block, anc_block = list(data_block), list(anc_block)
    if len(data_block) != code.n or len(anc_block) != code.n:
        raise ValueError("both blocks must have n qubits")
    if set(data_block) & set(anc_block):
        raise ValueError("blocks must be disjoint")
    if stab_type not in ("X", "Z"):
        raise ValueError("stab_type must be 'X' or 'Z'")
    c = Circuit(max(data_block + anc_block) + 1)
    c.registers["data"] = ("q", min(data_block), max(data_block) + 1)
    c.registers["anc"] = ("q", min(anc_block), max(anc_block) + 1)
    m, syn = _emit_transversal(_Prog(c), code, data_block, anc_block, stab_type)
    c.registers["m"] = ("c", m[0], m[-1] + 1)
    c.registers["syndrome"] = ("c", syn[0], syn[-1] + 1)
    return c


def _steane_block(p: _Prog, code: CssCode, basis: str, block, ver, data, attempts: int,
                  swap_policy: bool, tag: str, tables: dict[str, str]):
    """Prepare a verified block with correct-and-reverify and retries.

    Returns:
        ``(raw_fail_flags, final_fail_flags)``, one bit per attempt.
    """
    raw = p.bits(attempts, f"{tag}_f")
    final = p.bits(attempts, f"{tag}_g")
    mz, mx = code.n_z_checks, code.n_x_checks
    for j in range(attempts):
        with p.guarded(None if j == 0 else final[j - 1]):
            _emit_block_prep(p, code, basis, block)
            vb = _emit_verify(p, code, basis, block, ver)
            p.orr(raw[j], vb)
            cx = p.bits(code.n)
            cz = p.bits(code.n)
            p("DECODE", (), (*cx, *vb[:mz]), tables["dz"])
            p("DECODE", (), (*cz, *vb[mz:mz + mx]), tables["dx"])
        for q, b in zip(block, cx):
            p("CPAULI", (q,), arg="X", cond=b)
        for q, b in zip(block, cz):
            p("CPAULI", (q,), arg="Z", cond=b)
        with p.guarded(raw[j]):
            vb2 = _emit_verify(p, code, basis, block, ver)
            p.orr(final[j], vb2)
    exhausted = final[-1]
    if swap_policy:
        with p.guarded(exhausted):
            _emit_swap(p, data, block)
            _emit_block_prep(p, code, basis, data)
            _emit_swap(p, data, block)
    return raw, final


def _emit_swap(p: _Prog, a, b) -> None:
    """Logical SWAP of two CSS blocks as three transversal CNOT layers."""
    p("CX", [q for pair in zip(a, b) for q in pair])
    p("CX", [q for pair in zip(b, a) for q in pair])
    p("CX", [q for pair in zip(a, b) for q in pair])


def run_prep_with_policy(code: CssCode, basis: str = "zero_L", max_attempts: int = 3,
                         swap_policy: bool = False, noise: NoiseModel | None = None, rng=None,
                         inject_each_attempt: PauliString | None = None):
    """Prepare a verified ancilla block on a tableau, one attempt at a time.

    The tableau holds a data block in ``|0_L>``, the ancilla block and the
    verification ancillas.  Each attempt encodes and verifies; a nonzero
    verification pattern is corrected by lookup and verified once more.
    When every attempt fails, ``swap_policy`` exchanges the blocks with a
    transversal logical SWAP (the former data block becomes the ancilla),
    otherwise the preparation is reported as exhausted.

    Args:
        code: a ``k = 1`` CSS code.
        basis: ``zero_L`` or ``plus_L``.
        max_attempts: attempts before giving up.
        swap_policy: swap roles on exhaustion.
        noise: noise model for the preparation gates (``None`` = noiseless).
        rng: seed or ``Generator``.
        inject_each_attempt: Pauli on the ancilla block applied right after
            every encoding (for testing the failure path).

    Returns:
        ``(PrepReport, tableau, layout)`` where ``layout`` maps ``data``,
        ``anc`` and ``ver`` to qubit lists after any role exchange.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = code.n
    nv = _n_verify(code)
    width = 2 * n + nv
    data, anc, ver = list(range(n)), list(range(n, 2 * n)), list(range(2 * n, width))
    tables = decoder_tables(code)

    def frag(build) -> Circuit:
        c = Circuit(width, 0, tables=dict(tables))
        build(_Prog(c))
        return instrument(c, noise) if noise is not None else c

    t = StabilizerTableau(width, rng)
    run_tableau(frag(lambda p: _emit_encoder(p, code, data)), rng, noisy=False, tableau=t)

    prep = frag(lambda p: _emit_block_prep(p, code, basis, anc))
    verify_c = frag(lambda p: _emit_verify(p, code, basis, anc, ver))
    mz, mx = code.n_z_checks, code.n_x_checks
    failures = attempts = 0
    accepted = False
    for attempts in range(1, max_attempts + 1):
        run_tableau(prep, rng, tableau=t, t1_us=_t1(noise), t2_us=_t2(noise))
        if inject_each_attempt is not None:
            t.apply_pauli(_embed_block(inject_each_attempt, width, anc))
        bits = run_tableau(verify_c, rng, tableau=t, t1_us=_t1(noise), t2_us=_t2(noise)).clbits
        if not bits.any():
            accepted = True
            break
        failures += 1
        corr = PauliString(code.correction_x(bits[:mz]), code.correction_z(bits[mz:mz + mx]))
        t.apply_pauli(_embed_block(corr, width, anc))
        bits = run_tableau(verify_c, rng, tableau=t, t1_us=_t1(noise), t2_us=_t2(noise)).clbits
        if not bits.any():
            accepted = True
            break
    roles = False
    if not accepted and swap_policy:
        swap = frag(lambda p: _emit_swap(p, data, anc))
        run_tableau(swap, rng, tableau=t, t1_us=_t1(noise), t2_us=_t2(noise))
        data, anc = anc, data
        roles = True
    report = PrepReport(
        attempts_used=attempts,
        accepted=accepted,
        verification_failures=failures,
        prep_success_rate=int(accepted) / attempts,
        roles_exchanged=roles,
        exhausted=not accepted,
    )
    return report, t, {"data": data, "anc": anc, "ver": ver}


def _t1(noise):
    return noise.t1_us if noise is not None else 100.0


def _t2(noise):
    return noise.t2_us if noise is not None else 80.0


def _embed_block(p: PauliString, width: int, block) -> PauliString:
    x = np.zeros(width, np.uint8)
    z = np.zeros(width, np.uint8)
    x[list(block)] = p.x
    z[list(block)] = p.z
    return PauliString(x, z, p.sign)


# the cycle scheduler --------------------------------------------------------------------------

def _emit_recovery(p: _Prog, code: CssCode, data, kind: str, syn, tables, recovery, frame,
                   prev=None) -> None:
    """Decode ``syn`` and apply (or track) the correction.

    ``kind`` is ``"Z"`` (Z-syndrome -> X correction), ``"X"`` or ``"ZX"``
    (joint decode of both).  With ``prev`` (the previous round's bits for
    the same checks) nothing is corrected unless the syndrome repeats.
    """
    if recovery == "none":
        return
    n = code.n
    nz = code.n_z_checks
    if kind == "ZX":
        parts = [("Z", list(syn[:nz])), ("X", list(syn[nz:]))]
        refs = None if prev is None else [list(prev[:nz]), list(prev[nz:])]
    else:
        parts = [(kind, list(syn))]
        refs = None if prev is None else [list(prev)]
    out = []
    for i, (k, s) in enumerate(parts):
        if recovery == "frame":
            # subtract the syndrome of the correction already tracked in the frame
            h = code.hz if k == "Z" else code.hx
            fr = frame["x"] if k == "Z" else frame["z"]
            adj = p.bits(len(s))
            for r, row in enumerate(h):
                p.xor(adj[r], [s[r]] + [fr[j] for j in np.flatnonzero(row)])
        else:
            adj = s
        if refs is not None:
            diff = p.bits(len(s))
            for d, a, b in zip(diff, s, refs[i]):
                p.xor(d, (a, b))
            same = p.bits(1)[0]
            p("OR", (), (same, *diff))
            p("NOT", (), (same, same))
            gated = p.bits(len(s))
            for g, a in zip(gated, adj):
                p("AND", (), (g, a, same))
            adj = gated
        out.append((k, adj))
    if kind == "ZX":
        cx, cz = p.bits(n), p.bits(n)
        p("DECODE", (), (*cx, *cz, *out[0][1], *out[1][1]), tables["dzx"])
        corr = {"X": cx, "Z": cz}
    else:
        c = p.bits(n)
        p("DECODE", (), (*c, *out[0][1]), tables["dz" if kind == "Z" else "dx"])
        corr = {"X" if kind == "Z" else "Z": c}
    for letter, bits in corr.items():
        if recovery == "feedforward":
            for q, b in zip(data, bits):
                p("CPAULI", (q,), arg=letter, cond=b)
        else:
            fr = frame["x"] if letter == "X" else frame["z"]
            for f, b in zip(fr, bits):
                p.xor(f, (f, b))


def _allocate(c: Circuit, code: CssCode, cfg: SchedulerConfig) -> dict:
    data = c.add_qubits(code.n, "data")
    lay = {"data": data}
    zs = [np.flatnonzero(r).tolist() for r in code.hz]
    xs = [np.flatnonzero(r).tolist() for r in code.hx]
    start = c.n_qubits
    if cfg.mode == "standard":
        lay["anc_z"] = c.add_qubits(len(zs))
        lay["anc_x"] = c.add_qubits(len(xs))
    elif cfg.mode == "cat":
        lay["core_z"] = [c.add_qubits(len(s)) for s in zs]
        lay["core_x"] = [c.add_qubits(len(s)) for s in xs]
        lay["ver"] = [c.add_qubits(cfg.verify) for _ in range(max(len(zs), len(xs)))]
    else:
        if not np.array_equal(code.hz.shape, code.hx.shape):
            raise ConfigError("steane mode needs matching X and Z check counts")
        lay["blk_plus"] = c.add_qubits(code.n, "anc_plus")
        lay["blk_zero"] = c.add_qubits(code.n, "anc_zero")
        lay["ver"] = c.add_qubits(_n_verify(code), "ver")
    c.registers["anc"] = ("q", start, c.n_qubits)
    return lay


LAYER_GATES = ("X", "Z", "H", "S")
T_SITE = "tsite"


def schedule_cycle(code: CssCode, config: SchedulerConfig,
                   interleave: dict[int, list[str]] | None = None) -> Circuit:
    """``T`` rounds of extraction plus decoding for the data block on qubits ``0..n-1``.

    The data block is assumed to start in the code space; callers prepend an
    encoder.  Per round ``k`` the circuit defines ``syn_r{k}`` (Z-check bits
    then X-check bits), preparation flag registers ``prep_r{k}_*_f`` (raw
    verification failure per attempt) and ``prep_r{k}_*_g`` (final failure
    per attempt), and a labelled ``TICK r{k}`` at the start of the round
    (``TICK end`` after the last).  Recovery ``frame`` adds registers
    ``frame_x`` and ``frame_z``.

    Args:
        code: a ``k = 1`` CSS code.
        config: scheduler settings.
        interleave: ``round -> layers`` emitted after that round's recovery.
            A layer is a transversal gate letter from ``LAYER_GATES`` or
            ``"T"``, which leaves a ``TICK tsite`` marker where a T-gate
            noise location belongs (see :func:`splice_t_sites`).

    Raises:
        ConfigError: the configuration cannot be realized for this code.
    """
    if code.k != 1:
        raise ConfigError("the scheduler supports k = 1 codes")
    cfg = config
    c = Circuit(0)
    lay = _allocate(c, code, cfg)
    names = {k: c.add_table(k, v) for k, v in decoder_tables(code).items()}
    tables = {k.rsplit("_", 1)[1]: k for k in names}
    p = _Prog(c)
    data = lay["data"]
    frame = None
    if cfg.recovery == "frame":
        frame = {"x": p.bits(code.n, "frame_x"), "z": p.bits(code.n, "frame_z")}
    zs = [np.flatnonzero(r).tolist() for r in code.hz]
    xs = [np.flatnonzero(r).tolist() for r in code.hx]
    # all-zero bits stand in for the round before the first one
    prev = p.bits(len(zs) + len(xs)) if cfg.confirm else None

    def recover(kind, bits):
        if prev is None:
            ref = None
        elif kind == "Z":
            ref = prev[:len(zs)]
        elif kind == "X":
            ref = prev[len(zs):]
        else:
            ref = prev
        _emit_recovery(p, code, data, kind, bits, tables, cfg.recovery, frame, ref)

    for r in range(cfg.rounds):
        p("TICK", arg=f"r{r}")
        syn = p.bits(len(zs) + len(xs), f"syn_r{r}")
        syn_z, syn_x = syn[:len(zs)], syn[len(zs):]
        if cfg.mode == "standard":
            for i, s in enumerate(zs):
                b = _bare_extract(p, "Z", lay["anc_z"][i], s, data)
                p.xor(syn_z[i], (b,))
            if cfg.readout == "sequential":
                recover("Z", syn_z)
            for i, s in enumerate(xs):
                b = _bare_extract(p, "X", lay["anc_x"][i], s, data)
                p.xor(syn_x[i], (b,))
        elif cfg.mode == "cat":
            for i, s in enumerate(zs):
                b, _, _ = _cat_stabilizer(p, "Z", s, data, lay["core_z"][i], lay["ver"][i],
                                          cfg.max_prep_attempts, f"prep_r{r}_z{i}")
                p.xor(syn_z[i], (b,))
            if cfg.readout == "sequential":
                recover("Z", syn_z)
            for i, s in enumerate(xs):
                b, _, _ = _cat_stabilizer(p, "X", s, data, lay["core_x"][i], lay["ver"][i],
                                          cfg.max_prep_attempts, f"prep_r{r}_x{i}")
                p.xor(syn_x[i], (b,))
        else:
            _steane_round(p, code, cfg, lay, r, syn_z, syn_x, recover)
        if cfg.readout == "sequential":
            recover("X", syn_x)
        else:
            recover("ZX", syn)
        prev = syn if prev is not None else None
        for layer in (interleave or {}).get(r, []):
            if layer == "T":
                p("TICK", arg=T_SITE)
            elif layer in LAYER_GATES:
                p(layer, data)
            else:
                raise ConfigError(f"unknown layer {layer!r}")
    p("TICK", arg="end")
    return c


def splice_t_sites(c: Circuit, p: float, qubits) -> Circuit:
    """Replace every ``TICK tsite`` marker by a ``NOISE1(p)`` site on ``qubits``."""
    out = c.copy()
    out.instructions = []
    for ins in c.instructions:
        if ins.op == "TICK" and ins.arg == T_SITE:
            out.append("NOISE1", qubits, arg=p)
        else:
            out.instructions.append(ins)
    return out


def _steane_round(p, code, cfg, lay, r, syn_z, syn_x, recover) -> None:
    tables = {k.rsplit("_", 1)[1]: k for k in p.c.tables}
    data, ver = lay["data"], lay["ver"]
    zs = [np.flatnonzero(row).tolist() for row in code.hz]
    xs = [np.flatnonzero(row).tolist() for row in code.hx]
    for basis, blk, stype, syn, tag in (
        ("plus_L", lay["blk_plus"], "Z", syn_z, f"prep_r{r}_plus"),
        ("zero_L", lay["blk_zero"], "X", syn_x, f"prep_r{r}_zero"),
    ):
        _, final = _steane_block(p, code, basis, blk, ver, data, cfg.max_prep_attempts,
                                 cfg.swap_policy, tag, tables)
        exhausted = final[-1]
        guard = None if cfg.swap_policy else exhausted
        with p.guarded(guard, negate=True):
            _, s = _emit_transversal(p, code, data, blk, stype)
            for i, b in enumerate(s):
                p.xor(syn[i], (b,))
        if not cfg.swap_policy:
            with p.guarded(exhausted):
                for i, sup in enumerate(zs if stype == "Z" else xs):
                    b = _bare_extract(p, stype, ver[i], sup, data)
                    p.xor(syn[i], (b,))
        if stype == "Z" and cfg.readout == "sequential":
            recover("Z", syn_z)


def memory_circuit(code: CssCode, config: SchedulerConfig, noise: NoiseModel | None = None,
                   interleave: dict[int, list[str]] | None = None) -> Circuit:
    """Noiseless encoder followed by the (optionally instrumented) extraction cycle.

    The register and table metadata of the cycle is kept; instruction
    indices of the cycle are shifted by the encoder length.  T-site markers
    from ``interleave`` become ``NOISE1`` sites at the model's ``gate1`` rate.
    """
    cyc = schedule_cycle(code, config, interleave)
    if noise is not None:
        cyc = instrument(cyc, noise)
        cyc = splice_t_sites(cyc, noise.rate("gate1"), range(code.n))
    enc = build_encoder(code)
    out = Circuit(cyc.n_qubits, cyc.n_clbits, registers=dict(cyc.registers),
                  tables={k: v.copy() for k, v in cyc.tables.items()})
    out.extend(enc)
    out.extend(cyc)
    out.instrumented = cyc.instrumented
    return out


def prep_statistics(circuit: Circuit, clbits: np.ndarray) -> dict | None:
    """Ancilla-preparation counts from the ``prep_*`` flag registers.

    Attempt ``j`` of a block runs when attempt ``j - 1`` finally failed, so
    per block and shot the attempts used are ``1 + sum(g[:-1])`` and the
    passes are ``attempts - sum(g)``.  The success rate is total passes over
    total attempts.
    """
    finals = sorted(k for k in circuit.registers if re.fullmatch(r"prep_.*_g", k))
    if not finals:
        return None
    attempts = passes = raw = 0
    for name in finals:
        g = clbits[circuit.register(name)].astype(np.int64)
        f = clbits[circuit.register(name[:-1] + "f")].astype(np.int64)
        used = 1 + g[:-1].sum(axis=0)
        attempts += int(used.sum())
        passes += int((used - g.sum(axis=0)).sum())
        raw += int(f.sum())
    return {"attempts": attempts, "passes": passes, "verification_failures": raw,
            "prep_success_rate": passes / attempts}


def run_extraction(code: CssCode, mode: str = "standard", *, error: PauliString | None = None,
                   noise: NoiseModel | None = None, seed=None, verify: int = 2,
                   max_prep_attempts: int = 3, swap_policy: bool = False) -> ExtractionOutcome:
    """One extraction round on an exactly simulated ``|0_L>`` data block.

    Args:
        code: the code.
        mode: extraction mode.
        error: Pauli on the data block applied after encoding.
        noise: noise model for the extraction (``None`` = noiseless).
        seed: seed for measurement randomness and noise.
        verify: cat verification ancillas.
        max_prep_attempts: preparation attempts per ancilla.
        swap_policy: steane-mode swap policy.

    Returns:
        The round's syndrome with acceptance and preparation metrics.
        ``accepted`` is false when some ancilla ran out of attempts and the
        syndrome bits came from the bare-ancilla fallback.
    """
    cfg = SchedulerConfig(mode=mode, rounds=1, verify=verify, max_prep_attempts=max_prep_attempts,
                          swap_policy=swap_policy, recovery="none")
    cyc = schedule_cycle(code, cfg)
    if noise is not None:
        cyc = instrument(cyc, noise)
    rng = np.random.default_rng(seed)
    t = StabilizerTableau(cyc.n_qubits, rng)
    run_tableau(build_encoder(code), rng, noisy=False, tableau=t)
    if error is not None:
        t.apply_pauli(_embed_block(error, cyc.n_qubits, range(code.n)))
    kw = {} if noise is None else {"t1_us": noise.t1_us, "t2_us": noise.t2_us}
    clb = run_tableau(cyc, rng, tableau=t, **kw).clbits
    syn = clb[cyc.register("syn_r0")]
    stats = prep_statistics(cyc, clb[:, None])
    finals = [k for k in cyc.registers if re.fullmatch(r"prep_.*_g", k)]
    exhausted = any(clb[cyc.register(k)[-1]] for k in finals)
    nz = code.n_z_checks
    return ExtractionOutcome(
        syndrome=Syndrome(tuple(int(b) for b in syn[:nz]), tuple(int(b) for b in syn[nz:])),
        accepted=not exhausted,
        attempts_used=1 if stats is None else stats["attempts"],
        ancilla_metrics={
            "prep_success_rate": 1.0 if stats is None else stats["prep_success_rate"],
            "verification_failures": 0 if stats is None else stats["verification_failures"],
        },
    )
