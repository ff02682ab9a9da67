"""Circuit execution: exact per-shot tableau runs and batched Pauli-frame sampling.

The frame sampler runs the circuit once, noiselessly, on a tableau (the
*reference*), then tracks for every shot only the Pauli difference between
that shot and the reference.  Frames for a batch of shots are boolean arrays
of shape ``(n_qubits, shots)`` so every gate is a handful of vectorized row
operations.

Guarded instructions act on the frames of the shots whose guard holds.  The
reference executes guarded gates, measurements and resets unconditionally, so
guarded blocks must leave the noiseless state unchanged or act only on qubits
that are reset before their next use (see :mod:`hft.circuit`).

Shots are processed in chunks of ``CHUNK`` with one random stream per chunk,
seeded by ``(seed, chunk_index)``; results do not depend on the number of
worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, CircuitError
from .noise import (
    idle_pauli_probs,
    sample_1q_codes,
    sample_2q_codes,
    sample_pxyz_codes,
)
from .tableau import StabilizerTableau

CHUNK = 16384
_X_OF = np.array([0, 1, 1, 0], dtype=bool)  # I X Y Z
_Z_OF = np.array([0, 0, 1, 1], dtype=bool)
_CODE = {"I": 0, "X": 1, "Y": 2, "Z": 3}


def _table_inputs(table: np.ndarray) -> int:
    return int(np.log2(table.shape[0]))


def _classical(op: str, vals: list):
    if op == "XOR":
        out = vals[0]
        for v in vals[1:]:
            out = out ^ v
        return out
    if op == "AND":
        out = vals[0]
        for v in vals[1:]:
            out = out & v
        return out
    if op == "OR":
        out = vals[0]
        for v in vals[1:]:
            out = out | v
        return out
    if op == "NOT":
        return ~vals[0] if isinstance(vals[0], np.ndarray) else (not vals[0])
    raise CircuitError(f"not a logic op: {op}")


# exact per-shot execution ------------------------------------------------------------------

@dataclass
class TableauRun:
    """Outcome of one exact run: classical record and final state."""

    clbits: np.ndarray
    tableau: StabilizerTableau


def run_tableau(circuit: Circuit, seed=None, *, noisy: bool = True, t1_us: float = 100.0,
                t2_us: float = 80.0, inject: dict | None = None, tableau=None,
                guard_trace: dict | None = None) -> TableauRun:
    """Execute ``circuit`` exactly on one tableau, honoring guards.

    Args:
        circuit: possibly instrumented circuit.
        seed: seed or ``Generator`` for measurement randomness and noise.
        noisy: sample noise sites (otherwise they are skipped).
        t1_us: relaxation time used for ``IDLE`` sites.
        t2_us: dephasing time used for ``IDLE`` sites.
        inject: ``{instruction_index: {qubit: letter}}`` faults applied at
            noise sites (letters ``I X Y Z``; for ``NOISEM`` ``X`` flips the record).
        tableau: start from this state instead of ``|0...0>``.
        guard_trace: if given, filled with ``{instruction_index: taken}``
            for every guarded instruction.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    t = tableau if tableau is not None else StabilizerTableau(circuit.n_qubits, rng)
    t.rng = rng
    clb = np.zeros(circuit.n_clbits, dtype=bool)
    pending = np.zeros(circuit.n_qubits, dtype=bool)
    inject = inject or {}

    def pauli(q, code):
        if code == 1:
            t.pauli_x(q)
        elif code == 2:
            t.pauli_y(q)
        elif code == 3:
            t.pauli_z(q)

    for idx, ins in enumerate(circuit.instructions):
        if ins.cond is not None:
            taken = bool(clb[ins.cond]) != ins.negate
            if guard_trace is not None:
                guard_trace[idx] = taken
            if not taken:
                continue
        op, qs = ins.op, ins.qubits
        if op == "H":
            for q in qs:
                t.h(q)
        elif op == "S":
            for q in qs:
                t.s(q)
        elif op in ("X", "Y", "Z"):
            for q in qs:
                pauli(q, _CODE[op])
        elif op == "CPAULI":
            for q in qs:
                pauli(q, _CODE[ins.arg])
        elif op == "CX":
            for a, b in zip(qs[::2], qs[1::2]):
                t.cx(a, b)
        elif op == "M":
            for q, c in zip(qs, ins.clbits):
                clb[c] = bool(t.measure(q)) ^ pending[q]
                pending[q] = False
        elif op == "R":
            for q in qs:
                t.reset(q)
                pending[q] = False
        elif op in ("XOR", "AND", "OR", "NOT"):
            n_out = 1 if ins.arg is None else int(ins.arg)
            outs, ins_ = ins.clbits[:n_out], ins.clbits[n_out:]
            clb[outs[0]] = _classical(op, [bool(clb[i]) for i in ins_])
        elif op == "DECODE":
            table = circuit.tables[ins.arg]
            k = _table_inputs(table)
            m = table.shape[1]
            outs, srcs = ins.clbits[:m], ins.clbits[m:]
            row = 0
            for s in srcs:
                row = (row << 1) | int(clb[s])
            clb[list(outs)] = table[row].astype(bool)
            assert len(srcs) == k
        elif ins.is_noise:
            if idx in inject:
                for q, letter in inject[idx].items():
                    if op == "NOISEM":
                        pending[q] ^= letter != "I"
                    else:
                        pauli(q, _CODE[letter])
                continue
            if not noisy:
                continue
            if op == "NOISE1":
                for q in qs:
                    pauli(q, int(sample_1q_codes(ins.arg, (), rng)))
            elif op == "NOISE2":
                for a, b in zip(qs[::2], qs[1::2]):
                    code = int(sample_2q_codes(ins.arg, (), rng))
                    pauli(a, code >> 2)
                    pauli(b, code & 3)
            elif op == "NOISEM":
                for q in qs:
                    pending[q] ^= rng.random() < ins.arg
            elif op == "IDLE":
                px, py, pz = idle_pauli_probs(ins.arg, t1_us, t2_us)
                for q in qs:
                    pauli(q, int(sample_pxyz_codes(px, py, pz, (), rng)))
    return TableauRun(clb, t)


# frame sampling ------------------------------------------------------------------------------

@dataclass
class FrameResult:
    """Per-shot classical record and final Pauli frames.

    Attributes:
        clbits: ``(n_clbits, shots)`` actual classical values.
        fx: ``(n_qubits, shots)`` X part of each shot's deviation from the reference.
        fz: ``(n_qubits, shots)`` Z part.
        snapshots: ``label -> (fx, fz)`` copies taken at labelled ``TICK`` s.
    """

    clbits: np.ndarray
    fx: np.ndarray
    fz: np.ndarray
    snapshots: dict = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return int(self.clbits.shape[1])


class FrameSimulator:
    """Batched Pauli-frame sampler for a fixed circuit.

    Args:
        circuit: circuit to sample, usually instrumented.
        t1_us: relaxation time for ``IDLE`` sites.
        t2_us: dephasing time for ``IDLE`` sites.
    """

    def __init__(self, circuit: Circuit, t1_us: float = 100.0, t2_us: float = 80.0):
        self.circuit = circuit
        self.t1_us = t1_us
        self.t2_us = t2_us
        self._idle_cache: dict[float, tuple[float, float, float]] = {}
        self._reference()

    # reference run --------------------------------------------------------------------
    def _reference(self) -> None:
        """Noiseless tableau run; guarded quantum ops are executed speculatively."""
        c = self.circuit
        t = StabilizerTableau(c.n_qubits, 0)
        clb = np.zeros(c.n_clbits, dtype=bool)
        self.ref_meas: dict[int, np.ndarray] = {}
        self.ref_applied: dict[int, bool] = {}
        for idx, ins in enumerate(c.instructions):
            op, qs = ins.op, ins.qubits
            guard = True if ins.cond is None else bool(clb[ins.cond]) != ins.negate
            if op == "H":
                for q in qs:
                    t.h(q)
            elif op == "S":
                for q in qs:
                    t.s(q)
            elif op in ("X", "Y", "Z", "CPAULI"):
                letter = ins.arg if op == "CPAULI" else op
                self.ref_applied[idx] = guard
                if guard:
                    for q in qs:
                        {"X": t.pauli_x, "Y": t.pauli_y, "Z": t.pauli_z}[letter](q)
            elif op == "CX":
                for a, b in zip(qs[::2], qs[1::2]):
                    t.cx(a, b)
            elif op == "M":
                outs = np.array([t.measure(q, forced=0) for q in qs], dtype=bool)
                self.ref_meas[idx] = outs
                if guard:
                    clb[list(ins.clbits)] = outs
            elif op == "R":
                for q in qs:
                    t.reset(q)
            elif op in ("XOR", "AND", "OR", "NOT") and guard:
                n_out = 1 if ins.arg is None else int(ins.arg)
                clb[ins.clbits[0]] = _classical(op, [bool(clb[i]) for i in ins.clbits[n_out:]])
            elif op == "DECODE" and guard:
                table = c.tables[ins.arg]
                m = table.shape[1]
                row = 0
                for s in ins.clbits[m:]:
                    row = (row << 1) | int(clb[s])
                clb[list(ins.clbits[:m])] = table[row].astype(bool)
        self.ref_tableau = t
        self.ref_clbits = clb

    def _idle(self, dt: float):
        if dt not in self._idle_cache:
            self._idle_cache[dt] = idle_pauli_probs(dt, self.t1_us, self.t2_us)
        return self._idle_cache[dt]

    # batch execution ---------------------------------------------------------------------
    def _run_chunk(self, n: int, rng: np.random.Generator, noisy: bool, gauge: bool,
                   inject: dict | None, snap_labels, snap_qubits) -> FrameResult:
        c = self.circuit
        fx = np.zeros((c.n_qubits, n), dtype=bool)
        fz = np.zeros((c.n_qubits, n), dtype=bool)
        if gauge:
            fz[:] = rng.random((c.n_qubits, n)) < 0.5
        pending = np.zeros((c.n_qubits, n), dtype=bool)
        clb = np.zeros((c.n_clbits, n), dtype=bool)
        snaps = {}

        def apply_codes(q, codes, mask):
            xs = _X_OF[codes]
            zs = _Z_OF[codes]
            if mask is not None:
                xs &= mask
                zs &= mask
            fx[q] ^= xs
            fz[q] ^= zs

        for idx, ins in enumerate(c.instructions):
            op, qs = ins.op, ins.qubits
            mask = None
            if ins.cond is not None:
                mask = clb[ins.cond] ^ ins.negate if ins.negate else clb[ins.cond].copy()
                if op not in ("CPAULI", "X", "Y", "Z") and not mask.any():
                    continue
            if op == "CX":
                for a, b in zip(qs[::2], qs[1::2]):
                    if mask is None:
                        fx[b] ^= fx[a]
                        fz[a] ^= fz[b]
                    else:
                        fx[b] ^= fx[a] & mask
                        fz[a] ^= fz[b] & mask
            elif op == "H":
                for q in qs:
                    if mask is None:
                        fx[q], fz[q] = fz[q].copy(), fx[q].copy()
                    else:
                        nx = np.where(mask, fz[q], fx[q])
                        fz[q] = np.where(mask, fx[q], fz[q])
                        fx[q] = nx
            elif op == "S":
                for q in qs:
                    fz[q] ^= fx[q] if mask is None else fx[q] & mask
            elif op in ("X", "Y", "Z", "CPAULI"):
                if ins.cond is None:
                    continue
                letter = ins.arg if op == "CPAULI" else op
                diff = mask ^ self.ref_applied[idx]
                code = _CODE[letter]
                for q in qs:
                    if _X_OF[code]:
                        fx[q] ^= diff
                    if _Z_OF[code]:
                        fz[q] ^= diff
            elif op == "M":
                ref = self.ref_meas[idx]
                for q, cb, r in zip(qs, ins.clbits, ref):
                    out = fx[q] ^ pending[q]
                    if r:
                        out = ~out
                    if mask is None:
                        clb[cb] = out
                        pending[q] = False
                        if gauge:
                            fz[q] ^= rng.random(n) < 0.5
                    else:
                        clb[cb] = np.where(mask, out, clb[cb])
                        pending[q] &= ~mask
                        if gauge:
                            fz[q] ^= (rng.random(n) < 0.5) & mask
            elif op == "R":
                for q in qs:
                    if mask is None:
                        fx[q] = False
                        pending[q] = False
                        fz[q] = (rng.random(n) < 0.5) if gauge else False
                    else:
                        fx[q] &= ~mask
                        pending[q] &= ~mask
                        fz[q] &= ~mask
                        if gauge:
                            fz[q] |= (rng.random(n) < 0.5) & mask
            elif op in ("XOR", "AND", "OR", "NOT"):
                n_out = 1 if ins.arg is None else int(ins.arg)
                val = _classical(op, [clb[i] for i in ins.clbits[n_out:]])
                o = ins.clbits[0]
                clb[o] = val if mask is None else np.where(mask, val, clb[o])
            elif op == "DECODE":
                table = c.tables[ins.arg].astype(bool)
                m = table.shape[1]
                row = np.zeros(n, dtype=np.int64)
                for s in ins.clbits[m:]:
                    row = (row << 1) | clb[s]
                vals = table[row].T
                outs = list(ins.clbits[:m])
                clb[outs] = vals if mask is None else np.where(mask, vals, clb[outs])
            elif op == "TICK":
                if ins.arg is not None and ins.arg in snap_labels:
                    sq = snap_qubits if snap_qubits is not None else slice(None)
                    snaps[ins.arg] = (fx[sq].copy(), fz[sq].copy())
            elif ins.is_noise:
                if inject is not None:
                    hits = inject.get(idx)
                    if hits:
                        for q, shots, codes in hits:
                            if mask is not None:
                                live = mask[shots]
                                shots, codes = shots[live], codes[live]
                            if op == "NOISEM":
                                pending[q, shots] ^= codes != 0
                            else:
                                fx[q, shots] ^= _X_OF[codes]
                                fz[q, shots] ^= _Z_OF[codes]
                    continue
                if not noisy:
                    continue
                if op == "NOISE1":
                    codes = sample_1q_codes(ins.arg, (len(qs), n), rng)
                    for i, q in enumerate(qs):
                        apply_codes(q, codes[i], mask)
                elif op == "NOISE2":
                    codes = sample_2q_codes(ins.arg, (len(qs) // 2, n), rng)
                    for i in range(len(qs) // 2):
                        apply_codes(qs[2 * i], codes[i] >> 2, mask)
                        apply_codes(qs[2 * i + 1], codes[i] & 3, mask)
                elif op == "NOISEM":
                    flips = rng.random((len(qs), n)) < ins.arg
                    for i, q in enumerate(qs):
                        pending[q] ^= flips[i] if mask is None else flips[i] & mask
                elif op == "IDLE":
                    px, py, pz = self._idle(ins.arg)
                    codes = sample_pxyz_codes(px, py, pz, (len(qs), n), rng)
                    for i, q in enumerate(qs):
                        apply_codes(q, codes[i], mask)
        return FrameResult(clb, fx, fz, snaps)

    def sample(self, shots: int, seed: int = 0, *, noisy: bool = True, gauge: bool = True,
               threads: int = 1, snapshot_labels=(), snapshot_qubits=None,
               chunk: int = CHUNK) -> FrameResult:
        """Sample ``shots`` noisy shots.

        Args:
            shots: number of shots.
            seed: master seed; chunk ``i`` uses ``SeedSequence([seed, i])``.
            noisy: sample noise sites.
            gauge: randomize frames by stabilizers of the current state, which
                reproduces the true distribution of random measurement outcomes.
            threads: worker threads (results are independent of this value).
            snapshot_labels: ``TICK`` labels at which frames are copied.
            snapshot_qubits: restrict snapshots to these qubits.
            chunk: shots per chunk.
        """
        if shots < 1:
            raise ValueError("shots must be positive")
        sizes = [min(chunk, shots - i) for i in range(0, shots, chunk)]
        labels = set(snapshot_labels)

        def work(i):
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
            return self._run_chunk(sizes[i], rng, noisy, gauge, None, labels, snapshot_qubits)

        if threads > 1 and len(sizes) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(work, range(len(sizes))))
        else:
            parts = [work(i) for i in range(len(sizes))]
        return _concat(parts)

    def inject(self, faults: list[tuple[int, dict[int, str]]], snapshot_labels=(),
               snapshot_qubits=None) -> FrameResult:
        """One shot per fault, no random noise, no gauge randomization.

        Args:
            faults: ``(instruction_index, {qubit: letter})`` per shot; the
                instruction must be a noise site.
        """
        n = len(faults)
        if n == 0:
            raise ValueError("no faults given")
        table: dict[int, dict[int, tuple[list, list]]] = {}
        for shot, (idx, paulis) in enumerate(faults):
            if not self.circuit.instructions[idx].is_noise:
                raise CircuitError(f"instruction {idx} is not a noise site")
            for q, letter in paulis.items():
                s, cds = table.setdefault(idx, {}).setdefault(q, ([], []))
                s.append(shot)
                cds.append(_CODE[letter])
        inj = {
            idx: [(q, np.array(s), np.array(cds, dtype=np.uint8)) for q, (s, cds) in per_q.items()]
            for idx, per_q in table.items()
        }
        rng = np.random.default_rng(0)
        return self._run_chunk(n, rng, False, False, inj, set(snapshot_labels), snapshot_qubits)


def _concat(parts: list[FrameResult]) -> FrameResult:
    if len(parts) == 1:
        return parts[0]
    snaps = {}
    for label in parts[0].snapshots:
        snaps[label] = (
            np.concatenate([p.snapshots[label][0] for p in parts], axis=1),
            np.concatenate([p.snapshots[label][1] for p in parts], axis=1),
        )
    return FrameResult(
        np.concatenate([p.clbits for p in parts], axis=1),
        np.concatenate([p.fx for p in parts], axis=1),
        np.concatenate([p.fz for p in parts], axis=1),
        snaps,
    )


def fault_locations(circuit: Circuit, start: int = 0, stop: int | None = None,
                    qubits=None) -> list[tuple[int, dict[int, str]]]:
    """Every single Pauli fault at every noise site in ``[start, stop)``.

    ``NOISE1``/``IDLE`` sites give X, Y, Z per qubit, ``NOISE2`` the 15
    non-identity pairs, ``NOISEM`` one record flip per qubit.  ``qubits``
    restricts the sites considered to those touching the given qubits.
    """
    stop = len(circuit.instructions) if stop is None else stop
    keep = None if qubits is None else set(qubits)
    out = []
    for idx in range(start, stop):
        ins = circuit.instructions[idx]
        if not ins.is_noise:
            continue
        if ins.op == "NOISE2":
            for a, b in zip(ins.qubits[::2], ins.qubits[1::2]):
                if keep is not None and not ({a, b} & keep):
                    continue
                for la in "IXYZ":
                    for lb in "IXYZ":
                        if la == lb == "I":
                            continue
                        out.append((idx, {a: la, b: lb}))
        else:
            letters = "X" if ins.op == "NOISEM" else "XYZ"
            for q in ins.qubits:
                if keep is not None and q not in keep:
                    continue
                for letter in letters:
                    out.append((idx, {q: letter}))
    return out
