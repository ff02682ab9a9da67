"""Circuit intermediate representation and its line-based text format.

A circuit is a flat list of :class:`Instruction` over ``n_qubits`` qubits and
``n_clbits`` classical bits.  Besides Clifford gates, measurement and reset it
carries noise sites (``NOISE1``/``NOISE2``/``NOISEM``/``IDLE``), classical
bit logic (``XOR``/``AND``/``OR``/``NOT``/``DECODE``) and classically
controlled Paulis (``CPAULI``).

Any instruction may carry a guard ``if cK`` (or ``if !cK``); it then acts only
in shots where the guard bit is set (clear).  The frame simulator executes
guarded blocks in its noiseless reference run unconditionally, so a builder
may only guard blocks that leave the noiseless state unchanged, or that
touch qubits which are reset before their next use.

Text format, one instruction per line::

    QUBITS 14
    CLBITS 6
    REG data q 0 7
    TABLE dz 3 7
    0000000
    ...
    H 3
    CX 0 4 1 5
    M 4 -> c2
    R 4
    NOISE2(0.01) 0 4
    CPAULI X 5 if c2
    XOR c7 = c2 c3
    DECODE dz c8 c9 c10 c11 c12 c13 c14 = c0 c1 c2
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

GATES_1Q = ("H", "S", "X", "Y", "Z")
NOISE_OPS = ("NOISE1", "NOISE2", "NOISEM", "IDLE")
CLASSICAL_OPS = ("XOR", "AND", "OR", "NOT", "DECODE")
QUANTUM_OPS = GATES_1Q + ("CX", "M", "R")
ALL_OPS = QUANTUM_OPS + NOISE_OPS + CLASSICAL_OPS + ("CPAULI", "TICK")


class CircuitError(ValueError):
    """Malformed circuit or circuit text."""


@dataclass(frozen=True)
class Instruction:
    """One circuit step.

    Attributes:
        op: opcode, see ``ALL_OPS``.
        qubits: qubit operands (pairs for ``CX``/``NOISE2``).
        clbits: classical operands; for ``M`` the targets, for logic ops the
            outputs followed by the inputs.
        arg: opcode parameter: probability for noise sites, duration in
            microseconds for ``IDLE``, Pauli letter for ``CPAULI``, table
            name for ``DECODE``, output count for logic ops, label for ``TICK``.
        cond: guard classical bit, or ``None``.
        negate: guard on the bit being 0 instead of 1.
    """

    op: str
    qubits: tuple[int, ...] = ()
    clbits: tuple[int, ...] = ()
    arg: object = None
    cond: int | None = None
    negate: bool = False

    @property
    def is_gate(self) -> bool:
        return self.op in QUANTUM_OPS or self.op == "CPAULI"

    @property
    def is_noise(self) -> bool:
        return self.op in NOISE_OPS


@dataclass
class Circuit:
    """Ordered instruction list with register and lookup-table metadata.

    Attributes:
        n_qubits: width.
        n_clbits: number of classical bits.
        instructions: the program.
        registers: ``name -> (kind, start, stop)`` with kind ``"q"`` or ``"c"``.
        tables: ``name -> uint8 array (2**k, m)`` used by ``DECODE``.
        instrumented: set once noise sites have been attached.
    """

    n_qubits: int
    n_clbits: int = 0
    instructions: list[Instruction] = field(default_factory=list)
    registers: dict[str, tuple[str, int, int]] = field(default_factory=dict)
    tables: dict[str, np.ndarray] = field(default_factory=dict)
    instrumented: bool = False

    # construction ------------------------------------------------------------------
    def add_qubits(self, count: int, name: str | None = None) -> list[int]:
        start = self.n_qubits
        self.n_qubits += count
        if name:
            self.registers[name] = ("q", start, self.n_qubits)
        return list(range(start, self.n_qubits))

    def add_clbits(self, count: int, name: str | None = None) -> list[int]:
        start = self.n_clbits
        self.n_clbits += count
        if name:
            self.registers[name] = ("c", start, self.n_clbits)
        return list(range(start, self.n_clbits))

    def add_table(self, name: str, table) -> str:
        table = np.asarray(table, dtype=np.uint8)
        if name in self.tables and not np.array_equal(self.tables[name], table):
            raise CircuitError(f"table {name!r} already defined differently")
        self.tables[name] = table
        return name

    def append(self, op: str, qubits=(), clbits=(), arg=None, cond=None, negate=False) -> None:
        ins = Instruction(op, tuple(int(q) for q in qubits), tuple(int(c) for c in clbits),
                          arg, None if cond is None else int(cond), bool(negate))
        self._check(ins)
        self.instructions.append(ins)

    def extend(self, other: Circuit, cond=None, negate=False) -> None:
        """Append ``other`` (same index space); optionally guard every instruction."""
        for name, tab in other.tables.items():
            self.add_table(name, tab)
        for ins in other.instructions:
            if cond is not None and ins.cond is not None:
                raise CircuitError("cannot nest guards; combine flags with AND first")
            if cond is not None:
                ins = Instruction(ins.op, ins.qubits, ins.clbits, ins.arg, cond, negate)
            self._check(ins)
            self.instructions.append(ins)

    def register(self, name: str) -> list[int]:
        _, a, b = self.registers[name]
        return list(range(a, b))

    def copy(self) -> Circuit:
        return Circuit(self.n_qubits, self.n_clbits, list(self.instructions), dict(self.registers),
                       {k: v.copy() for k, v in self.tables.items()}, self.instrumented)

    def __len__(self) -> int:
        return len(self.instructions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self.n_clbits == other.n_clbits
            and self.instructions == other.instructions
            and self.registers == other.registers
            and self.instrumented == other.instrumented
            and self.tables.keys() == other.tables.keys()
            and all(np.array_equal(self.tables[k], other.tables[k]) for k in self.tables)
        )

    # validation ----------------------------------------------------------------------
    def _check(self, ins: Instruction) -> None:
        if ins.op not in ALL_OPS:
            raise CircuitError(f"unknown op {ins.op!r}")
        for q in ins.qubits:
            if not 0 <= q < self.n_qubits:
                raise CircuitError(f"{ins.op}: qubit {q} out of range ({self.n_qubits})")
        for c in ins.clbits + (() if ins.cond is None else (ins.cond,)):
            if not 0 <= c < self.n_clbits:
                raise CircuitError(f"{ins.op}: clbit {c} out of range ({self.n_clbits})")
        if ins.op in ("CX", "NOISE2"):
            if len(ins.qubits) % 2:
                raise CircuitError(f"{ins.op} needs qubit pairs")
            for a, b in zip(ins.qubits[::2], ins.qubits[1::2]):
                if a == b:
                    raise CircuitError(f"{ins.op} on identical qubits {a}")
        if ins.op == "M" and len(ins.clbits) != len(ins.qubits):
            raise CircuitError("M needs one clbit per qubit")
        if ins.op == "DECODE":
            if ins.arg not in self.tables:
                raise CircuitError(f"DECODE references unknown table {ins.arg!r}")
            k = int(np.log2(self.tables[ins.arg].shape[0]))
            m = self.tables[ins.arg].shape[1]
            if len(ins.clbits) != k + m:
                raise CircuitError(f"DECODE {ins.arg} expects {m} outputs and {k} inputs")
        if ins.op in ("XOR", "AND", "OR", "NOT") and len(ins.clbits) < 2:
            raise CircuitError(f"{ins.op} needs an output and at least one input")
        if ins.op == "CPAULI" and ins.arg not in ("X", "Y", "Z"):
            raise CircuitError("CPAULI needs a Pauli letter")

    def validate(self) -> None:
        for ins in self.instructions:
            self._check(ins)

    # text format --------------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"QUBITS {self.n_qubits}", f"CLBITS {self.n_clbits}"]
        if self.instrumented:
            lines.append("FLAG instrumented")
        for name, (kind, a, b) in self.registers.items():
            lines.append(f"REG {name} {kind} {a} {b}")
        for name, tab in self.tables.items():
            k = int(np.log2(tab.shape[0]))
            lines.append(f"TABLE {name} {k} {tab.shape[1]}")
            lines.extend("".join(str(int(b)) for b in row) if tab.shape[1] else "-" for row in tab)
        lines.extend(format_instruction(ins) for ins in self.instructions)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        return parse_circuit(text)


def _fmt_num(v) -> str:
    return repr(float(v))


def format_instruction(ins: Instruction) -> str:
    op = ins.op
    q = " ".join(str(x) for x in ins.qubits)
    c = lambda bits: " ".join(f"c{b}" for b in bits)  # noqa: E731
    if op in ("NOISE1", "NOISE2", "NOISEM"):
        head = op if ins.arg is None else f"{op}({_fmt_num(ins.arg)})"
        body = f"{head} {q}"
    elif op == "IDLE":
        body = f"IDLE({_fmt_num(ins.arg)}) {q}"
    elif op == "M":
        body = f"M {q} -> {c(ins.clbits)}"
    elif op == "CPAULI":
        body = f"CPAULI {ins.arg} {q}"
    elif op in ("XOR", "AND", "OR", "NOT"):
        n_out = 1 if ins.arg is None else int(ins.arg)
        body = f"{op} {c(ins.clbits[:n_out])} = {c(ins.clbits[n_out:])}"
    elif op == "DECODE":
        body = f"DECODE {ins.arg} {c(ins.clbits)}"
    elif op == "TICK":
        body = "TICK" if ins.arg is None else f"TICK {ins.arg}"
    else:
        body = f"{op} {q}"
    if ins.cond is not None:
        body += f" if {'!' if ins.negate else ''}c{ins.cond}"
    return body


_HEAD = re.compile(r"^([A-Z0-9]+)(?:\(([^)]*)\))?$")


def _clbit(tok: str) -> int:
    if not tok.startswith("c"):
        raise CircuitError(f"expected a classical bit like c3, got {tok!r}")
    return int(tok[1:])


def parse_circuit(text: str) -> Circuit:
    """Inverse of :meth:`Circuit.to_text`."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    circ = None
    n_q = n_c = None
    pending: list[tuple[int, str]] = []
    i = 0
    regs: dict = {}
    tables: dict = {}
    flag = False
    while i < len(lines):
        ln = lines[i]
        toks = ln.split()
        head = toks[0]
        if head == "QUBITS":
            n_q = int(toks[1])
        elif head == "CLBITS":
            n_c = int(toks[1])
        elif head == "FLAG":
            flag = flag or toks[1] == "instrumented"
        elif head == "REG":
            regs[toks[1]] = (toks[2], int(toks[3]), int(toks[4]))
        elif head == "TABLE":
            name, k, m = toks[1], int(toks[2]), int(toks[3])
            rows = lines[i + 1: i + 1 + 2 ** k]
            if len(rows) != 2 ** k:
                raise CircuitError(f"table {name} truncated")
            tables[name] = np.array(
                [[int(ch) for ch in r] if r != "-" else [] for r in rows], dtype=np.uint8
            ).reshape(2 ** k, m)
            i += 2 ** k
        else:
            pending.append((i, ln))
        i += 1
    if n_q is None:
        raise CircuitError("missing QUBITS header")
    circ = Circuit(n_q, n_c or 0, registers=regs, tables=tables, instrumented=flag)
    for lineno, ln in pending:
        try:
            circ.instructions.append(_parse_instruction(ln))
            circ._check(circ.instructions[-1])
        except (ValueError, IndexError, KeyError) as exc:
            raise CircuitError(f"line {lineno + 1}: {ln!r}: {exc}") from exc
    return circ


def _parse_instruction(ln: str) -> Instruction:
    cond = None
    negate = False
    if " if " in ln:
        ln, guard = ln.rsplit(" if ", 1)
        guard = guard.strip()
        if guard.startswith("!"):
            negate, guard = True, guard[1:]
        cond = _clbit(guard)
    toks = ln.split()
    m = _HEAD.match(toks[0])
    if not m:
        raise CircuitError(f"bad opcode {toks[0]!r}")
    op, param = m.group(1), m.group(2)
    rest = toks[1:]
    arg = None
    qubits: tuple[int, ...] = ()
    clbits: tuple[int, ...] = ()
    if op in ("NOISE1", "NOISE2", "NOISEM", "IDLE"):
        arg = None if param is None else float(param)
        qubits = tuple(int(t) for t in rest)
    elif op == "M":
        arrow = rest.index("->")
        qubits = tuple(int(t) for t in rest[:arrow])
        clbits = tuple(_clbit(t) for t in rest[arrow + 1:])
    elif op == "CPAULI":
        arg = rest[0]
        qubits = tuple(int(t) for t in rest[1:])
    elif op in ("XOR", "AND", "OR", "NOT"):
        eq = rest.index("=")
        outs = [_clbit(t) for t in rest[:eq]]
        ins = [_clbit(t) for t in rest[eq + 1:]]
        arg = None if len(outs) == 1 else len(outs)
        clbits = tuple(outs + ins)
    elif op == "DECODE":
        arg = rest[0]
        clbits = tuple(_clbit(t) for t in rest[1:])
    elif op == "TICK":
        arg = rest[0] if rest else None
    else:
        qubits = tuple(int(t) for t in rest)
    if op not in ALL_OPS:
        raise CircuitError(f"unknown op {op!r}")
    return Instruction(op, qubits, clbits, arg, cond, negate)


# statistics ---------------------------------------------------------------------------

def _gate_units(ins: Instruction) -> list[tuple[int, ...]]:
    """Split broadcast instructions into individual gate applications."""
    if ins.op in ("CX", "NOISE2"):
        return [tuple(ins.qubits[i:i + 2]) for i in range(0, len(ins.qubits), 2)]
    if ins.op == "CPAULI":
        return [tuple(ins.qubits)]
    return [(q,) for q in ins.qubits]


def circuit_stats(c: Circuit) -> dict:
    """Width, depth (longest qubit-sharing chain of quantum operations) and counts.

    Noise sites, classical logic and ``TICK`` do not contribute to depth.
    Counts are per gate application, so ``CX 0 1 2 3`` counts as two CNOTs.
    """
    level = np.zeros(c.n_qubits, dtype=np.int64)
    counts: Counter = Counter()
    for ins in c.instructions:
        if ins.op == "TICK" or ins.op in CLASSICAL_OPS:
            continue
        for unit in _gate_units(ins):
            counts[ins.op] += 1
            if ins.is_noise:
                continue
            idx = list(unit)
            top = level[idx].max() + 1
            level[idx] = top
    depth = int(level.max()) if c.n_qubits else 0
    gates = {k: v for k, v in counts.items() if k not in NOISE_OPS and k not in ("M", "R")}
    return {
        "width": c.n_qubits,
        "depth": depth,
        "gate_counts": dict(sorted(gates.items())),
        "measurements": counts.get("M", 0),
        "resets": counts.get("R", 0),
        "noise_sites": {k: counts[k] for k in NOISE_OPS if counts.get(k)},
        "clbits": c.n_clbits,
    }


# rendering ----------------------------------------------------------------------------

def render_text(c: Circuit, max_columns: int | None = 120) -> str:
    """Fixed-width lane drawing; ``TICK`` becomes a vertical separator.

    Noise sites and classical logic are omitted; guarded gates are shown in
    lower case.
    """
    lanes: list[list[str]] = [[] for _ in range(c.n_qubits)]

    def column(cells: dict[int, str], span: tuple[int, int] | None = None):
        for q in range(c.n_qubits):
            if q in cells:
                lanes[q].append(cells[q])
            elif span and span[0] < q < span[1]:
                lanes[q].append("|")
            else:
                lanes[q].append("-")

    for ins in c.instructions:
        if ins.op == "TICK":
            column({q: "#" for q in range(c.n_qubits)})
            continue
        if ins.is_noise or ins.op in CLASSICAL_OPS:
            continue
        guarded = ins.cond is not None
        for unit in _gate_units(ins):
            if ins.op == "CX":
                a, b = unit
                cells = {a: "*", b: "+"}
                column(cells, (min(a, b), max(a, b)))
            else:
                glyph = {"CPAULI": ins.arg or "P"}.get(ins.op, ins.op)[0]
                glyph = glyph.lower() if guarded else glyph
                column({q: glyph for q in unit})
    width = len(str(max(c.n_qubits - 1, 0)))
    out = []
    for q, lane in enumerate(lanes):
        body = "".join(lane)
        if max_columns and len(body) > max_columns:
            body = body[:max_columns - 3] + "..."
        out.append(f"q{q:<{width}} {body}")
    return "\n".join(out)
