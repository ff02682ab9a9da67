"""CSS codes: Hamming/Steane construction, syndromes and lookup decoding.

Qubits are 0-indexed internally.  Human-facing output (``format_steane``)
uses 1-based labels so that column ``j`` of the Hamming matrix is qubit
``j + 1``; this module is the only place where that conversion happens.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gf2
from .pauli import PauliString
from .tableau import StabilizerTableau


class CssConditionError(ValueError):
    """X- and Z-type checks fail to commute."""


class DegenerateCodeError(ValueError):
    """The matrices encode no logical qubit."""


class DistanceViolationError(ValueError):
    """Two correctable errors share a syndrome but differ by a logical operator."""


@dataclass(frozen=True)
class Syndrome:
    """Measured (or computed) stabilizer outcomes for one round.

    Attributes:
        z_bits: outcomes of the Z-type checks (rows of ``hz``); these see bit flips.
        x_bits: outcomes of the X-type checks (rows of ``hx``); these see phase flips.
        round: time index of the round.
    """

    z_bits: tuple[int, ...]
    x_bits: tuple[int, ...]
    round: int = 0

    def __post_init__(self):
        if self.round < 0:
            raise ValueError("round must be non-negative")

    @property
    def bits(self) -> tuple[int, ...]:
        """The six-bit style concatenation ``z_bits + x_bits``."""
        return tuple(self.z_bits) + tuple(self.x_bits)

    def is_trivial(self) -> bool:
        return not any(self.bits)


def hamming_parity_check() -> np.ndarray:
    """The 3x7 Hamming matrix whose column ``j`` is the binary expansion of ``j + 1``."""
    cols = np.arange(1, 8)
    return np.array([(cols >> s) & 1 for s in (2, 1, 0)], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class CssCode:
    """A CSS stabilizer code defined by two parity-check matrices.

    Attributes:
        n: number of physical qubits.
        k: number of logical qubits.
        d: declared distance.
        hz: Z-type check supports, one row per generator.
        hx: X-type check supports, one row per generator.
        logical_xs: X-type logical operators, one per logical qubit.
        logical_zs: Z-type logical operators paired with ``logical_xs``.
        name: label used in reports.
    """

    n: int
    k: int
    d: int
    hz: np.ndarray
    hx: np.ndarray
    logical_xs: tuple[PauliString, ...]
    logical_zs: tuple[PauliString, ...]
    name: str = "css"
    _x_table: np.ndarray = field(repr=False, default=None)
    _z_table: np.ndarray = field(repr=False, default=None)

    @property
    def logical_x(self) -> PauliString:
        return self.logical_xs[0]

    @property
    def logical_z(self) -> PauliString:
        return self.logical_zs[0]

    @property
    def t(self) -> int:
        """Number of correctable errors, ``floor((d - 1) / 2)``."""
        return (self.d - 1) // 2

    @property
    def n_z_checks(self) -> int:
        return int(self.hz.shape[0])

    @property
    def n_x_checks(self) -> int:
        return int(self.hx.shape[0])

    def z_stabilizers(self) -> list[PauliString]:
        return [PauliString(np.zeros(self.n, np.uint8), row) for row in self.hz]

    def x_stabilizers(self) -> list[PauliString]:
        return [PauliString(row, np.zeros(self.n, np.uint8)) for row in self.hx]

    def stabilizers(self) -> list[PauliString]:
        return self.z_stabilizers() + self.x_stabilizers()

    def stabilizer(self, kind: str, index: int) -> PauliString:
        return (self.z_stabilizers() if kind == "Z" else self.x_stabilizers())[index]

    def in_stabilizer_group(self, p: PauliString) -> bool:
        """Membership of the unsigned operator ``p`` in the stabilizer group."""
        return gf2.in_rowspace(self.hx, p.x) and gf2.in_rowspace(self.hz, p.z)

    def correction_x(self, z_syndrome) -> np.ndarray:
        """X-type correction bits for a Z-check syndrome."""
        return self._x_table[gf2.bits_to_int(z_syndrome)].copy()

    def correction_z(self, x_syndrome) -> np.ndarray:
        return self._z_table[gf2.bits_to_int(x_syndrome)].copy()

    def decode(self, syndrome: Syndrome) -> PauliString:
        """Minimum-weight lookup correction for a full syndrome."""
        return PauliString(self.correction_x(syndrome.z_bits), self.correction_z(syndrome.x_bits))

    @property
    def decoder_table(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], PauliString]:
        """All ``(z_syndrome, x_syndrome) -> correction`` entries."""
        out = {}
        for zi in range(len(self._x_table)):
            zs = tuple(gf2.int_to_bits(zi, self.n_z_checks).tolist())
            for xi in range(len(self._z_table)):
                xs = tuple(gf2.int_to_bits(xi, self.n_x_checks).tolist())
                out[(zs, xs)] = PauliString(self._x_table[zi], self._z_table[xi])
        return out

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "hz": self.hz.tolist(), "hx": self.hx.tolist()}


def syndrome_of(code: CssCode, e: PauliString, round: int = 0) -> Syndrome:
    """Classical syndrome of a Pauli error: ``(hz e_x, hx e_z) mod 2``."""
    if e.n != code.n:
        raise ValueError(f"dimension mismatch: error on {e.n} qubits, code has {code.n}")
    z_bits = gf2.matmul(code.hz, e.x) if code.n_z_checks else np.zeros(0, np.uint8)
    x_bits = gf2.matmul(code.hx, e.z) if code.n_x_checks else np.zeros(0, np.uint8)
    return Syndrome(tuple(int(b) for b in z_bits), tuple(int(b) for b in x_bits), round)


def _sector_table(h: np.ndarray, gauge: np.ndarray, n: int, t: int, check_distance: bool) -> np.ndarray:
    """Lookup table ``syndrome -> lowest-index minimum-weight error`` for one sector.

    ``gauge`` spans errors that act trivially (the other-type stabilizers).
    """
    m = h.shape[0]
    table = np.zeros((2 ** m, n), dtype=np.uint8)
    found = np.zeros(2 ** m, dtype=bool)
    seen_low: dict[int, np.ndarray] = {}
    reachable = 2 ** gf2.rank(h) if m else 1
    for w in range(n + 1):
        for support in itertools.combinations(range(n), w):
            e = np.zeros(n, np.uint8)
            e[list(support)] = 1
            s = gf2.bits_to_int(gf2.matmul(h, e)) if m else 0
            if w <= t and check_distance:
                prev = seen_low.get(s)
                if prev is None:
                    seen_low[s] = e
                elif not gf2.in_rowspace(gauge, prev ^ e):
                    raise DistanceViolationError(
                        f"errors on {np.flatnonzero(prev).tolist()} and {list(support)} share "
                        "a syndrome but differ by a logical operator"
                    )
            if not found[s]:
                found[s] = True
                table[s] = e
        if found.sum() == reachable and w >= t:
            break
    return table


def _min_weight_logical(kernel_of: np.ndarray, rowspace: np.ndarray, n: int, partner=None) -> np.ndarray:
    """Lowest-weight vector in ``ker(kernel_of)`` outside ``rowspace`` (odd overlap with ``partner``)."""
    for w in range(1, n + 1):
        for support in itertools.combinations(range(n), w):
            v = np.zeros(n, np.uint8)
            v[list(support)] = 1
            if kernel_of.shape[0] and gf2.matmul(kernel_of, v).any():
                continue
            if gf2.in_rowspace(rowspace, v):
                continue
            if partner is not None and int(v @ partner) % 2 == 0:
                continue
            return v
    raise DegenerateCodeError("no logical operator found")


def _logical_pairs(hz: np.ndarray, hx: np.ndarray, n: int, k: int):
    """Paired logical X/Z bit vectors with identity overlap matrix."""
    if k == 1 and n <= 16:
        lx = _min_weight_logical(hz, hx, n)
        lz = _min_weight_logical(hx, hz, n, partner=lx)
        return [lx], [lz]
    # independent kernel vectors outside the row spaces, then symplectic pairing
    def reps(kernel_of, rowspace):
        basis = gf2.nullspace(kernel_of) if kernel_of.shape[0] else np.eye(n, dtype=np.uint8)
        acc = rowspace.copy()
        out = []
        for v in basis:
            if not gf2.in_rowspace(acc, v):
                out.append(v.copy())
                acc = np.vstack([acc, v]) if acc.size else v.reshape(1, -1)
        return out

    xs, zs = reps(hz, hx), reps(hx, hz)
    px, pz = [], []
    while xs:
        x = xs.pop(0)
        j = next(i for i, z in enumerate(zs) if int(x @ z) % 2)
        z = zs.pop(j)
        xs = [v ^ x if int(v @ z) % 2 else v for v in xs]
        zs = [v ^ z if int(v @ x) % 2 else v for v in zs]
        px.append(x)
        pz.append(z)
    return px, pz


def css_from_matrices(hz, hx, d: int, name: str = "css", logical_xs=None, logical_zs=None) -> CssCode:
    """Build a CSS code from its Z-type and X-type check matrices.

    Args:
        hz: Z-check supports (rows); may be empty.
        hx: X-check supports (rows); may be empty.
        d: declared distance, used for the decoder's correctable radius.
        name: report label.
        logical_xs: optional explicit logical X operators (``PauliString``).
        logical_zs: optional explicit logical Z operators.

    Raises:
        CssConditionError: some X-check overlaps some Z-check oddly.
        DegenerateCodeError: ``k <= 0``.
        DistanceViolationError: the declared distance is not achieved by a
            sector that has checks.
    """
    hz = np.asarray(hz, dtype=np.uint8)
    hx = np.asarray(hx, dtype=np.uint8)
    n = hz.shape[1] if hz.ndim == 2 and hz.size else (hx.shape[1] if hx.ndim == 2 else 0)
    hz = gf2.as_binary(hz, n)
    hx = gf2.as_binary(hx, n)
    if hz.shape[1] != hx.shape[1]:
        raise ValueError(f"column counts differ: hz has {hz.shape[1]}, hx has {hx.shape[1]}")
    if hz.shape[0] and hx.shape[0]:
        bad = np.argwhere(gf2.matmul(hx, hz.T))
        if bad.size:
            i, j = bad[0]
            raise CssConditionError(f"X-check row {i} anticommutes with Z-check row {j}")
    k = n - gf2.rank(hz) - gf2.rank(hx)
    if k <= 0:
        raise DegenerateCodeError(f"k = {k}: no logical qubits")
    if logical_xs is None or logical_zs is None:
        lxs, lzs = _logical_pairs(hz, hx, n, k)
        zero = np.zeros(n, np.uint8)
        logical_xs = tuple(PauliString(v, zero) for v in lxs)
        logical_zs = tuple(PauliString(zero, v) for v in lzs)
    t = (d - 1) // 2
    x_table = _sector_table(hz, hx, n, t, check_distance=hz.shape[0] > 0)
    z_table = _sector_table(hx, hz, n, t, check_distance=hx.shape[0] > 0)
    return CssCode(n, k, d, hz, hx, tuple(logical_xs), tuple(logical_zs), name, x_table, z_table)


def steane_code() -> CssCode:
    """The [[7,1,3]] code: both check matrices are the Hamming matrix, logicals are transversal."""
    h = hamming_parity_check()
    ones = np.ones(7, np.uint8)
    zeros = np.zeros(7, np.uint8)
    return css_from_matrices(
        h, h.copy(), 3, name="steane",
        logical_xs=(PauliString(ones, zeros),), logical_zs=(PauliString(zeros, ones),),
    )


def repetition_code(n: int = 3) -> CssCode:
    """Bit-flip repetition code: Z-checks on neighbours, no X-checks."""
    hz = np.zeros((n - 1, n), np.uint8)
    for i in range(n - 1):
        hz[i, i] = hz[i, i + 1] = 1
    return css_from_matrices(hz, np.zeros((0, n), np.uint8), n, name=f"repetition{n}")


def get_code(name: str) -> CssCode:
    if name == "steane":
        return steane_code()
    if name.startswith("repetition"):
        return repetition_code(int(name[len("repetition"):] or 3))
    raise KeyError(f"unknown code {name!r}")


def load_code_file(path) -> CssCode:
    """Read ``{n, d, hz, hx}`` JSON and build the code."""
    path = Path(path)
    spec = json.loads(path.read_text())
    n = int(spec["n"])
    hz = gf2.as_binary(spec.get("hz", []), n)
    hx = gf2.as_binary(spec.get("hx", []), n)
    if hz.shape[1] != n or hx.shape[1] != n:
        raise ValueError(f"{path}: matrix width does not match n={n}")
    return css_from_matrices(hz, hx, int(spec["d"]), name=spec.get("name", path.stem))


@dataclass(frozen=True)
class LogicalStateReport:
    """Eigenvalues read off a tableau: ``+1``, ``-1`` or ``0`` (indeterminate)."""

    z_stabilizers: tuple[int, ...]
    x_stabilizers: tuple[int, ...]
    logical_z: int
    logical_x: int

    @property
    def in_codespace(self) -> bool:
        return all(v == 1 for v in self.z_stabilizers + self.x_stabilizers)


def _embed(p: PauliString, n_total: int, block) -> PauliString:
    x = np.zeros(n_total, np.uint8)
    z = np.zeros(n_total, np.uint8)
    block = list(block)
    x[block] = p.x
    z[block] = p.z
    return PauliString(x, z, p.sign)


def logical_state_check(t: StabilizerTableau, code: CssCode, block=None) -> LogicalStateReport:
    """Read stabilizer and logical eigenvalues of ``block`` without disturbing ``t``."""
    block = list(range(code.n) if block is None else block)
    if len(block) != code.n:
        raise ValueError(f"block has {len(block)} qubits, code needs {code.n}")

    def ev(p):
        return t.expectation(_embed(p, t.n, block))

    return LogicalStateReport(
        tuple(ev(p) for p in code.z_stabilizers()),
        tuple(ev(p) for p in code.x_stabilizers()),
        ev(code.logical_z),
        ev(code.logical_x),
    )


def format_steane(code: CssCode | None = None) -> str:
    """Human-readable check matrix and generators with 1-based qubit labels."""
    code = code or steane_code()
    lines = ["Hamming parity-check matrix H (columns = qubits 1..7):"]
    lines += ["  " + " ".join(str(b) for b in row) for row in code.hz]
    lines.append("Z-type generators (detect bit flips):")
    for i, row in enumerate(code.hz, 1):
        lines.append(f"  g{i}^Z = " + " ".join(f"Z{q + 1}" for q in np.flatnonzero(row)))
    lines.append("X-type generators (detect phase flips):")
    for i, row in enumerate(code.hx, 1):
        lines.append(f"  g{i}^X = " + " ".join(f"X{q + 1}" for q in np.flatnonzero(row)))
    lines.append("Logical operators:")
    lines.append("  X_L = " + " ".join(f"X{q + 1}" for q in code.logical_x.support))
    lines.append("  Z_L = " + " ".join(f"Z{q + 1}" for q in code.logical_z.support))
    return "\n".join(lines)


def min_weight_logical(code: CssCode, kind: str) -> PauliString:
    """Lowest-weight representative of the X- or Z-type logical operator."""
    zero = np.zeros(code.n, np.uint8)
    if kind == "X":
        v = _min_weight_logical(code.hz, code.hx, code.n, partner=code.logical_z.z)
        return PauliString(v, zero)
    v = _min_weight_logical(code.hx, code.hz, code.n, partner=code.logical_x.x)
    return PauliString(zero, v)


def _span(rows: np.ndarray, n: int) -> np.ndarray:
    """All ``2**r`` elements of the row space of ``rows`` (with repeats if dependent)."""
    r = rows.shape[0]
    out = np.zeros((2 ** r, n), np.uint8)
    for s in range(2 ** r):
        for i in range(r):
            if (s >> (r - 1 - i)) & 1:
                out[s] ^= rows[i].astype(np.uint8)
    return out


def reduced_weight(code: CssCode, ex, ez) -> np.ndarray:
    """Minimum weight of a batch of Paulis over their stabilizer cosets.

    Args:
        code: the code.
        ex: X parts, shape ``(n, shots)`` (or ``(n,)`` for one Pauli).
        ez: Z parts, same shape.

    Returns:
        Integer weights, one per shot.
    """
    ex = np.asarray(ex, dtype=bool)
    ez = np.asarray(ez, dtype=bool)
    single = ex.ndim == 1
    if single:
        ex, ez = ex[:, None], ez[:, None]
    sx = _span(code.hx, code.n).astype(bool)
    sz = _span(code.hz, code.n).astype(bool)
    best = np.full(ex.shape[1], code.n + 1)
    for a in sx:
        xa = ex ^ a[:, None]
        for b in sz:
            w = (xa | (ez ^ b[:, None])).sum(axis=0)
            np.minimum(best, w, out=best)
    return best[0] if single else best


def logical_flips(code: CssCode, ex, ez, observable: str = "Z") -> np.ndarray:
    """Whether a residual error flips a logical observable after perfect decoding.

    The residual is corrected with the minimum-weight lookup decoder driven
    by its exact syndrome; the result either lies in the stabilizer group or
    is a logical operator.  ``observable`` is the logical Pauli whose value
    is tracked: an X-type remainder flips ``Z``, a Z-type one flips ``X``,
    and ``Y`` is flipped when exactly one of them is present.

    Args:
        code: a ``k = 1`` code.
        ex: X parts, shape ``(n, shots)``.
        ez: Z parts, shape ``(n, shots)``.
        observable: ``X``, ``Y`` or ``Z``.

    Returns:
        Boolean array, one entry per shot.
    """
    if observable not in ("X", "Y", "Z"):
        raise ValueError("observable must be X, Y or Z")
    ex = np.asarray(ex, dtype=np.uint8)
    ez = np.asarray(ez, dtype=np.uint8)
    w = 1 << np.arange(code.n_z_checks - 1, -1, -1)
    zi = ((code.hz.astype(np.int64) @ ex) % 2).T @ w if code.n_z_checks else np.zeros(ex.shape[1], int)
    w = 1 << np.arange(code.n_x_checks - 1, -1, -1)
    xi = ((code.hx.astype(np.int64) @ ez) % 2).T @ w if code.n_x_checks else np.zeros(ez.shape[1], int)
    rx = ex ^ code._x_table[zi].T
    rz = ez ^ code._z_table[xi].T
    x_flip = (code.logical_z.z.astype(np.int64) @ rx) % 2 == 1
    z_flip = (code.logical_x.x.astype(np.int64) @ rz) % 2 == 1
    if observable == "Z":
        return x_flip
    if observable == "X":
        return z_flip
    return x_flip ^ z_flip
