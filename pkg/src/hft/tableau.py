"""Destabilizer/stabilizer tableau simulation of Clifford circuits.

Rows ``0..n-1`` hold destabilizers and rows ``n..2n-1`` stabilizers, following
Aaronson & Gottesman.  Every gate is a column update applied to all ``2n`` rows
at once; measurement costs O(n^2).  Global phase is not tracked.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .pauli import PauliString

GATE_KINDS = ("H", "X", "Y", "Z", "S", "CNOT")


class CliffordGate(NamedTuple):
    kind: str
    targets: tuple[int, ...]

    def validate(self, n: int | None = None) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind == "CNOT" else 1
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} target(s), got {self.targets}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError("CNOT control and target must differ")
        if n is not None:
            for q in self.targets:
                if not 0 <= q < n:
                    raise ValueError(f"target {q} out of range for {n} qubits")


class StabilizerTableau:
    """Mutable stabilizer state on ``n`` qubits, initialised to ``|0...0>``.

    Args:
        n: number of qubits.
        seed: seed (or ``numpy.random.Generator``) used for random outcomes.
    """

    def __init__(self, n: int, seed=None):
        if n < 1:
            raise ValueError("a tableau needs at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[idx + n, idx] = True
        if isinstance(seed, np.random.Generator):
            self.rng = seed
        else:
            self.rng = np.random.default_rng(seed)

    # housekeeping ----------------------------------------------------------
    def copy(self) -> StabilizerTableau:
        t = StabilizerTableau.__new__(StabilizerTableau)
        t.n = self.n
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        t.rng = self.rng
        return t

    def _check(self, *qs: int) -> None:
        for q in qs:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range for {self.n} qubits")

    # gates -------------------------------------------------------------------
    def h(self, a: int) -> None:
        self._check(a)
        xa, za = self.x[:, a].copy(), self.z[:, a].copy()
        self.r ^= xa & za
        self.x[:, a], self.z[:, a] = za, xa

    def s(self, a: int) -> None:
        self._check(a)
        xa = self.x[:, a]
        self.r ^= xa & self.z[:, a]
        self.z[:, a] ^= xa

    def cx(self, a: int, b: int) -> None:
        self._check(a, b)
        if a == b:
            raise ValueError("CNOT control and target must differ")
        xa, xb, za, zb = self.x[:, a], self.x[:, b], self.z[:, a], self.z[:, b]
        self.r ^= xa & zb & ~(xb ^ za)
        self.x[:, b] ^= xa
        self.z[:, a] ^= zb

    def pauli_x(self, a: int) -> None:
        self._check(a)
        self.r ^= self.z[:, a]

    def pauli_z(self, a: int) -> None:
        self._check(a)
        self.r ^= self.x[:, a]

    def pauli_y(self, a: int) -> None:
        self._check(a)
        self.r ^= self.x[:, a] ^ self.z[:, a]

    def apply(self, gate: CliffordGate) -> None:
        gate.validate(self.n)
        kind, t = gate.kind, gate.targets
        if kind == "CNOT":
            self.cx(*t)
        else:
            {"H": self.h, "S": self.s, "X": self.pauli_x,
             "Y": self.pauli_y, "Z": self.pauli_z}[kind](t[0])

    def apply_pauli(self, p: PauliString) -> None:
        if p.n != self.n:
            raise ValueError(f"dimension mismatch: Pauli on {p.n}, tableau on {self.n}")
        px, pz = p.x.astype(bool), p.z.astype(bool)
        anti = (np.count_nonzero(self.x & pz, axis=1) + np.count_nonzero(self.z & px, axis=1)) & 1
        self.r ^= anti.astype(bool)

    # row algebra -------------------------------------------------------------
    def _rowsum(self, hs: np.ndarray, i: int) -> None:
        """Left-multiply rows ``hs`` by row ``i`` (phases exact for commuting rows)."""
        xi, zi = self.x[i], self.z[i]
        xh, zh = self.x[hs], self.z[hs]
        ax, ay, az = xi & ~zi, xi & zi, ~xi & zi
        bx, by, bz = xh & ~zh, xh & zh, ~xh & zh
        plus = (ax & by) | (ay & bz) | (az & bx)
        minus = (ay & bx) | (az & by) | (ax & bz)
        k = plus.sum(axis=1) - minus.sum(axis=1)
        total = (2 * self.r[hs].astype(int) + 2 * int(self.r[i]) + k) % 4
        self.r[hs] = total == 2
        self.x[hs] = xh ^ xi
        self.z[hs] = zh ^ zi

    def _accumulate(self, rows) -> tuple[np.ndarray, np.ndarray, bool]:
        """Product of the listed rows as ``(x, z, negative)``."""
        x = np.zeros(self.n, bool)
        z = np.zeros(self.n, bool)
        phase = 0
        for i in rows:
            xi, zi = self.x[i], self.z[i]
            ax, ay, az = xi & ~zi, xi & zi, ~xi & zi
            bx, by, bz = x & ~z, x & z, ~x & z
            phase += 2 * int(self.r[i])
            phase += int(np.count_nonzero((ax & by) | (ay & bz) | (az & bx)))
            phase -= int(np.count_nonzero((ay & bx) | (az & by) | (ax & bz)))
            x ^= xi
            z ^= zi
        return x, z, phase % 4 == 2

    # measurement -------------------------------------------------------------
    def is_deterministic(self, a: int) -> bool:
        self._check(a)
        return not self.x[self.n:, a].any()

    def measure(self, a: int, forced: int | None = None) -> int:
        """Measure ``Z_a``; ``forced`` fixes the outcome of a random measurement."""
        self._check(a)
        n = self.n
        stab_hits = np.flatnonzero(self.x[n:, a])
        if stab_hits.size:
            p = int(stab_hits[0]) + n
            others = np.flatnonzero(self.x[:, a])
            others = others[others != p]
            if others.size:
                self._rowsum(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            bit = int(self.rng.integers(2)) if forced is None else int(forced) & 1
            self.r[p] = bool(bit)
            return bit
        rows = np.flatnonzero(self.x[:n, a]) + n
        _, _, neg = self._accumulate(rows)
        return int(neg)

    def reset(self, a: int) -> None:
        if self.measure(a):
            self.pauli_x(a)

    # inspection --------------------------------------------------------------
    def expectation(self, p: PauliString) -> int:
        """``+1``/``-1`` if ``±p`` stabilizes the state, ``0`` if undetermined.

        Does not disturb the state.
        """
        if p.n != self.n:
            raise ValueError(f"dimension mismatch: Pauli on {p.n}, tableau on {self.n}")
        n = self.n
        px, pz = p.x.astype(bool), p.z.astype(bool)
        anti = (np.count_nonzero(self.x & pz, axis=1) + np.count_nonzero(self.z & px, axis=1)) & 1
        if anti[n:].any():
            return 0
        rows = np.flatnonzero(anti[:n]) + n
        x, z, neg = self._accumulate(rows)
        if not (np.array_equal(x, px) and np.array_equal(z, pz)):
            raise AssertionError("tableau inconsistent: Pauli commutes but is not in the group")
        return p.sign * (-1 if neg else 1)

    def stabilizers(self) -> list[PauliString]:
        n = self.n
        return [
            PauliString(self.x[i], self.z[i], -1 if self.r[i] else 1) for i in range(n, 2 * n)
        ]

    def canonical_form(self) -> tuple[bytes, bytes, bytes]:
        """Row-reduced stabilizer generators, usable for state equality checks."""
        n = self.n
        t = self.copy()
        rows = list(range(n, 2 * n))
        top = 0
        for col in range(2 * n):
            bits = t.x[:, col] if col < n else t.z[:, col - n]
            pivot = next((i for i in rows[top:] if bits[i]), None)
            if pivot is None:
                continue
            k = rows.index(pivot)
            rows[top], rows[k] = rows[k], rows[top]
            pr = rows[top]
            hit = np.array([i for i in rows if i != pr and bits[i]], dtype=int)
            if hit.size:
                t._rowsum(hit, pr)
            top += 1
            if top == n:
                break
        order = np.array(rows)
        return (
            np.packbits(t.x[order]).tobytes(),
            np.packbits(t.z[order]).tobytes(),
            np.packbits(t.r[order]).tobytes(),
        )

    def validate(self) -> None:
        """Raise ``AssertionError`` unless the tableau is a valid stabilizer state."""
        n = self.n
        xs, zs = self.x.astype(np.uint8), self.z.astype(np.uint8)
        # symplectic form: stabilizers commute, destab_i anticommutes only with stab_i
        form = (xs @ zs.T + zs @ xs.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        idx = np.arange(n)
        expected[idx, idx + n] = 1
        expected[idx + n, idx] = 1
        if not np.array_equal(form[n:, n:], expected[n:, n:]):
            raise AssertionError("stabilizer rows do not commute")
        if not np.array_equal(form, expected):
            raise AssertionError("destabilizer/stabilizer pairing broken")


# functional surface ----------------------------------------------------------------

def new_tableau(n: int, seed=None) -> StabilizerTableau:
    return StabilizerTableau(n, seed)


def apply_gate(t: StabilizerTableau, g: CliffordGate) -> None:
    t.apply(g)


def measure_z(t: StabilizerTableau, q: int) -> int:
    return t.measure(q)


def apply_pauli(t: StabilizerTableau, p: PauliString) -> None:
    t.apply_pauli(p)


def reset_qubit(t: StabilizerTableau, q: int) -> None:
    t.reset(q)
