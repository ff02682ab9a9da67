"""Signed n-qubit Pauli operators in binary symplectic form.

Qubit ``i`` carries ``I, X, Z, Y`` for ``(x_i, z_i) = (0,0), (1,0), (0,1), (1,1)``.
Only a real sign is kept; products that would pick up a factor of ``±i``
(anticommuting factors) are returned with that factor dropped.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping

import numpy as np

_LETTERS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_FROM_BITS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def _bits(v, n: int) -> np.ndarray:
    arr = np.asarray(v, dtype=np.uint8).reshape(-1) & 1
    if arr.shape != (n,):
        raise ValueError(f"expected a length-{n} bit vector, got shape {arr.shape}")
    return arr


def phase_exponent(x1, z1, x2, z2) -> int:
    """Power of ``i`` picked up when forming the product ``P1 * P2``.

    Works on bit arrays of any matching shape; the result is taken mod 4.
    """
    x1 = np.asarray(x1, dtype=bool)
    z1 = np.asarray(z1, dtype=bool)
    x2 = np.asarray(x2, dtype=bool)
    z2 = np.asarray(z2, dtype=bool)
    a_x, a_y, a_z = x1 & ~z1, x1 & z1, ~x1 & z1
    b_x, b_y, b_z = x2 & ~z2, x2 & z2, ~x2 & z2
    # XY = iZ, YZ = iX, ZX = iY and the reversed orders give -i
    plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x)
    minus = (a_y & b_x) | (a_z & b_y) | (a_x & b_z)
    return int(np.count_nonzero(plus) - np.count_nonzero(minus)) % 4


class PauliString:
    """An n-qubit Pauli operator with a ``+1``/``-1`` sign.

    Args:
        x: X component per qubit.
        z: Z component per qubit.
        sign: ``+1`` or ``-1``.
    """

    __slots__ = ("x", "z", "sign")

    def __init__(self, x, z, sign: int = 1):
        x = np.asarray(x, dtype=np.uint8).reshape(-1) & 1
        z = _bits(z, x.size)
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        self.x = x
        self.z = z
        self.sign = int(sign)

    # construction helpers -------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse labels such as ``"XIZY"`` or ``"-ZZI"`` (qubit 0 first)."""
        sign = 1
        if label[:1] in "+-":
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        try:
            pairs = [_LETTERS[c] for c in label.upper()]
        except KeyError as exc:
            raise ValueError(f"bad Pauli label {label!r}") from exc
        x, z = zip(*pairs) if pairs else ((), ())
        return cls(np.array(x, np.uint8), np.array(z, np.uint8), sign)

    @classmethod
    def from_sparse(cls, n: int, ops: Mapping[int, str], sign: int = 1) -> PauliString:
        """Build from ``{qubit: letter}``, e.g. ``from_sparse(7, {4: "X"})``."""
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        for q, letter in ops.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for n={n}")
            x[q], z[q] = _LETTERS[letter.upper()]
        return cls(x, z, sign)

    @classmethod
    def single(cls, n: int, q: int, letter: str) -> PauliString:
        return cls.from_sparse(n, {q: letter})

    @classmethod
    def on_support(cls, n: int, support: Iterable[int], letter: str) -> PauliString:
        return cls.from_sparse(n, {q: letter for q in support})

    # basic queries ---------------------------------------------------------
    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    @property
    def support(self) -> list[int]:
        return np.flatnonzero(self.x | self.z).tolist()

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    def letter(self, q: int) -> str:
        return _FROM_BITS[(int(self.x[q]), int(self.z[q]))]

    def commutes(self, other: PauliString) -> bool:
        return pauli_commutes(self, other)

    def copy(self) -> PauliString:
        return PauliString(self.x.copy(), self.z.copy(), self.sign)

    def unsigned(self) -> PauliString:
        return PauliString(self.x, self.z, 1)

    def __mul__(self, other: PauliString) -> PauliString:
        if not isinstance(other, PauliString):
            return NotImplemented
        _check_dims(self, other)
        k = phase_exponent(self.x, self.z, other.x, other.z)
        sign = self.sign * other.sign * (-1 if k == 2 else 1)
        return PauliString(self.x ^ other.x, self.z ^ other.z, sign)

    def __neg__(self) -> PauliString:
        return PauliString(self.x, self.z, -self.sign)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.sign == other.sign
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.sign, self.x.tobytes(), self.z.tobytes()))

    def __str__(self) -> str:
        body = "".join(_FROM_BITS[(int(a), int(b))] for a, b in zip(self.x, self.z))
        return ("-" if self.sign < 0 else "+") + body

    def __repr__(self) -> str:
        return f"PauliString('{self}')"


def _check_dims(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n} qubits")


def pauli_commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the symplectic inner product of ``a`` and ``b`` vanishes."""
    _check_dims(a, b)
    return int(np.count_nonzero(a.x & b.z) + np.count_nonzero(a.z & b.x)) % 2 == 0
